/**
 * Small deterministic SVG helpers (no timestamps, fixed number formatting).
 */

export const WIDTH = 760;
export const HEIGHT = 440;
export const MARGIN = { top: 40, right: 30, bottom: 64, left: 72 };

export function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  const s = v.toFixed(3);
  return s === "-0.000" ? "0.000" : s;
}

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const f = ((v: number) => r0 + ((v - d0) / (d1 - d0)) * (r1 - r0)) as Scale;
  f.domain = domain;
  f.range = range;
  return f;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const l0 = Math.log10(d0);
  const l1 = Math.log10(d1);
  const f = ((v: number) => r0 + ((Math.log10(v) - l0) / (l1 - l0)) * (r1 - r0)) as Scale;
  f.domain = domain;
  f.range = range;
  return f;
}

/** Powers of ten covering the domain (for log axes). */
export function decadeTicks(domain: [number, number]): number[] {
  const lo = Math.floor(Math.log10(domain[0]));
  const hi = Math.ceil(Math.log10(domain[1]));
  const out: number[] = [];
  for (let e = lo; e <= hi; e++) out.push(10 ** e);
  return out;
}

export function linearTicks(domain: [number, number], count = 6): number[] {
  const span = domain[1] - domain[0];
  const step = 10 ** Math.floor(Math.log10(span / count));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((s) => span / s <= count) ?? 10 * step;
  const out: number[] = [];
  for (let v = Math.ceil(domain[0] / chosen) * chosen; v <= domain[1] + 1e-12; v += chosen) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

export function tickLabel(v: number): string {
  if (v === 0) return "0";
  const exp = Math.log10(Math.abs(v));
  if (Number.isInteger(exp) && (exp >= 4 || exp <= -2)) {
    return `1e${exp}`;
  }
  if (Math.abs(v) >= 1000) return v.toLocaleString("en-US");
  return `${v}`;
}

export function svgDocument(body: string, title: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16">${escapeXml(title)}</text>`,
    body,
    `</svg>`,
    "",
  ].join("\n");
}

export const BACKEND_COLORS: Record<string, string> = {
  reference: "#9e9e9e",
  scalar: "#4878cf",
  simd: "#d65f5f",
};

export function backendColor(name: string): string {
  return BACKEND_COLORS[name] ?? "#6acc65";
}
