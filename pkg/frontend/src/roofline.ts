/**
 * Log-log roofline: memory-bandwidth slope and flat compute roof from the
 * machine spec, one point per bench record (x = modeled arithmetic
 * intensity in flop/byte, y = achieved Mflop/s).
 */

import { BenchRecord, completedRecords } from "./csv.js";
import { MachineSpec } from "./specfile.js";
import {
  HEIGHT,
  MARGIN,
  WIDTH,
  backendColor,
  decadeTicks,
  escapeXml,
  fmt,
  logScale,
  svgDocument,
  tickLabel,
} from "./svg.js";

export interface RooflinePoint {
  record: BenchRecord;
  ai: number;
  mflops: number;
}

export function achievedMflops(record: BenchRecord): number {
  return record.modeledFlops / (record.meanMs / 1e3) / 1e6;
}

export function renderRooflineChart(records: BenchRecord[], spec: MachineSpec): string {
  if (!(spec.peakGflops > 0) || !(spec.peakGbs > 0)) {
    throw new Error(
      `machine spec peaks must be > 0 (peak_gflops=${spec.peakGflops}, peak_gbs=${spec.peakGbs})`
    );
  }
  const usable = completedRecords(records).filter(
    (r) => Number.isFinite(r.modeledAi) && r.modeledAi > 0 && r.meanMs > 0
  );
  if (usable.length === 0) {
    throw new Error("no records with arithmetic intensity to plot");
  }
  const points: RooflinePoint[] = usable.map((record) => ({
    record,
    ai: record.modeledAi,
    mflops: achievedMflops(record),
  }));

  const computeRoofM = spec.peakGflops * 1e3; // Mflop/s
  const ridge = spec.peakGflops / spec.peakGbs; // flop/byte
  const ais = points.map((p) => p.ai);
  const ys = points.map((p) => p.mflops);
  const xDomain: [number, number] = [
    Math.min(...ais, ridge) / 4,
    Math.max(...ais, ridge) * 4,
  ];
  const yDomain: [number, number] = [
    Math.min(...ys, computeRoofM) / 10,
    Math.max(...ys, computeRoofM) * 2,
  ];

  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const x = logScale(xDomain, [MARGIN.left, WIDTH - MARGIN.right]);
  const y = logScale(yDomain, [MARGIN.top + plotH, MARGIN.top]);

  const parts: string[] = [];

  for (const tick of decadeTicks(xDomain)) {
    if (tick < xDomain[0] || tick > xDomain[1]) continue;
    parts.push(
      `<line x1="${fmt(x(tick))}" y1="${MARGIN.top}" x2="${fmt(x(tick))}" y2="${
        MARGIN.top + plotH
      }" stroke="#eeeeee"/>`,
      `<text x="${fmt(x(tick))}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" font-size="11">${tickLabel(
        tick
      )}</text>`
    );
  }
  for (const tick of decadeTicks(yDomain)) {
    if (tick < yDomain[0] || tick > yDomain[1]) continue;
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(y(tick))}" x2="${WIDTH - MARGIN.right}" y2="${fmt(
        y(tick)
      )}" stroke="#eeeeee"/>`,
      `<text x="${MARGIN.left - 8}" y="${fmt(y(tick) + 4)}" text-anchor="end" font-size="11">${tickLabel(
        tick
      )}</text>`
    );
  }

  const slopeM = (gbs: number, ai: number) => ai * gbs * 1e3; // Mflop/s

  // main memory slope: from the left edge up to the ridge point
  const xStart = xDomain[0];
  parts.push(
    `<line class="memory-roof" x1="${fmt(x(xStart))}" y1="${fmt(
      y(slopeM(spec.peakGbs, xStart))
    )}" x2="${fmt(x(ridge))}" y2="${fmt(y(computeRoofM))}" stroke="#222222" stroke-width="1.5"/>`
  );
  // flat compute roof from the ridge point rightward
  parts.push(
    `<line class="compute-roof" x1="${fmt(x(ridge))}" y1="${fmt(y(computeRoofM))}" x2="${fmt(
      x(xDomain[1])
    )}" y2="${fmt(y(computeRoofM))}" stroke="#222222" stroke-width="1.5"/>`
  );
  parts.push(
    `<circle class="ridge" cx="${fmt(x(ridge))}" cy="${fmt(
      y(computeRoofM)
    )}" r="3.5" fill="#222222" data-ridge-x="${ridge}"/>`,
    `<text x="${fmt(x(ridge))}" y="${fmt(y(computeRoofM) - 10)}" text-anchor="middle" font-size="11">ridge ${ridge.toFixed(
      2
    )} flop/B</text>`
  );

  for (const extra of spec.extraBandwidths) {
    const ridgeExtra = (spec.peakGflops / extra.gbs) as number;
    const xEnd = Math.min(ridgeExtra, xDomain[1]);
    parts.push(
      `<line class="memory-roof-extra" x1="${fmt(x(xStart))}" y1="${fmt(
        y(slopeM(extra.gbs, xStart))
      )}" x2="${fmt(x(xEnd))}" y2="${fmt(
        y(slopeM(extra.gbs, xEnd))
      )}" stroke="#888888" stroke-dasharray="4,3"/>`,
      `<text x="${fmt(x(xStart) + 4)}" y="${fmt(y(slopeM(extra.gbs, xStart)) - 6)}" font-size="10" fill="#666666">${escapeXml(
        extra.label
      )}</text>`
    );
  }

  for (const p of points) {
    parts.push(
      `<circle class="sample" cx="${fmt(x(p.ai))}" cy="${fmt(y(p.mflops))}" r="4" fill="${backendColor(
        p.record.backend
      )}" data-backend="${escapeXml(p.record.backend)}" data-scenario="${escapeXml(
        p.record.scenario
      )}" data-ai="${p.ai}" data-mflops="${p.mflops}"/>`
    );
  }

  const seen = [...new Set(points.map((p) => p.record.backend))].sort();
  for (const [bi, backend] of seen.entries()) {
    const lx = MARGIN.left + bi * 130;
    const ly = HEIGHT - 18;
    parts.push(
      `<circle cx="${lx + 6}" cy="${ly - 4}" r="4" fill="${backendColor(backend)}"/>`,
      `<text x="${lx + 18}" y="${ly}" font-size="12">${escapeXml(backend)}</text>`
    );
  }
  parts.push(
    `<text x="${WIDTH / 2}" y="${HEIGHT - MARGIN.bottom + 40}" text-anchor="middle" font-size="12">arithmetic intensity (flop/byte, modeled)</text>`,
    `<text transform="rotate(-90)" x="${-(MARGIN.top + plotH / 2)}" y="22" text-anchor="middle" font-size="12">Mflop/s</text>`
  );

  return svgDocument(parts.join("\n"), `Roofline: ${spec.name}`);
}
