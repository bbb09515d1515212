/**
 * Grouped speedup bars: one group per scenario, one bar per backend, with a
 * horizontal line at speedup 1 (the no-gain level).
 */

import { BenchRecord, completedRecords } from "./csv.js";
import {
  HEIGHT,
  MARGIN,
  WIDTH,
  backendColor,
  escapeXml,
  fmt,
  linearScale,
  linearTicks,
  svgDocument,
} from "./svg.js";

export function renderSpeedupChart(records: BenchRecord[]): string {
  const usable = completedRecords(records).filter((r) =>
    Number.isFinite(r.speedupVsReference)
  );
  if (usable.length === 0) {
    throw new Error("no records with a speedup to plot");
  }
  const scenarios = [...new Set(usable.map((r) => r.scenario))].sort();
  const backends = [...new Set(usable.map((r) => r.backend))].sort();

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const maxSpeedup = Math.max(...usable.map((r) => r.speedupVsReference), 1);
  const y = linearScale([0, maxSpeedup * 1.08], [MARGIN.top + plotH, MARGIN.top]);

  const groupW = plotW / scenarios.length;
  const barW = (groupW * 0.7) / backends.length;

  const parts: string[] = [];

  for (const tick of linearTicks([0, maxSpeedup * 1.08])) {
    const ty = y(tick);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(ty)}" x2="${WIDTH - MARGIN.right}" y2="${fmt(
        ty
      )}" stroke="#eeeeee"/>`,
      `<text x="${MARGIN.left - 8}" y="${fmt(ty + 4)}" text-anchor="end" font-size="11">${tick}</text>`
    );
  }

  for (const [gi, scenario] of scenarios.entries()) {
    const gx = MARGIN.left + gi * groupW + groupW * 0.15;
    for (const [bi, backend] of backends.entries()) {
      const rec = usable.find((r) => r.scenario === scenario && r.backend === backend);
      if (!rec) continue;
      const top = y(rec.speedupVsReference);
      const x = gx + bi * barW;
      parts.push(
        `<rect x="${fmt(x)}" y="${fmt(top)}" width="${fmt(barW * 0.9)}" height="${fmt(
          y(0) - top
        )}" fill="${backendColor(backend)}" data-scenario="${escapeXml(
          scenario
        )}" data-backend="${escapeXml(backend)}" data-speedup="${rec.speedupVsReference}"/>`,
        `<text x="${fmt(x + barW * 0.45)}" y="${fmt(top - 4)}" text-anchor="middle" font-size="10">${
          rec.speedupVsReference >= 10
            ? rec.speedupVsReference.toFixed(0)
            : rec.speedupVsReference.toFixed(1)
        }</text>`
      );
    }
    parts.push(
      `<text x="${fmt(MARGIN.left + gi * groupW + groupW / 2)}" y="${
        HEIGHT - MARGIN.bottom + 20
      }" text-anchor="middle" font-size="12">${escapeXml(scenario)}</text>`
    );
  }

  // the no-speedup level
  parts.push(
    `<line class="unity-line" x1="${MARGIN.left}" y1="${fmt(y(1))}" x2="${
      WIDTH - MARGIN.right
    }" y2="${fmt(y(1))}" stroke="#333333" stroke-dasharray="6,3"/>`
  );

  for (const [bi, backend] of backends.entries()) {
    const lx = MARGIN.left + bi * 130;
    const ly = HEIGHT - 18;
    parts.push(
      `<rect x="${lx}" y="${ly - 10}" width="12" height="12" fill="${backendColor(backend)}"/>`,
      `<text x="${lx + 18}" y="${ly}" font-size="12">${escapeXml(backend)}</text>`
    );
  }
  parts.push(
    `<text transform="rotate(-90)" x="${-(MARGIN.top + plotH / 2)}" y="22" text-anchor="middle" font-size="12">speedup vs reference backend</text>`
  );

  return svgDocument(parts.join("\n"), "Kernel speedup by backend");
}
