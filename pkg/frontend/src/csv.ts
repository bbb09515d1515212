/**
 * Bench CSV parsing (the schema emitted by `vecdock bench`).
 */

export interface BenchRecord {
  scenario: string;
  backend: string;
  threads: number;
  meanMs: number;
  stddevMs: number;
  cv: number;
  ligandsPerS: number;
  modeledFlops: number;
  modeledBytes: number;
  modeledAi: number;
  speedupVsReference: number;
  nSamples: number;
  laneUtilization: number;
  status: string;
}

const REQUIRED_COLUMNS = [
  "scenario",
  "backend",
  "threads",
  "mean_ms",
  "stddev_ms",
  "cv",
  "ligands_per_s",
  "modeled_flops",
  "modeled_bytes",
  "modeled_ai",
  "speedup_vs_reference",
  "n_samples",
  "lane_utilization",
  "status",
] as const;

function splitCsvLine(line: string): string[] {
  // the emitter never quotes; a plain split is the whole grammar
  return line.split(",");
}

export function parseBenchCsv(text: string): BenchRecord[] {
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    throw new Error("no records: CSV is empty");
  }
  const header = splitCsvLine(lines[0]);
  const missing = REQUIRED_COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new Error(`missing column(s): ${missing.join(", ")}`);
  }
  const col = new Map(header.map((name, idx) => [name, idx]));
  const num = (fields: string[], name: string) => Number(fields[col.get(name)!]);

  const records: BenchRecord[] = [];
  for (const line of lines.slice(1)) {
    const f = splitCsvLine(line);
    records.push({
      scenario: f[col.get("scenario")!],
      backend: f[col.get("backend")!],
      threads: num(f, "threads"),
      meanMs: num(f, "mean_ms"),
      stddevMs: num(f, "stddev_ms"),
      cv: num(f, "cv"),
      ligandsPerS: num(f, "ligands_per_s"),
      modeledFlops: num(f, "modeled_flops"),
      modeledBytes: num(f, "modeled_bytes"),
      modeledAi: num(f, "modeled_ai"),
      speedupVsReference: num(f, "speedup_vs_reference"),
      nSamples: num(f, "n_samples"),
      laneUtilization: num(f, "lane_utilization"),
      status: f[col.get("status")!],
    });
  }
  if (records.length === 0) {
    throw new Error("no records: CSV has a header but no rows");
  }
  return records;
}

/** Rows usable for plotting: completed runs with finite numbers. */
export function completedRecords(records: BenchRecord[]): BenchRecord[] {
  return records.filter((r) => r.status === "ok" && Number.isFinite(r.meanMs));
}
