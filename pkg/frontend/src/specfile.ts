/**
 * Machine-spec files: plain key = value lines, '#' comments.
 *
 *   name = desk-x86
 *   peak_gflops = 38.4
 *   peak_gbs = 25.6          # main memory bandwidth (the roofline slope)
 *   peak_gbs_l2 = 180.0      # optional extra levels, drawn as dashed slopes
 */

export interface MachineSpec {
  name: string;
  peakGflops: number;
  peakGbs: number;
  extraBandwidths: { label: string; gbs: number }[];
}

export function parseMachineSpec(text: string): MachineSpec {
  const entries = new Map<string, string>();
  for (const raw of text.split(/\r?\n/)) {
    const line = raw.split("#", 1)[0].trim();
    if (!line) continue;
    const eq = line.indexOf("=");
    if (eq < 0) {
      throw new Error(`machine spec: expected key = value, got ${JSON.stringify(raw)}`);
    }
    entries.set(line.slice(0, eq).trim(), line.slice(eq + 1).trim());
  }
  const peakGflops = Number(entries.get("peak_gflops"));
  const peakGbs = Number(entries.get("peak_gbs"));
  if (!Number.isFinite(peakGflops) || peakGflops <= 0) {
    throw new Error(`machine spec: peak_gflops must be > 0, got ${entries.get("peak_gflops")}`);
  }
  if (!Number.isFinite(peakGbs) || peakGbs <= 0) {
    throw new Error(`machine spec: peak_gbs must be > 0, got ${entries.get("peak_gbs")}`);
  }
  const extraBandwidths: { label: string; gbs: number }[] = [];
  for (const [key, value] of entries) {
    if (key.startsWith("peak_gbs_")) {
      const gbs = Number(value);
      if (!Number.isFinite(gbs) || gbs <= 0) {
        throw new Error(`machine spec: ${key} must be > 0, got ${value}`);
      }
      extraBandwidths.push({ label: key.slice("peak_gbs_".length), gbs });
    }
  }
  extraBandwidths.sort((a, b) => a.label.localeCompare(b.label));
  return {
    name: entries.get("name") ?? "machine",
    peakGflops,
    peakGbs,
    extraBandwidths,
  };
}
