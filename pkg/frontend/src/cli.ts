#!/usr/bin/env node
/**
 * vecdock-report: figures from vecdock bench CSVs.
 *
 *   vecdock-report speedup  --csv bench.csv --out speedup.svg
 *   vecdock-report roofline --csv bench.csv --spec machine.spec --out roofline.svg
 */

import { readFileSync, writeFileSync } from "node:fs";
import process from "node:process";

import { parseBenchCsv } from "./csv.js";
import { renderRooflineChart } from "./roofline.js";
import { renderSpeedupChart } from "./speedup.js";
import { parseMachineSpec } from "./specfile.js";

const USAGE = `usage:
  vecdock-report speedup  --csv <bench.csv> --out <image.svg>
  vecdock-report roofline --csv <bench.csv> --spec <machine.spec> --out <image.svg>`;

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key?.startsWith("--") || value === undefined) {
      throw new Error(`bad arguments near ${JSON.stringify(key)}\n${USAGE}`);
    }
    flags.set(key.slice(2), value);
  }
  return flags;
}

function requireFlag(flags: Map<string, string>, name: string): string {
  const v = flags.get(name);
  if (!v) throw new Error(`missing --${name}\n${USAGE}`);
  return v;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (!command || command === "--help" || command === "-h") {
    console.log(USAGE);
    return command ? 0 : 2;
  }
  const flags = parseFlags(rest);
  const records = parseBenchCsv(readFileSync(requireFlag(flags, "csv"), "utf-8"));
  let svg: string;
  if (command === "speedup") {
    svg = renderSpeedupChart(records);
  } else if (command === "roofline") {
    const spec = parseMachineSpec(readFileSync(requireFlag(flags, "spec"), "utf-8"));
    svg = renderRooflineChart(records, spec);
  } else {
    throw new Error(`unknown command ${JSON.stringify(command)}\n${USAGE}`);
  }
  const out = requireFlag(flags, "out");
  writeFileSync(out, svg);
  console.log(`wrote ${out}`);
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(1);
  }
}
