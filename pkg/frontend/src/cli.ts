#!/usr/bin/env node
/**
 * plot --in results.csv --out fig1.svg [--logx]
 *
 * Renders the rate-distortion figure from a harness result CSV.
 * Exit codes: 0 success, 1 usage error, 2 runtime failure.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";

import { CsvError, parseResultsCsv } from "./csv.js";
import { renderFigure } from "./figure.js";

export interface PlotArgs {
  input: string;
  output: string;
  logx: boolean;
}

export function parseArgs(argv: string[]): PlotArgs {
  const args = argv[0] === "plot" ? argv.slice(1) : argv.slice();
  let input: string | undefined;
  let output: string | undefined;
  let logx = false;
  for (let i = 0; i < args.length; i++) {
    const a = args[i];
    if (a === "--in") input = args[++i];
    else if (a === "--out") output = args[++i];
    else if (a === "--logx") logx = true;
    else throw new UsageError(`unknown argument: ${a}`);
  }
  if (!input || !output) {
    throw new UsageError("usage: plot --in results.csv --out fig1.svg [--logx]");
  }
  return { input, output, logx };
}

export class UsageError extends Error {}

export function run(argv: string[]): number {
  let parsed: PlotArgs;
  try {
    parsed = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  try {
    const rows = parseResultsCsv(readFileSync(parsed.input, "utf-8"));
    const svg = renderFigure(rows, { logx: parsed.logx });
    writeFileSync(parsed.output, svg, "utf-8");
    const curves = (svg.match(/class="curve"/g) ?? []).length;
    console.log(`wrote ${curves} curve(s) -> ${parsed.output}`);
    return 0;
  } catch (err) {
    if (err instanceof CsvError) console.error(`error: ${err.message}`);
    else console.error(`error: ${(err as Error).message}`);
    return 2;
  }
}

if (process.argv[1] !== undefined &&
    import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(run(process.argv.slice(2)));
}
