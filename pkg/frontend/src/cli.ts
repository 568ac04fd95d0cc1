#!/usr/bin/env node
/**
 * Figure renderer for experiment run outputs.
 *
 * Usage:
 *   cli.js gaps       --run run.csv --out gaps.svg [--bounds bounds.json] [--log-scale]
 *   cli.js measures   --run run.csv --out measures.svg [--certificates certs.json] [--log-scale]
 *   cli.js comparison --run run.csv --baseline baseline.json --out cmp.svg [--log-scale]
 *
 * Exit codes: 0 success, 1 usage error, 2 input schema/data error.
 */

import { pathToFileURL } from "node:url";

import { SchemaError } from "./csv.js";
import { FigureKind, FigureSpec, renderReport } from "./figures.js";

const KINDS: FigureKind[] = ["gaps", "measures", "comparison"];

class UsageError extends Error {}

export function parseArgs(argv: string[]): FigureSpec {
  if (argv.length === 0) {
    throw new UsageError(
      `missing figure kind; expected one of: ${KINDS.join(", ")}`,
    );
  }
  const kind = argv[0] as FigureKind;
  if (!KINDS.includes(kind)) {
    throw new UsageError(
      `unknown figure kind '${argv[0]}'; expected one of: ${KINDS.join(", ")}`,
    );
  }
  const flags = new Map<string, string>();
  let logScale = false;
  for (let i = 1; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--log-scale") {
      logScale = true;
      continue;
    }
    if (!arg.startsWith("--")) {
      throw new UsageError(`unexpected positional argument '${arg}'`);
    }
    const value = argv[i + 1];
    if (value === undefined || value.startsWith("--")) {
      throw new UsageError(`flag ${arg} needs a value`);
    }
    flags.set(arg.slice(2), value);
    i++;
  }
  const known = new Set(["run", "out", "baseline", "bounds", "certificates"]);
  for (const key of flags.keys()) {
    if (!known.has(key)) {
      throw new UsageError(`unknown flag --${key}`);
    }
  }
  const runPath = flags.get("run");
  const outPath = flags.get("out");
  if (!runPath) throw new UsageError("--run is required");
  if (!outPath) throw new UsageError("--out is required");
  if (kind === "comparison" && !flags.get("baseline")) {
    throw new UsageError("comparison figures require --baseline");
  }
  return {
    kind,
    runPath,
    outPath,
    logScale,
    baselinePath: flags.get("baseline"),
    boundsPath: flags.get("bounds"),
    certificatesPath: flags.get("certificates"),
  };
}

export function runCli(argv: string[]): number {
  let spec: FigureSpec;
  try {
    spec = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`usage error: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    renderReport(spec);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`input error: ${err.message}\n`);
      return 2;
    }
    if ((err as NodeJS.ErrnoException).code === "ENOENT") {
      process.stderr.write(
        `input error: file not found: ${(err as NodeJS.ErrnoException).path}\n`,
      );
      return 2;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;

if (invokedDirectly) {
  process.exit(runCli(process.argv.slice(2)));
}
