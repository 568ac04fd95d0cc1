/**
 * Figure assembly: reads experiment outputs, builds the requested figure,
 * writes an SVG file. Inputs are never modified.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { parseRunCsv, RunRow, SchemaError } from "./csv.js";
import {
  gapSeries,
  maxMeasureSeries,
  measureSeries,
  parseBaseline,
  Series,
} from "./data.js";
import { meanReductionPercent } from "./reduction.js";
import { renderFigure } from "./svg.js";

export type FigureKind = "gaps" | "measures" | "comparison";

export interface FigureSpec {
  kind: FigureKind;
  runPath: string;
  outPath: string;
  logScale?: boolean;
  /** Baseline heterogeneity series (required for comparison figures). */
  baselinePath?: string;
  /** Optional bound report; adds a pass/fail caption to gaps figures. */
  boundsPath?: string;
  /** Optional certificate file; adds a caption to measures figures. */
  certificatesPath?: string;
}

function loadRun(path: string): RunRow[] {
  return parseRunCsv(readFileSync(path, "utf8"));
}

function loadJson(path: string, what: string): unknown {
  try {
    return JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new SchemaError(`${what} at ${path} is not valid JSON: ${err}`);
  }
}

interface BoundEntry {
  task_id: string;
  gap: number;
  b_i: number;
  passed: boolean;
}

function loadBounds(path: string): BoundEntry[] {
  const doc = loadJson(path, "bound report") as Record<string, unknown>;
  if (!Array.isArray(doc?.tasks)) {
    throw new SchemaError(`bound report at ${path} is missing the 'tasks' array`);
  }
  return (doc.tasks as unknown[]).map((item, idx) => {
    const entry = item as Record<string, unknown>;
    for (const key of ["task_id", "gap", "b_i", "passed"]) {
      if (!(key in entry)) {
        throw new SchemaError(`bound entry ${idx} is missing column '${key}'`);
      }
    }
    return entry as unknown as BoundEntry;
  });
}

function loadCertificates(path: string): { count: number; worstSlack: number } {
  const doc = loadJson(path, "certificate file");
  if (!Array.isArray(doc)) {
    throw new SchemaError(`certificate file at ${path} must be a JSON array`);
  }
  let worst = 0;
  doc.forEach((item, idx) => {
    const cert = item as Record<string, unknown>;
    for (const key of ["i", "j", "lambda", "value", "method", "feas_slack", "M"]) {
      if (!(key in cert)) {
        throw new SchemaError(`certificate ${idx} is missing key '${key}'`);
      }
    }
    worst = Math.max(worst, cert.feas_slack as number);
  });
  return { count: doc.length, worstSlack: worst };
}

function gapsFigure(spec: FigureSpec): string {
  const rows = loadRun(spec.runPath);
  const annotations: string[] = [];
  if (spec.boundsPath) {
    const entries = loadBounds(spec.boundsPath);
    const failed = entries.filter((e) => !e.passed).map((e) => e.task_id);
    annotations.push(
      failed.length === 0
        ? `certified suboptimality bounds hold for all ${entries.length} tasks`
        : `certified bounds FAILED for: ${failed.join(", ")}`,
    );
  }
  return renderFigure({
    title: "Optimality gaps along policy gradient",
    xLabel: "iteration",
    yLabel: "J_i(K_n) - J_i(K_i*)",
    series: gapSeries(rows),
    logY: spec.logScale,
    annotations,
  });
}

function measuresFigure(spec: FigureSpec): string {
  const rows = loadRun(spec.runPath);
  const annotations: string[] = [];
  if (spec.certificatesPath) {
    const { count, worstSlack } = loadCertificates(spec.certificatesPath);
    annotations.push(
      `${count} pair certificates at the final controller, ` +
        `worst residual ${worstSlack.toExponential(2)}`,
    );
  }
  return renderFigure({
    title: "Bisimulation heterogeneity along policy gradient",
    xLabel: "iteration",
    yLabel: "b_i(K_n)",
    series: measureSeries(rows),
    logY: spec.logScale,
    annotations,
  });
}

function comparisonFigure(spec: FigureSpec): string {
  if (!spec.baselinePath) {
    throw new SchemaError("comparison figures need a baseline series file");
  }
  const rows = loadRun(spec.runPath);
  const ours = maxMeasureSeries(rows);
  const checkpoints = ours.points.map((p) => p.x);
  const baseline = parseBaseline(
    loadJson(spec.baselinePath, "baseline series"),
    checkpoints,
  );
  const baselineSeries: Series = {
    label: "baseline bound",
    points: baseline.map((e) => ({ x: e.iter, y: e.value })),
  };
  const reduction = meanReductionPercent(
    ours.points.map((p) => p.y),
    baseline.map((e) => e.value),
  );
  return renderFigure({
    title: "Certified heterogeneity vs baseline bound",
    xLabel: "iteration",
    yLabel: "gradient-gap bound",
    series: [ours, baselineSeries],
    logY: spec.logScale,
    dashed: new Set(["baseline bound"]),
    annotations: [`mean reduction vs baseline: ${reduction.toFixed(6)}%`],
  });
}

/** Render the figure described by the spec and write it to spec.outPath. */
export function renderReport(spec: FigureSpec): string {
  let svg: string;
  switch (spec.kind) {
    case "gaps":
      svg = gapsFigure(spec);
      break;
    case "measures":
      svg = measuresFigure(spec);
      break;
    case "comparison":
      svg = comparisonFigure(spec);
      break;
    default:
      throw new SchemaError(`unknown figure kind '${String(spec.kind)}'`);
  }
  writeFileSync(spec.outPath, svg, "utf8");
  return svg;
}
