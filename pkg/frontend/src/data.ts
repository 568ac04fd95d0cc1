/** Series extraction from parsed run logs. */

import { RunRow, SchemaError, taskIds } from "./csv.js";

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  points: Point[];
}

/** Per-task optimality-gap curves over iterations, one series per task id. */
export function gapSeries(rows: RunRow[]): Series[] {
  return taskIds(rows).map((id) => ({
    label: id,
    points: rows
      .filter((row) => row.taskId === id)
      .map((row) => ({ x: row.iter, y: row.gap })),
  }));
}

/**
 * Per-task heterogeneity curves at the checkpoints where b_i was computed.
 * An entirely empty b_i column is an input error, not an empty figure.
 */
export function measureSeries(rows: RunRow[]): Series[] {
  const series = taskIds(rows).map((id) => ({
    label: id,
    points: rows
      .filter((row) => row.taskId === id && row.b !== null)
      .map((row) => ({ x: row.iter, y: row.b as number })),
  }));
  if (series.every((s) => s.points.length === 0)) {
    throw new SchemaError(
      "run.csv column 'b_i' is empty everywhere: the run was logged without " +
        "heterogeneity checkpoints, so a measures figure cannot be rendered",
    );
  }
  return series;
}

/** Worst-task heterogeneity max_i b_i at every checkpoint iteration. */
export function maxMeasureSeries(rows: RunRow[]): Series {
  const byIter = new Map<number, number>();
  for (const row of rows) {
    if (row.b === null) continue;
    const current = byIter.get(row.iter);
    byIter.set(row.iter, current === undefined ? row.b : Math.max(current, row.b));
  }
  if (byIter.size === 0) {
    throw new SchemaError(
      "run.csv column 'b_i' is empty everywhere: cannot build the " +
        "worst-task heterogeneity series",
    );
  }
  const points = [...byIter.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([x, y]) => ({ x, y }));
  return { label: "max_i b_i", points };
}

export interface BaselineEntry {
  iter: number;
  value: number;
}

/**
 * Baseline heterogeneity series: either a plain JSON array of numbers
 * (aligned one-to-one with our checkpoints) or an array of
 * {iter, value} objects on the same checkpoint grid.
 */
export function parseBaseline(
  doc: unknown,
  checkpoints: number[],
): BaselineEntry[] {
  if (!Array.isArray(doc) || doc.length === 0) {
    throw new SchemaError("baseline file must be a nonempty JSON array");
  }
  let entries: BaselineEntry[];
  if (typeof doc[0] === "number") {
    if (doc.length !== checkpoints.length) {
      throw new SchemaError(
        `baseline series has ${doc.length} entries but the run has ` +
          `${checkpoints.length} heterogeneity checkpoints`,
      );
    }
    entries = (doc as number[]).map((value, idx) => ({
      iter: checkpoints[idx],
      value,
    }));
  } else {
    entries = (doc as unknown[]).map((item, idx) => {
      const obj = item as Record<string, unknown>;
      if (typeof obj?.iter !== "number" || typeof obj?.value !== "number") {
        throw new SchemaError(
          `baseline entry ${idx} must be {iter: number, value: number}`,
        );
      }
      return { iter: obj.iter, value: obj.value };
    });
    const have = new Set(entries.map((e) => e.iter));
    const missing = checkpoints.filter((it) => !have.has(it));
    if (missing.length > 0) {
      throw new SchemaError(
        `baseline series is missing checkpoints: ${missing.join(", ")}`,
      );
    }
    entries = entries
      .filter((e) => checkpoints.includes(e.iter))
      .sort((a, b) => a.iter - b.iter);
  }
  for (const entry of entries) {
    if (!Number.isFinite(entry.value) || entry.value <= 0) {
      throw new SchemaError(
        `baseline values must be strictly positive, got ${entry.value} ` +
          `at iteration ${entry.iter}`,
      );
    }
  }
  return entries;
}
