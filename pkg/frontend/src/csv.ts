/**
 * Parser for the run log CSV emitted by the experiment harness.
 *
 * Schema: `iter,task_id,J,gap,grad_avg_norm,rho_max,b_i`, one row per
 * (logged iteration, task). The b_i field is empty except at heterogeneity
 * checkpoints.
 */

export const RUN_CSV_COLUMNS = [
  "iter",
  "task_id",
  "J",
  "gap",
  "grad_avg_norm",
  "rho_max",
  "b_i",
] as const;

export interface RunRow {
  iter: number;
  taskId: string;
  J: number;
  gap: number;
  gradAvgNorm: number;
  rhoMax: number;
  /** Heterogeneity value at a checkpoint, or null when not computed. */
  b: number | null;
}

/** Input file does not match a documented schema. */
export class SchemaError extends Error {}

function parseNumber(field: string, raw: string, line: number): number {
  const value = Number(raw);
  if (raw.trim() === "" || !Number.isFinite(value)) {
    throw new SchemaError(
      `run.csv line ${line}: column '${field}' is not a finite number: '${raw}'`,
    );
  }
  return value;
}

export function parseRunCsv(text: string): RunRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("run.csv is empty");
  }
  const header = lines[0].split(",");
  const expected = RUN_CSV_COLUMNS.join(",");
  if (header.join(",") !== expected) {
    throw new SchemaError(
      `run.csv column mismatch: expected '${expected}', got '${lines[0]}'`,
    );
  }
  const rows: RunRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== RUN_CSV_COLUMNS.length) {
      throw new SchemaError(
        `run.csv line ${i + 1}: expected ${RUN_CSV_COLUMNS.length} fields, ` +
          `got ${parts.length}`,
      );
    }
    rows.push({
      iter: parseNumber("iter", parts[0], i + 1),
      taskId: parts[1],
      J: parseNumber("J", parts[2], i + 1),
      gap: parseNumber("gap", parts[3], i + 1),
      gradAvgNorm: parseNumber("grad_avg_norm", parts[4], i + 1),
      rhoMax: parseNumber("rho_max", parts[5], i + 1),
      b: parts[6] === "" ? null : parseNumber("b_i", parts[6], i + 1),
    });
  }
  return rows;
}

/** Task ids in order of first appearance. */
export function taskIds(rows: RunRow[]): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const row of rows) {
    if (!seen.has(row.taskId)) {
      seen.add(row.taskId);
      out.push(row.taskId);
    }
  }
  return out;
}
