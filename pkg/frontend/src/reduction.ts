/** Mean percentage reduction of one series relative to a baseline. */

import { SchemaError } from "./csv.js";

export function meanReductionPercent(
  ours: number[],
  baseline: number[],
): number {
  if (ours.length !== baseline.length) {
    throw new SchemaError(
      `series length mismatch: ${ours.length} vs ${baseline.length}`,
    );
  }
  if (ours.length === 0) {
    throw new SchemaError("series must be nonempty");
  }
  let total = 0;
  for (let i = 0; i < ours.length; i++) {
    if (!(baseline[i] > 0)) {
      throw new SchemaError(
        `baseline entries must be strictly positive, got ${baseline[i]}`,
      );
    }
    total += (1 - ours[i] / baseline[i]) * 100;
  }
  return total / ours.length;
}
