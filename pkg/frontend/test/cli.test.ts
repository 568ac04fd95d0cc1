import { existsSync, mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { runCli } from "../src/cli.js";

const FIXTURES = join(__dirname, "fixtures");
const RUN = join(FIXTURES, "run.csv");

function tmp(name: string): string {
  return join(mkdtempSync(join(tmpdir(), "plots-cli-")), name);
}

describe("runCli", () => {
  it("renders a gaps figure", () => {
    const out = tmp("gaps.svg");
    expect(runCli(["gaps", "--run", RUN, "--out", out])).toBe(0);
    expect(existsSync(out)).toBe(true);
  });

  it("renders a comparison figure with log scale", () => {
    const out = tmp("cmp.svg");
    const code = runCli([
      "comparison",
      "--run", RUN,
      "--baseline", join(FIXTURES, "baseline.json"),
      "--out", out,
      "--log-scale",
    ]);
    expect(code).toBe(0);
    expect(existsSync(out)).toBe(true);
  });

  it("usage errors exit 1", () => {
    expect(runCli([])).toBe(1);
    expect(runCli(["histogram", "--run", RUN, "--out", tmp("x.svg")])).toBe(1);
    expect(runCli(["gaps", "--out", tmp("x.svg")])).toBe(1);
    expect(runCli(["comparison", "--run", RUN, "--out", tmp("x.svg")])).toBe(1);
    expect(runCli(["gaps", "--run", RUN, "--out", tmp("x.svg"), "--wat", "1"]),
    ).toBe(1);
  });

  it("missing input files exit 2", () => {
    expect(
      runCli(["gaps", "--run", join(FIXTURES, "ghost.csv"), "--out", tmp("x.svg")]),
    ).toBe(2);
  });
});
