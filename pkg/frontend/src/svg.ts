/**
 * Minimal deterministic SVG line-figure builder.
 *
 * No timestamps, no randomness, fixed styling: identical inputs yield
 * byte-identical markup.
 */

import { Series } from "./data.js";
import { SchemaError } from "./csv.js";

const WIDTH = 640;
const HEIGHT = 440;
const MARGIN = { top: 48, right: 24, bottom: 84, left: 76 };

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

export interface FigureOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  logY?: boolean;
  /** Extra caption lines rendered under the plot area. */
  annotations?: string[];
  dashed?: Set<string>;
}

export function fmtTick(x: number): string {
  if (x === 0) return "0";
  const mag = Math.abs(x);
  if (mag >= 1e4 || mag < 1e-3) {
    return x.toExponential(1).replace("e+", "e");
  }
  return String(Number(x.toPrecision(4)));
}

function linTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / count;
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const candidates = [1, 2, 5, 10].map((m) => m * power);
  const step = candidates.find((c) => (hi - lo) / c <= count) ?? candidates[3];
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * step; t += step) {
    ticks.push(Math.abs(t) < 1e-12 * step ? 0 : t);
  }
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let p = Math.ceil(Math.log10(lo) - 1e-12); Math.pow(10, p) <= hi * (1 + 1e-12); p++) {
    ticks.push(Math.pow(10, p));
  }
  return ticks.length > 0 ? ticks : [lo];
}

export function renderFigure(opts: FigureOptions): string {
  const kept = opts.series.filter((s) => s.points.length > 0);
  if (kept.length === 0) {
    throw new SchemaError("no data points to plot");
  }
  const xs = kept.flatMap((s) => s.points.map((p) => p.x));
  let ys = kept.flatMap((s) => s.points.map((p) => p.y));

  let yFloor = 0;
  if (opts.logY) {
    const positive = ys.filter((y) => y > 0);
    if (positive.length === 0) {
      throw new SchemaError("log scale requires at least one positive value");
    }
    // nonpositive values cannot appear on a log axis; pin them to a floor a
    // decade below the smallest positive value
    yFloor = Math.min(...positive) / 10;
    ys = ys.map((y) => (y > 0 ? y : yFloor));
  }

  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yLoRaw = Math.min(...ys);
  const yHiRaw = Math.max(...ys);
  const yPad = opts.logY ? 0 : 0.05 * (yHiRaw - yLoRaw || Math.abs(yHiRaw) || 1);
  const yLo = opts.logY ? yLoRaw : yLoRaw - yPad;
  const yHi = opts.logY ? yHiRaw : yHiRaw + yPad;

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) =>
    MARGIN.left + (xHi === xLo ? 0.5 * plotW : ((x - xLo) / (xHi - xLo)) * plotW);
  const sy = (y: number) => {
    if (opts.logY) {
      const clamped = Math.max(y, yFloor);
      const span = Math.log10(yHi) - Math.log10(yLo) || 1;
      return (
        MARGIN.top + plotH - ((Math.log10(clamped) - Math.log10(yLo)) / span) * plotH
      );
    }
    const span = yHi - yLo || 1;
    return MARGIN.top + plotH - ((y - yLo) / span) * plotH;
  };

  const px = (v: number) => v.toFixed(2);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
      `font-family="Helvetica, Arial, sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="15">` +
      `${escapeXml(opts.title)}</text>`,
  );

  // axes
  const x0 = MARGIN.left;
  const y0 = MARGIN.top + plotH;
  parts.push(`<g stroke="#333333" stroke-width="1">`);
  parts.push(`<line x1="${x0}" y1="${MARGIN.top}" x2="${x0}" y2="${y0}"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0 + plotW}" y2="${y0}"/>`);
  parts.push(`</g>`);

  const xTicks = linTicks(xLo, xHi);
  const yTicks = opts.logY ? logTicks(yLo, yHi) : linTicks(yLo, yHi);
  parts.push(`<g stroke="#333333" stroke-width="1">`);
  for (const t of xTicks) {
    parts.push(`<line x1="${px(sx(t))}" y1="${y0}" x2="${px(sx(t))}" y2="${y0 + 5}"/>`);
  }
  for (const t of yTicks) {
    parts.push(`<line x1="${x0 - 5}" y1="${px(sy(t))}" x2="${x0}" y2="${px(sy(t))}"/>`);
  }
  parts.push(`</g>`);
  for (const t of xTicks) {
    parts.push(
      `<text x="${px(sx(t))}" y="${y0 + 18}" text-anchor="middle">` +
        `${fmtTick(t)}</text>`,
    );
  }
  for (const t of yTicks) {
    parts.push(
      `<text x="${x0 - 8}" y="${px(sy(t) + 4)}" text-anchor="end">` +
        `${fmtTick(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${y0 + 38}" text-anchor="middle">` +
      `${escapeXml(opts.xLabel)}</text>`,
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 18 ${MARGIN.top + plotH / 2})">` +
      `${escapeXml(opts.yLabel)}</text>`,
  );

  // curves
  kept.forEach((series, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const d = series.points
      .map((p, i) => {
        const y = opts.logY && p.y <= 0 ? yFloor : p.y;
        return `${i === 0 ? "M" : "L"}${px(sx(p.x))} ${px(sy(y))}`;
      })
      .join(" ");
    const dash = opts.dashed?.has(series.label) ? ` stroke-dasharray="6 4"` : "";
    parts.push(
      `<path class="curve" data-series="${escapeXml(series.label)}" ` +
        `fill="none" stroke="${color}" stroke-width="1.5"${dash} d="${d}"/>`,
    );
  });

  // legend, top-right inside the plot area
  kept.forEach((series, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const ly = MARGIN.top + 14 + idx * 16;
    const lx = MARGIN.left + plotW - 150;
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 22}" y2="${ly - 4}" ` +
        `stroke="${color}" stroke-width="1.5"/>`,
    );
    parts.push(`<text x="${lx + 28}" y="${ly}">${escapeXml(series.label)}</text>`);
  });

  (opts.annotations ?? []).forEach((line, idx) => {
    parts.push(
      `<text class="annotation" x="${MARGIN.left}" y="${y0 + 58 + idx * 16}">` +
        `${escapeXml(line)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
