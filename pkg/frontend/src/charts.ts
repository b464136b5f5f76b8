/** Hand-rolled SVG charts.
 *
 * Every builder is a pure function from API payloads to an SVG string, so
 * chart geometry is unit-testable without a DOM.  Values are plotted exactly
 * as delivered; only tick labels are rounded.
 */

import { accuracyPct, round2 } from "./format.js";
import type { CurvePoint, SingleCR, VizDataset } from "./types.js";

export const PALETTE = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed"];

export interface Scale {
  lo: number;
  hi: number;
  size: number;
  offset: number;
}

export function scale(lo: number, hi: number, size: number, offset = 0): Scale {
  return { lo, hi: hi === lo ? lo + 1 : hi, size, offset };
}

export function project(s: Scale, value: number): number {
  return s.offset + ((value - s.lo) / (s.hi - s.lo)) * s.size;
}

/** y axes grow downward in SVG. */
export function projectY(s: Scale, value: number): number {
  return s.offset + s.size - ((value - s.lo) / (s.hi - s.lo)) * s.size;
}

const W = 420;
const H = 300;
const M = { top: 24, right: 16, bottom: 42, left: 52 };

function frame(title: string, body: string, xLabel: string, yLabel: string): string {
  return (
    `<svg viewBox="0 0 ${W} ${H}" class="chart" role="img" aria-label="${title}">` +
    `<text x="${W / 2}" y="14" class="chart-title" text-anchor="middle">${title}</text>` +
    `<text x="${W / 2}" y="${H - 6}" class="axis-label" text-anchor="middle">${xLabel}</text>` +
    `<text x="12" y="${H / 2}" class="axis-label" text-anchor="middle" transform="rotate(-90 12 ${H / 2})">${yLabel}</text>` +
    body +
    `</svg>`
  );
}

function axes(xs: Scale, ys: Scale, xTicks: number[], yTicks: number[]): string {
  const x0 = M.left;
  const y0 = H - M.bottom;
  let out = `<line x1="${x0}" y1="${y0}" x2="${x0 + xs.size}" y2="${y0}" class="axis"/>`;
  out += `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y0 - ys.size}" class="axis"/>`;
  for (const t of xTicks) {
    const px = project(xs, t);
    out += `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" class="axis"/>`;
    out += `<text x="${px}" y="${y0 + 16}" class="tick" text-anchor="middle">${round2(t)}</text>`;
  }
  for (const t of yTicks) {
    const py = projectY(ys, t);
    out += `<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" class="axis"/>`;
    out += `<text x="${x0 - 8}" y="${py + 4}" class="tick" text-anchor="end">${round2(t)}</text>`;
  }
  return out;
}

export interface ScatterSeries {
  label: string;
  color: string;
  points: { x: number; y: number; title: string }[];
}

/** Defense accuracy against directly-trained baseline accuracy, with the
 * break-even diagonal. */
export function scatterChart(series: ScatterSeries[]): string {
  const xs = scale(0, 1, W - M.left - M.right, M.left);
  const ys = scale(0, 1, H - M.top - M.bottom, M.top);
  let body = axes(xs, ys, [0, 0.25, 0.5, 0.75, 1], [0, 0.25, 0.5, 0.75, 1]);
  body += `<line x1="${project(xs, 0)}" y1="${projectY(ys, 0)}" x2="${project(xs, 1)}" y2="${projectY(ys, 1)}" class="diagonal"/>`;
  for (const s of series) {
    for (const p of s.points) {
      body += `<circle cx="${project(xs, p.x)}" cy="${projectY(ys, p.y)}" r="3.5" fill="${s.color}" fill-opacity="0.75"><title>${p.title}</title></circle>`;
    }
  }
  return frame(
    "Defense vs direct-training accuracy",
    body,
    "baseline accuracy (trained on the attack)",
    "defense accuracy"
  );
}

export function scatterSeries(models: string[], datasets: Record<string, VizDataset>): ScatterSeries[] {
  return models.map((model, i) => ({
    label: model,
    color: PALETTE[i % PALETTE.length],
    points: datasets[model].scatter.map((p) => ({
      x: p.baseline_accuracy,
      y: p.defense_accuracy,
      title: `${model} ${p.family}@${p.epsilon}: ${accuracyPct(p.defense_accuracy)}% vs ${accuracyPct(p.baseline_accuracy)}%`,
    })),
  }));
}

export interface CurveSeries {
  label: string;
  color: string;
  points: CurvePoint[];
}

export function polyline(points: CurvePoint[], xs: Scale, ys: Scale): string {
  return points
    .map((p) => `${project(xs, p.epsilon)},${projectY(ys, p.accuracy)}`)
    .join(" ");
}

/** Robust accuracy across attack strength for one family, one line per model. */
export function curveChart(family: string, series: CurveSeries[]): string {
  const maxEps = Math.max(...series.flatMap((s) => s.points.map((p) => p.epsilon)));
  const xs = scale(0, maxEps, W - M.left - M.right, M.left);
  const ys = scale(0, 1, H - M.top - M.bottom, M.top);
  const xTicks = [0, maxEps / 2, maxEps];
  let body = axes(xs, ys, xTicks, [0, 0.5, 1]);
  series.forEach((s) => {
    body += `<polyline points="${polyline(s.points, xs, ys)}" fill="none" stroke="${s.color}" stroke-width="2"/>`;
    for (const p of s.points) {
      body += `<circle cx="${project(xs, p.epsilon)}" cy="${projectY(ys, p.accuracy)}" r="2.5" fill="${s.color}"><title>${s.label} @ ${p.epsilon}: ${accuracyPct(p.accuracy)}%</title></circle>`;
    }
  });
  return frame(`Robust accuracy: ${family}`, body, "attack strength", "robust accuracy");
}

export interface BarGroup {
  label: string;
  bars: { label: string; color: string; value: number | null }[];
}

/** Grouped bars; used for in/out-of-knowledge and per-family ratio charts. */
export function barChart(title: string, groups: BarGroup[], yMax?: number): string {
  const values = groups.flatMap((g) => g.bars.map((b) => b.value ?? 0));
  const hi = yMax ?? Math.max(10, ...values) * 1.05;
  const ys = scale(0, hi, H - M.top - M.bottom, M.top);
  const innerW = W - M.left - M.right;
  const groupW = innerW / Math.max(1, groups.length);
  const y0 = H - M.bottom;
  let body = axes(scale(0, 1, innerW, M.left), ys, [], [0, hi / 2, hi]);
  groups.forEach((group, gi) => {
    const barW = (groupW * 0.8) / Math.max(1, group.bars.length);
    group.bars.forEach((bar, bi) => {
      const x = M.left + gi * groupW + groupW * 0.1 + bi * barW;
      if (bar.value === null) {
        body += `<text x="${x + barW / 2}" y="${y0 - 6}" class="tick" text-anchor="middle">n/a</text>`;
        return;
      }
      const top = projectY(ys, bar.value);
      body += `<rect x="${x}" y="${top}" width="${Math.max(1, barW - 2)}" height="${Math.max(0, y0 - top)}" fill="${bar.color}"><title>${group.label} ${bar.label}: ${round2(bar.value)}</title></rect>`;
    });
    body += `<text x="${M.left + gi * groupW + groupW / 2}" y="${y0 + 16}" class="tick" text-anchor="middle">${group.label}</text>`;
  });
  return frame(title, body, "", "competitiveness (%)");
}

export function inOutGroups(models: string[], datasets: Record<string, VizDataset>): BarGroup[] {
  return models.map((model, i) => ({
    label: model,
    bars: [
      { label: "known attacks", color: PALETTE[i % PALETTE.length], value: datasets[model].cr_in_out.cr_in },
      { label: "unseen attacks", color: "#94a3b8", value: datasets[model].cr_in_out.cr_out },
    ],
  }));
}

export function singleCrGroups(
  models: string[],
  datasets: Record<string, VizDataset>
): BarGroup[] {
  const families = [
    ...new Set(models.flatMap((m) => Object.keys(datasets[m].single_cr))),
  ].sort();
  return families.map((family) => ({
    label: family,
    bars: models.map((model, i) => {
      const cell: SingleCR | undefined = datasets[model].single_cr[family];
      return {
        label: model,
        color: PALETTE[i % PALETTE.length],
        value: cell ? cell.avg : null,
      };
    }),
  }));
}
