/** Display rounding: every number the UI shows goes through these. */

export function round2(value: number | null | undefined): string {
  if (value === null || value === undefined || Number.isNaN(value)) return "—";
  return value.toFixed(2);
}

export function pct(value: number | null | undefined): string {
  return round2(value);
}

/** Accuracies are fractions; shown with two decimals as percent. */
export function accuracyPct(value: number | null | undefined): string {
  if (value === null || value === undefined) return "—";
  return (100 * value).toFixed(2);
}

export function epsLabel(epsilon: number): string {
  return epsilon === 0 ? "clean" : String(epsilon);
}
