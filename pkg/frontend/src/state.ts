/** View state and the client-side mirror of the server's filter rules.
 *
 * Validation here only exists to give instant feedback; the server remains
 * the authority and every displayed number comes from it.
 */

import type { AttackFilter, FamilyInfo, RankMetric } from "./types.js";

export const MAX_COMPARE = 5;

export interface ViewState {
  metric: RankMetric;
  selectedFamilies: Set<string>;
  epsilonRanges: Map<string, [number, number]>;
  includeClean: boolean;
  alpha: number;
  compareModels: string[];
}

export function initialState(families: FamilyInfo[]): ViewState {
  return {
    metric: "cr_ind_avg",
    selectedFamilies: new Set(families.map((f) => f.id)),
    epsilonRanges: new Map(),
    includeClean: true,
    alpha: 0.03,
    compareModels: [],
  };
}

export function validateState(state: ViewState, families: FamilyInfo[]): string[] {
  const errors: string[] = [];
  const known = new Map(families.map((f) => [f.id, f]));
  for (const fam of state.selectedFamilies) {
    if (!known.has(fam)) errors.push(`unknown family ${fam}`);
  }
  if (state.selectedFamilies.size === 0 && !state.includeClean) {
    errors.push("the attack filter leaves no instances to evaluate");
  }
  for (const [fam, [lo, hi]] of state.epsilonRanges) {
    const info = known.get(fam);
    if (!info) {
      errors.push(`epsilon range for unknown family ${fam}`);
      continue;
    }
    const grid = info.grid;
    if (lo > hi) errors.push(`${fam}: empty epsilon range`);
    else if (hi < grid[0] || lo > grid[grid.length - 1])
      errors.push(`${fam}: range outside the grid [${grid[0]}, ${grid[grid.length - 1]}]`);
  }
  if (!(state.alpha > 0)) errors.push("alpha must be > 0");
  if (state.compareModels.length > MAX_COMPARE)
    errors.push(`at most ${MAX_COMPARE} models can be compared`);
  return errors;
}

/** Whether the filter restricts anything at all (full set = official view). */
export function isFullSelection(state: ViewState, families: FamilyInfo[]): boolean {
  return (
    state.includeClean &&
    state.epsilonRanges.size === 0 &&
    families.every((f) => state.selectedFamilies.has(f.id))
  );
}

export function toAttackFilter(state: ViewState): AttackFilter {
  return {
    families: [...state.selectedFamilies].sort(),
    epsilon_ranges: Object.fromEntries(state.epsilonRanges),
    include_clean: state.includeClean,
  };
}

/** Nearest grid strength to a raw slider value (sliders can land between
 * grid points because of floating-point stepping). */
export function snapToGrid(grid: number[], value: number): number {
  let best = grid[0];
  for (const g of grid) {
    if (Math.abs(g - value) < Math.abs(best - value)) best = g;
  }
  return best;
}

export function toggleCompare(state: ViewState, modelId: string): ViewState {
  const present = state.compareModels.includes(modelId);
  const compareModels = present
    ? state.compareModels.filter((m) => m !== modelId)
    : [...state.compareModels, modelId];
  return { ...state, compareModels };
}
