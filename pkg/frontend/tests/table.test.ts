import { describe, expect, it } from "vitest";

import { buildRows } from "../src/table.js";
import { accuracyPct, round2 } from "../src/format.js";
import type { Leaderboard, Report } from "../src/types.js";

function report(modelId: string, avg: number, sc: number | null): Report {
  return {
    model_id: modelId,
    clean_accuracy: 0.987654,
    cr_ind_avg: avg,
    cr_ind_worst: avg / 2,
    cr_exp: avg + 0.4,
    cr_max: null,
    single_cr: {},
    muar: 70.123456,
    sc,
    sc_empty_pair_set: sc === null,
    excluded_instances: [],
  };
}

const BOARD: Leaderboard = {
  metric: "cr_ind_avg",
  alpha: 0.03,
  entries: [
    { rank: 1, model_id: "b", value: 80.126, clean_accuracy: 0.98, report: report("b", 80.126, 12.3) },
    { rank: 2, model_id: "a", value: 64.16666, clean_accuracy: 0.9, report: report("a", 64.16666, null) },
  ],
};

describe("display rounding", () => {
  it("rounds to two decimals", () => {
    expect(round2(64.16666)).toBe("64.17");
    expect(round2(null)).toBe("—");
    expect(accuracyPct(0.987654)).toBe("98.77");
  });
});

describe("buildRows", () => {
  it("keeps official ranks and rounds values", () => {
    const rows = buildRows(BOARD, new Map([["a", "Model A"]]), null);
    expect(rows.map((r) => r.rank)).toEqual([1, 2]);
    expect(rows[1].displayName).toBe("Model A");
    expect(rows[0].crAvg).toBe("80.13");
    expect(rows[0].crMax).toBe("—");
    expect(rows[1].sc).toBe("—"); // empty pair set renders as undefined
  });

  it("filtered reports replace values but never ranks", () => {
    const rows = buildRows(BOARD, new Map(), {
      b: report("b", 40.0, 5.0),
      a: report("a", 99.0, 1.0),
    });
    expect(rows.map((r) => r.rank)).toEqual([1, 2]);
    expect(rows.map((r) => r.modelId)).toEqual(["b", "a"]);
    expect(rows[0].crAvg).toBe("40.00");
    expect(rows[1].crAvg).toBe("99.00");
    expect(rows.every((r) => r.filtered)).toBe(true);
  });

  it("partial recomputation only marks covered models", () => {
    const rows = buildRows(BOARD, new Map(), { a: report("a", 10, 1) });
    expect(rows.find((r) => r.modelId === "a")!.filtered).toBe(true);
    expect(rows.find((r) => r.modelId === "b")!.filtered).toBe(false);
  });
});
