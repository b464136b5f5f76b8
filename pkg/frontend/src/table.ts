/** Leaderboard row assembly: pure data mapping from API payloads to the
 * strings the table shows.  The official rank always comes from the
 * unfiltered leaderboard; filtered metrics only replace the value columns. */

import { accuracyPct, pct } from "./format.js";
import type { Leaderboard, Report } from "./types.js";

export interface Row {
  rank: number;
  modelId: string;
  displayName: string;
  clean: string;
  crAvg: string;
  crWorst: string;
  crExp: string;
  crMax: string;
  muar: string;
  sc: string;
  filtered: boolean;
}

function fromReport(report: Report): Omit<Row, "rank" | "modelId" | "displayName" | "filtered"> {
  return {
    clean: accuracyPct(report.clean_accuracy),
    crAvg: pct(report.cr_ind_avg),
    crWorst: pct(report.cr_ind_worst),
    crExp: pct(report.cr_exp),
    crMax: pct(report.cr_max),
    muar: pct(report.muar),
    sc: report.sc_empty_pair_set ? "—" : pct(report.sc),
  };
}

/**
 * Build display rows.  ``recomputed`` holds reports for a user-filtered
 * attack set; when present they drive the value columns while ranks stay
 * official (the official ordering is independent of user selection).
 */
export function buildRows(
  board: Leaderboard,
  displayNames: Map<string, string>,
  recomputed: Record<string, Report> | null
): Row[] {
  return board.entries.map((entry) => {
    const replacement = recomputed ? recomputed[entry.model_id] : undefined;
    return {
      rank: entry.rank,
      modelId: entry.model_id,
      displayName: displayNames.get(entry.model_id) ?? entry.model_id,
      filtered: replacement !== undefined,
      ...fromReport(replacement ?? entry.report),
    };
  });
}
