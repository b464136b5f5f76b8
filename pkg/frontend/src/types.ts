/** Payload shapes of the leaderboard API (mirrors the server's JSON). */

export interface ModelInfo {
  model_id: string;
  display_name: string;
  defense_kind: string;
  training: { family: string; epsilon: number }[];
  architecture: string;
  notes: string;
}

export interface FamilyInfo {
  id: string;
  grid: number[];
  params: Record<string, unknown>;
}

export interface SingleCR {
  avg: number;
  worst: number;
}

export interface Report {
  model_id: string;
  clean_accuracy: number;
  cr_ind_avg: number | null;
  cr_ind_worst: number | null;
  cr_exp: number | null;
  cr_max: number | null;
  single_cr: Record<string, SingleCR>;
  muar: number | null;
  sc: number | null;
  sc_empty_pair_set: boolean;
  excluded_instances: { family: string; epsilon: number }[];
}

export interface LeaderboardEntry {
  rank: number;
  model_id: string;
  value: number;
  clean_accuracy: number;
  report: Report;
}

export interface Leaderboard {
  metric: RankMetric;
  alpha: number;
  entries: LeaderboardEntry[];
}

export type RankMetric = "cr_ind_avg" | "cr_ind_worst";

export interface AttackFilter {
  families: string[] | null;
  epsilon_ranges: Record<string, [number, number]>;
  include_clean: boolean;
}

export interface MetricsResponse {
  alpha: number;
  reports: Record<string, Report>;
}

export interface CurvePoint {
  epsilon: number;
  accuracy: number;
}

export interface CurveResponse {
  model_id: string;
  family: string;
  points: CurvePoint[];
}

export interface ScatterPoint {
  family: string;
  epsilon: number;
  defense_accuracy: number;
  baseline_accuracy: number;
}

export interface VizDataset {
  model_id: string;
  scatter: ScatterPoint[];
  curves: Record<string, CurvePoint[]>;
  cr_in_out: { cr_in: number | null; cr_out: number | null };
  single_cr: Record<string, SingleCR>;
}

export interface ComparisonResponse {
  models: string[];
  datasets: Record<string, VizDataset>;
}
