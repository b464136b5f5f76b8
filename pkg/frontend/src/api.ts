/** Thin typed client for the leaderboard API. */

import type {
  AttackFilter,
  ComparisonResponse,
  CurveResponse,
  FamilyInfo,
  Leaderboard,
  MetricsResponse,
  ModelInfo,
  RankMetric,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: unknown) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
  }
}

export class Client {
  constructor(private base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path);
    return this.unwrap<T>(response);
  }

  private async unwrap<T>(response: Response): Promise<T> {
    const body = await response.json();
    if (!response.ok) throw new ApiError(response.status, body.detail ?? body);
    return body as T;
  }

  models(): Promise<ModelInfo[]> {
    return this.get("/api/models");
  }

  attacks(): Promise<FamilyInfo[]> {
    return this.get("/api/attacks");
  }

  leaderboard(metric: RankMetric): Promise<Leaderboard> {
    return this.get(`/api/leaderboard?metric=${metric}`);
  }

  async metrics(
    modelIds: string[],
    filter: AttackFilter,
    alpha: number
  ): Promise<MetricsResponse> {
    const response = await fetch(this.base + "/api/metrics", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ model_ids: modelIds, attack_filter: filter, alpha }),
    });
    return this.unwrap(response);
  }

  curves(model: string, family: string): Promise<CurveResponse> {
    return this.get(
      `/api/curves?model=${encodeURIComponent(model)}&family=${encodeURIComponent(family)}`
    );
  }

  viz(models: string[]): Promise<ComparisonResponse> {
    return this.get(`/api/viz?models=${models.map(encodeURIComponent).join(",")}`);
  }
}
