/** DOM wiring: pulls data through the API client, pushes strings and SVG
 * into the page.  No metric is ever computed here. */

import { ApiError, Client } from "./api.js";
import {
  curveChart,
  barChart,
  inOutGroups,
  PALETTE,
  scatterChart,
  scatterSeries,
  singleCrGroups,
} from "./charts.js";
import { epsLabel, pct } from "./format.js";
import {
  initialState,
  isFullSelection,
  MAX_COMPARE,
  snapToGrid,
  toAttackFilter,
  toggleCompare,
  validateState,
  ViewState,
} from "./state.js";
import { buildRows } from "./table.js";
import type { FamilyInfo, Leaderboard, ModelInfo, RankMetric, Report } from "./types.js";

const METRIC_LABELS: Record<RankMetric, string> = {
  cr_ind_avg: "average case",
  cr_ind_worst: "worst case",
};

export class App {
  private state!: ViewState;
  private families: FamilyInfo[] = [];
  private models: ModelInfo[] = [];
  private board!: Leaderboard;
  private recomputed: Record<string, Report> | null = null;

  constructor(private client: Client, private root: Document) {}

  async start(): Promise<void> {
    await this.withErrors(async () => {
      [this.families, this.models] = await Promise.all([
        this.client.attacks(),
        this.client.models(),
      ]);
      this.state = initialState(this.families);
      this.board = await this.client.leaderboard(this.state.metric);
      this.renderFilterPanel();
      this.renderLeaderboard();
      this.renderComparePicker();
      await this.renderVisualizations();
    });
  }

  private el<T extends HTMLElement>(id: string): T {
    const node = this.root.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as T;
  }

  private async withErrors(fn: () => Promise<void>): Promise<void> {
    const banner = this.el<HTMLElement>("error-banner");
    try {
      banner.hidden = true;
      await fn();
    } catch (error) {
      banner.hidden = false;
      const message =
        error instanceof ApiError
          ? `API error ${error.status}: ${error.message}`
          : String(error);
      this.el<HTMLElement>("error-text").textContent = message;
      this.el<HTMLButtonElement>("error-retry").onclick = () => {
        void this.withErrors(fn);
      };
    }
  }

  // -- leaderboard table ----------------------------------------------------

  private renderLeaderboard(): void {
    const names = new Map(this.models.map((m) => [m.model_id, m.display_name]));
    const rows = buildRows(this.board, names, this.recomputed);
    const filtered = this.recomputed !== null;
    this.el<HTMLElement>("board-caption").textContent =
      `Ranked by ${METRIC_LABELS[this.board.metric]} competitiveness` +
      (filtered ? " (values recomputed for your attack selection; ranks stay official)" : "");
    const body = rows
      .map(
        (r) => `<tr${r.filtered ? ' class="filtered"' : ""}>
          <td class="rank">${r.rank}</td>
          <td class="model">${r.displayName}</td>
          <td>${r.clean}</td>
          <td>${r.crAvg}</td>
          <td>${r.crWorst}</td>
          <td>${r.crExp}</td>
          <td>${r.crMax}</td>
          <td>${r.muar}</td>
          <td>${r.sc}</td>
        </tr>`
      )
      .join("");
    this.el<HTMLElement>("board-body").innerHTML = body;
    const toggle = this.el<HTMLSelectElement>("metric-toggle");
    toggle.value = this.board.metric;
    toggle.onchange = () => {
      void this.withErrors(async () => {
        this.state.metric = toggle.value as RankMetric;
        this.board = await this.client.leaderboard(this.state.metric);
        this.renderLeaderboard();
      });
    };
  }

  // -- filter panel ---------------------------------------------------------

  private renderFilterPanel(): void {
    const panel = this.el<HTMLElement>("family-checkboxes");
    panel.innerHTML = this.families
      .map((f) => {
        const grid = f.grid;
        const lo = grid[0];
        const hi = grid[grid.length - 1];
        const step = grid.length > 1 ? grid[1] - grid[0] : lo;
        return `<fieldset class="family" data-family="${f.id}">
          <label><input type="checkbox" class="family-on" checked> ${f.id}</label>
          <span class="range">
            <input type="range" class="eps-lo" min="${lo}" max="${hi}" step="${step}" value="${lo}" title="smallest strength">
            <input type="range" class="eps-hi" min="${lo}" max="${hi}" step="${step}" value="${hi}" title="largest strength">
            <output class="eps-label">${lo} – ${hi}</output>
          </span>
        </fieldset>`;
      })
      .join("");
    for (const fieldset of panel.querySelectorAll<HTMLElement>(".family")) {
      const family = fieldset.dataset.family!;
      const grid = this.families.find((f) => f.id === family)!.grid;
      const label = fieldset.querySelector<HTMLOutputElement>(".eps-label")!;
      for (const slider of fieldset.querySelectorAll<HTMLInputElement>("input[type=range]")) {
        slider.oninput = () => {
          const lo = snapToGrid(grid, Number(fieldset.querySelector<HTMLInputElement>(".eps-lo")!.value));
          const hi = snapToGrid(grid, Number(fieldset.querySelector<HTMLInputElement>(".eps-hi")!.value));
          label.textContent = `${lo} – ${hi}`;
        };
      }
    }
    this.el<HTMLButtonElement>("apply-filter").onclick = () => {
      void this.withErrors(() => this.applyFilter());
    };
    this.el<HTMLButtonElement>("reset-filter").onclick = () => {
      void this.withErrors(async () => {
        this.state = { ...this.state, ...initialState(this.families), metric: this.state.metric };
        this.recomputed = null;
        this.renderFilterPanel();
        this.renderLeaderboard();
      });
    };
  }

  private readFilterPanel(): void {
    const selected = new Set<string>();
    const ranges = new Map<string, [number, number]>();
    for (const fieldset of this.root.querySelectorAll<HTMLElement>("#family-checkboxes .family")) {
      const family = fieldset.dataset.family!;
      const on = fieldset.querySelector<HTMLInputElement>(".family-on")!.checked;
      if (!on) continue;
      selected.add(family);
      const grid = this.families.find((f) => f.id === family)!.grid;
      const lo = snapToGrid(grid, Number(fieldset.querySelector<HTMLInputElement>(".eps-lo")!.value));
      const hi = snapToGrid(grid, Number(fieldset.querySelector<HTMLInputElement>(".eps-hi")!.value));
      if (lo !== grid[0] || hi !== grid[grid.length - 1]) ranges.set(family, [lo, hi]);
    }
    this.state.selectedFamilies = selected;
    this.state.epsilonRanges = ranges;
    this.state.includeClean = this.el<HTMLInputElement>("include-clean").checked;
    this.state.alpha = Number(this.el<HTMLInputElement>("alpha-input").value);
  }

  private async applyFilter(): Promise<void> {
    this.readFilterPanel();
    const errors = validateState(this.state, this.families);
    if (errors.length) throw new Error(errors.join("; "));
    if (isFullSelection(this.state, this.families) && this.state.alpha === this.board.alpha) {
      this.recomputed = null; // full selection: show the official reports
      this.renderLeaderboard();
      return;
    }
    const response = await this.client.metrics(
      this.models.map((m) => m.model_id),
      toAttackFilter(this.state),
      this.state.alpha
    );
    this.recomputed = response.reports;
    this.renderLeaderboard();
  }

  // -- visualizations -------------------------------------------------------

  private renderComparePicker(): void {
    const picker = this.el<HTMLElement>("compare-picker");
    picker.innerHTML = this.models
      .map(
        (m, i) => `<label class="compare-option">
          <input type="checkbox" value="${m.model_id}" ${this.state.compareModels.includes(m.model_id) ? "checked" : ""}>
          <span class="swatch" style="background:${PALETTE[i % PALETTE.length]}"></span>
          ${m.display_name}
        </label>`
      )
      .join("");
    for (const input of picker.querySelectorAll<HTMLInputElement>("input")) {
      input.onchange = () => {
        void this.withErrors(async () => {
          this.state = toggleCompare(this.state, input.value);
          if (this.state.compareModels.length > MAX_COMPARE) {
            this.state = toggleCompare(this.state, input.value);
            input.checked = false;
            throw new Error(`at most ${MAX_COMPARE} models can be compared`);
          }
          await this.renderVisualizations();
        });
      };
    }
  }

  private async renderVisualizations(): Promise<void> {
    const target = this.el<HTMLElement>("charts");
    const chosen = this.state.compareModels.length
      ? this.state.compareModels
      : this.models.slice(0, 1).map((m) => m.model_id);
    const payload = await this.client.viz(chosen);
    const charts: string[] = [];
    charts.push(scatterChart(scatterSeries(payload.models, payload.datasets)));
    const families = [
      ...new Set(payload.models.flatMap((m) => Object.keys(payload.datasets[m].curves))),
    ].sort();
    for (const family of families) {
      const series = payload.models
        .filter((m) => family in payload.datasets[m].curves)
        .map((m) => ({
          label: m,
          color: PALETTE[payload.models.indexOf(m) % PALETTE.length],
          points: payload.datasets[m].curves[family],
        }));
      charts.push(curveChart(family, series));
    }
    charts.push(barChart("Competitiveness in vs out of the training threat model", inOutGroups(payload.models, payload.datasets)));
    charts.push(barChart("Per-family competitiveness (average ratio)", singleCrGroups(payload.models, payload.datasets)));
    target.innerHTML = charts.join("\n");
    this.el<HTMLElement>("viz-caption").textContent =
      `Showing ${payload.models.join(", ")} (curves start at the ${epsLabel(0)} point; ` +
      `official alpha ${pct(this.board.alpha)})`;
  }
}

export function bootstrap(): void {
  const app = new App(new Client(""), document);
  void app.start();
}
