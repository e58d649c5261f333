/**
 * DOM-free orchestration: state in, rendered fragments out.
 *
 * The controller owns the explorer state, debounces refreshes, resolves
 * overlapping responses last-write-wins, and hands finished HTML/SVG
 * strings plus the serialized query string to an injected view. The thin
 * DOM layer (app.ts) only copies those strings into elements, so every
 * rendered number is traceable to an API response.
 */

import { ApiClient, ApiRequestError } from "./api.js";
import { LatestWins } from "./sequence.js";
import {
  canonicalize,
  frontierRequest,
  planRequest,
  serializeState,
  type ExplorerState,
} from "./state.js";
import {
  errorCardHtml,
  frontierChartSvg,
  frontierTableHtml,
  infeasibleCardHtml,
  loadingHtml,
  recommendationCardHtml,
} from "./render.js";
import type { PlanResponse } from "./types.js";

export interface ExplorerView {
  setChart(html: string): void;
  setTable(html: string): void;
  setRecommendation(html: string): void;
  setQuery(query: string): void;
}

export interface ControllerOptions {
  debounceMs?: number;
  /** injectable scheduler for tests */
  schedule?: (fn: () => void, ms: number) => unknown;
  cancel?: (handle: unknown) => void;
}

export class ExplorerController {
  private state: ExplorerState;
  private readonly frontierGate = new LatestWins();
  private readonly planGate = new LatestWins();
  private readonly debounceMs: number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly cancel: (handle: unknown) => void;
  private pending: unknown = null;
  /** last successfully rendered plan, exposed for tests and the URL bar */
  lastPlan: PlanResponse | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly view: ExplorerView,
    initial: ExplorerState,
    options: ControllerOptions = {},
  ) {
    this.state = canonicalize(initial);
    this.debounceMs = options.debounceMs ?? 150;
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.cancel = options.cancel ?? ((handle) => clearTimeout(handle as number));
  }

  getState(): ExplorerState {
    return this.state;
  }

  /** Apply a state change; fetches are debounced per interaction burst. */
  update(partial: Partial<ExplorerState>): void {
    this.state = canonicalize({ ...this.state, ...partial });
    this.view.setQuery(serializeState(this.state));
    if (this.pending !== null) this.cancel(this.pending);
    this.pending = this.schedule(() => {
      this.pending = null;
      void this.refresh();
    }, this.debounceMs);
  }

  /** Fetch frontier and plan for the current state and render both panels. */
  async refresh(): Promise<void> {
    const state = this.state;
    this.view.setChart(loadingHtml("frontier"));
    this.view.setRecommendation(loadingHtml("recommendation"));
    const [frontier, plan] = await Promise.all([
      this.frontierGate.run(() => this.client.frontier(frontierRequest(state))),
      this.planGate.run(() => this.client.plan(planRequest(state))),
    ]);
    if (!frontier.stale) {
      if (frontier.value !== undefined) {
        this.view.setChart(frontierChartSvg(frontier.value.points, frontier.value.unit));
        this.view.setTable(frontierTableHtml(frontier.value.points));
      } else {
        this.view.setChart(errorCardHtml(frontier.error));
        this.view.setTable("");
      }
    }
    if (!plan.stale) {
      if (plan.value !== undefined) {
        this.lastPlan = plan.value;
        this.view.setRecommendation(recommendationCardHtml(plan.value));
      } else if (
        plan.error instanceof ApiRequestError &&
        plan.error.api.code === "INFEASIBLE_BUDGET"
      ) {
        this.view.setRecommendation(infeasibleCardHtml(plan.error.api));
      } else {
        this.view.setRecommendation(errorCardHtml(plan.error));
      }
    }
  }
}
