/**
 * Explorer state and its URL-query serialization.
 *
 * The whole what-if configuration lives in the query string so a view can
 * be shared by copying the address bar. Serialization omits fields at
 * their defaults, and `parseState(serializeState(s))` reproduces `s`
 * exactly for canonical states (filter lists sorted, no duplicates).
 */

export type AxisUnit = "memory" | "latency";
export type TaskType = "math" | "knowledge" | null;

export interface ExplorerState {
  budgetBytes: number;
  batch: number;
  axis: AxisUnit;
  models: string[];
  precisions: number[];
  strategies: string[];
  groupSizes: number[];
  taskType: TaskType;
}

export const DEFAULT_STATE: ExplorerState = {
  budgetBytes: 16 * 2 ** 30,
  batch: 1,
  axis: "memory",
  models: [],
  precisions: [],
  strategies: [],
  groupSizes: [],
  taskType: null,
};

/** Normalize filter lists: deduplicate and sort so serialization is canonical. */
export function canonicalize(state: ExplorerState): ExplorerState {
  return {
    ...state,
    models: [...new Set(state.models)].sort(),
    precisions: [...new Set(state.precisions)].sort((a, b) => a - b),
    strategies: [...new Set(state.strategies)].sort(),
    groupSizes: [...new Set(state.groupSizes)].sort((a, b) => a - b),
  };
}

export function serializeState(state: ExplorerState): string {
  const s = canonicalize(state);
  const params = new URLSearchParams();
  if (s.budgetBytes !== DEFAULT_STATE.budgetBytes) params.set("budget", String(s.budgetBytes));
  if (s.batch !== DEFAULT_STATE.batch) params.set("batch", String(s.batch));
  if (s.axis !== DEFAULT_STATE.axis) params.set("axis", s.axis);
  if (s.models.length) params.set("models", s.models.join(","));
  if (s.precisions.length) params.set("wbits", s.precisions.join(","));
  if (s.strategies.length) params.set("kv", s.strategies.join(","));
  if (s.groupSizes.length) params.set("groups", s.groupSizes.join(","));
  if (s.taskType) params.set("task", s.taskType);
  return params.toString();
}

function intList(raw: string | null): number[] {
  if (!raw) return [];
  return raw
    .split(",")
    .map((part) => Number.parseInt(part, 10))
    .filter((n) => Number.isFinite(n));
}

function strList(raw: string | null): string[] {
  if (!raw) return [];
  return raw.split(",").filter((part) => part.length > 0);
}

export function parseState(query: string): ExplorerState {
  const params = new URLSearchParams(query.startsWith("?") ? query.slice(1) : query);
  const budget = Number.parseInt(params.get("budget") ?? "", 10);
  const batch = Number.parseInt(params.get("batch") ?? "", 10);
  const axis = params.get("axis");
  const task = params.get("task");
  return canonicalize({
    budgetBytes: Number.isFinite(budget) && budget > 0 ? budget : DEFAULT_STATE.budgetBytes,
    batch: Number.isFinite(batch) && batch >= 1 ? batch : DEFAULT_STATE.batch,
    axis: axis === "latency" ? "latency" : "memory",
    models: strList(params.get("models")),
    precisions: intList(params.get("wbits")),
    strategies: strList(params.get("kv")),
    groupSizes: intList(params.get("groups")),
    taskType: task === "math" || task === "knowledge" ? task : null,
  });
}

/** Request body for POST /frontier derived from the state. */
export function frontierRequest(state: ExplorerState): Record<string, unknown> {
  return {
    axis: state.axis,
    amortization_batch: state.batch,
    filters: filters(state),
  };
}

/** Request body for POST /plan derived from the state. */
export function planRequest(state: ExplorerState): Record<string, unknown> {
  const body: Record<string, unknown> = {
    budget_bytes: state.budgetBytes,
    objective: state.axis,
    amortization_batch: state.batch,
    filters: filters(state),
  };
  if (state.taskType) body.task_type = state.taskType;
  return body;
}

function filters(state: ExplorerState): Record<string, unknown> {
  const out: Record<string, unknown> = {};
  if (state.models.length) out.models = state.models;
  if (state.precisions.length) out.weight_precision_bits = state.precisions;
  if (state.strategies.length) out.kv_strategies = state.strategies;
  if (state.groupSizes.length) out.group_sizes = state.groupSizes;
  return out;
}
