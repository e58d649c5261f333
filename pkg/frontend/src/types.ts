/** Response documents of the memplan HTTP API (docs/api.md). */

export interface Envelope<T> {
  ok: boolean;
  schema_version: number;
  result?: T;
  error?: ApiError;
}

export interface ApiError {
  code: string;
  message: string;
  details?: {
    budget?: number;
    cheapest_cost?: number;
    cheapest_config_key?: string;
    [key: string]: unknown;
  };
}

export interface ModelSpecDoc {
  name: string;
  n_layers: number;
  n_kv_heads: number;
  d_head: number;
  n_params_quantizable: number;
  n_params_unquantizable: number;
  native_precision_bits: number;
  note: string;
}

export interface FrontierPoint {
  cost: number;
  unit: string;
  accuracy: number;
  config_key: string;
  model: string;
  weight_precision_bits: number;
  kv_strategy: string;
  token_budget: number;
  group_size: number;
  effective_size_bytes: number;
  co_optimal: boolean;
}

export interface FrontierResponse {
  unit: string;
  points: FrontierPoint[];
}

export interface ChosenConfig {
  model: string;
  weight_precision_bits: number;
  weight_group_size: number;
  kv_strategy: { kind: string; [key: string]: unknown };
  token_budget: number;
  group_size: number;
  amortization_batch: number;
  config_key: string;
}

export interface RuleAnnotationDoc {
  rule_id: number;
  triggered: boolean;
  explanation: string;
}

export interface NeighborhoodPoint {
  cost: number;
  unit: string;
  accuracy: number;
  config_key: string;
  co_optimal: boolean;
}

export interface PlanResponse {
  chosen: ChosenConfig;
  achieved_accuracy: number;
  cost: number;
  cost_unit: string;
  memory_bytes: number;
  memory_gib: string;
  interpolated: boolean;
  thresholds: {
    allocation_threshold_bytes: number;
    allocation_threshold_gib: string;
    allocation_ref: string;
    eviction_threshold_bytes: number;
    eviction_threshold_gib: string;
    eviction_ref: string;
    saturating_fraction: number;
  };
  annotations: RuleAnnotationDoc[];
  frontier_neighborhood: NeighborhoodPoint[];
}

export interface ModelsResponse {
  models: ModelSpecDoc[];
}
