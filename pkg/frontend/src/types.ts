// Wire types for the session service (see docs/service.md in the repo root).

export const ACTION_NAMES = ["none", "inspect", "repair", "replace"] as const;

export type ActionCode = 0 | 1 | 2 | 3;

export interface BudgetInfo {
  remaining: number;
  spent_total: number;
  allocated_total: number;
  cycle: number;
  model: { kind: string; cycle_starts?: number[]; cycle_amounts?: number[]; amount?: number };
}

export interface SessionView {
  session_id: string;
  name: string;
  t: number;
  horizon: number;
  n_components: number;
  observation: number[];
  terminated: boolean;
  truncated: boolean;
  budget: BudgetInfo;
  fingerprint: string;
  seed: number;
  policy: string | null;
  suggested_actions: number[] | null;
  parent: string | null;
  lineage: string[];
  steps_logged: number;
  created_at: string;
}

export interface ComponentRow {
  index: number;
  id: string;
  last_obs: number;
  steps_since_inspection: number;
  available: boolean;
  suggested: number;
}

export interface ComponentPage {
  total: number;
  offset: number;
  rows: ComponentRow[];
}

export interface GroupRow {
  key: string;
  label: string;
  count: number;
  observed: number;
  mean_obs: number | null;
  min_obs: number | null;
  mean_steps_since_inspection: number;
}

export interface StepResponse {
  session_id: string;
  t: number;
  observation: number[];
  reward: number;
  terminated: boolean;
  truncated: boolean;
  cost_total: number;
  downgrades: [number, string][];
  new_failures: number[];
  replacements: number;
  budget_remaining: number;
  suggested_actions: number[] | null;
}

export interface MetricSummary {
  mean: number;
  std: number;
  min: number;
  max: number;
  quantiles: { p10: number; p25: number; p50: number; p75: number; p90: number };
}

export interface SweepResponse {
  session_id: string;
  from_step: number;
  horizon: number;
  n_seeds: number;
  policy: string | null;
  metrics: Record<string, MetricSummary>;
}

export interface CreateSessionRequest {
  predefined?: string;
  scenario?: unknown;
  seed?: number;
  policy?: string;
  include_true_ci?: boolean;
  idempotency_key?: string;
}

export interface SessionListing {
  sessions: {
    session_id: string;
    name: string;
    t: number;
    terminated: boolean;
    truncated: boolean;
    parent: string | null;
  }[];
}
