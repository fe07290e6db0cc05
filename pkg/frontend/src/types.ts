/** Wire types shared with the simulation service (JSON over HTTP + SSE). */

export type SimulationStatus =
  | "configured"
  | "running"
  | "paused"
  | "stopped"
  | "finished";

export interface BackendSpec {
  kind: string;
  [key: string]: unknown;
}

export interface SimulationConfig {
  scenario: string;
  num_agents: number;
  rounds: number;
  seed: number;
  backend: BackendSpec;
  workers: number;
  scenario_params?: Record<string, unknown>;
}

export interface SimulationHandle {
  id: string;
  status: SimulationStatus;
  current_round: number;
}

export interface ActionEvent {
  seq: number;
  round: number;
  agent_id: number;
  q: string;
  a: string;
  parsed: Record<string, unknown>;
  latency_ms: number;
  error?: string;
}

export interface AgentSummary {
  id: number;
  public: Record<string, unknown> & { name?: string };
}

export interface AgentDetail {
  profile: { id: number; public: Record<string, unknown> };
  recent_events: ActionEvent[];
}

export interface ApiError {
  error: { code: string; message: string };
}

/** Payload for POST /feedback/score — shape is part of the API contract. */
export interface ScoreFeedbackPayload {
  simulation_id?: string;
  event_seq: number;
  s: number;
  source: "human" | "judge";
}

/** Payload for POST /feedback/revision — shape is part of the API contract. */
export interface RevisionFeedbackPayload {
  simulation_id?: string;
  event_seq: number;
  a_prime: string;
}

export type InterventionPayload =
  | { apply_at_round: number; kind: "set_global"; key: string; value: string }
  | { apply_at_round: number; kind: "broadcast"; message: string };

export function isApiError(body: unknown): body is ApiError {
  return (
    typeof body === "object" &&
    body !== null &&
    "error" in body &&
    typeof (body as ApiError).error?.code === "string"
  );
}
