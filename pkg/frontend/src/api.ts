/** HTTP client for the simulation service.
 *
 * Every mutation carries an Idempotency-Key so UI retries cannot
 * double-apply feedback or interventions; a retry of the same logical
 * action reuses the same key.
 */

import type {
  AgentDetail,
  AgentSummary,
  InterventionPayload,
  RevisionFeedbackPayload,
  ScoreFeedbackPayload,
  SimulationConfig,
  SimulationHandle,
} from "./types.js";
import { isApiError } from "./types.js";

export type FetchLike = (
  url: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<{ status: number; json(): Promise<unknown>; text(): Promise<string> }>;

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export function newIdempotencyKey(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
    return crypto.randomUUID();
  }
  return `key-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

export class ApiClient {
  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = fetch as unknown as FetchLike,
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
    idempotencyKey?: string,
  ): Promise<unknown> {
    const headers: Record<string, string> = { Accept: "application/json" };
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (method !== "GET") {
      headers["Idempotency-Key"] = idempotencyKey ?? newIdempotencyKey();
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      ...(body !== undefined ? { body: JSON.stringify(body) } : {}),
    });
    const parsed = await response.json();
    if (response.status >= 400) {
      if (isApiError(parsed)) {
        throw new ApiRequestError(response.status, parsed.error.code, parsed.error.message);
      }
      throw new ApiRequestError(response.status, "unknown", JSON.stringify(parsed));
    }
    return parsed;
  }

  createSimulation(config: SimulationConfig, key?: string): Promise<SimulationHandle> {
    return this.request("POST", "/simulations", config, key) as Promise<SimulationHandle>;
  }

  getSimulation(id: string): Promise<SimulationHandle> {
    return this.request("GET", `/simulations/${id}`) as Promise<SimulationHandle>;
  }

  run(id: string, rounds?: number, key?: string): Promise<SimulationHandle> {
    const body = rounds === undefined ? {} : { rounds };
    return this.request("POST", `/simulations/${id}/run`, body, key) as Promise<SimulationHandle>;
  }

  stop(id: string, key?: string): Promise<SimulationHandle> {
    return this.request("POST", `/simulations/${id}/stop`, undefined, key) as Promise<SimulationHandle>;
  }

  searchAgents(
    id: string,
    query = "",
    offset = 0,
    limit = 50,
  ): Promise<{ agents: AgentSummary[]; total: number }> {
    const params = new URLSearchParams({
      q: query,
      offset: String(offset),
      limit: String(limit),
    });
    return this.request("GET", `/simulations/${id}/agents?${params}`) as Promise<{
      agents: AgentSummary[];
      total: number;
    }>;
  }

  getAgent(id: string, agentId: number): Promise<AgentDetail> {
    return this.request("GET", `/simulations/${id}/agents/${agentId}`) as Promise<AgentDetail>;
  }

  interview(
    id: string,
    agentId: number,
    question: string,
    key?: string,
  ): Promise<{ agent_id: number; question: string; answer: string }> {
    return this.request(
      "POST",
      `/simulations/${id}/agents/${agentId}/interview`,
      { question },
      key,
    ) as Promise<{ agent_id: number; question: string; answer: string }>;
  }

  submitIntervention(
    id: string,
    payload: InterventionPayload,
    key?: string,
  ): Promise<unknown> {
    return this.request("POST", `/simulations/${id}/interventions`, payload, key);
  }

  submitScore(payload: ScoreFeedbackPayload, key?: string): Promise<unknown> {
    return this.request("POST", "/feedback/score", payload, key);
  }

  submitRevision(payload: RevisionFeedbackPayload, key?: string): Promise<unknown> {
    return this.request("POST", "/feedback/revision", payload, key);
  }

  exportDataset(
    kind: "sft" | "reward",
    path: string,
    simulationId?: string,
    key?: string,
  ): Promise<{ path: string; count: number }> {
    const body = {
      path,
      ...(simulationId !== undefined ? { simulation_id: simulationId } : {}),
    };
    return this.request("POST", `/export/${kind}`, body, key) as Promise<{
      path: string;
      count: number;
    }>;
  }

  triggerFinetune(
    method: "sft" | "ppo",
    endpoint: string,
    simulationId?: string,
    key?: string,
  ): Promise<{ job_id: string }> {
    const body = {
      method,
      endpoint,
      ...(simulationId !== undefined ? { simulation_id: simulationId } : {}),
    };
    return this.request("POST", "/finetune", body, key) as Promise<{ job_id: string }>;
  }
}
