/** Recorded API fixtures: real responses captured from the engine's HTTP
 * service, so the UI suite runs without a live engine. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type {
  ActionEvent,
  AgentDetail,
  AgentSummary,
  ApiError,
  SimulationHandle,
} from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

function load<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8")) as T;
}

export const fixtureEvents = load<ActionEvent[]>("events.json");
export const fixtureHandle = load<{
  created: SimulationHandle;
  finished: SimulationHandle;
}>("handle.json");
export const fixtureAgents = load<{ agents: AgentSummary[]; total: number }>(
  "agents.json",
);
export const fixtureAgentDetail = load<AgentDetail>("agent0.json");
export const fixtureErrors = load<{
  num_agents_zero: ApiError;
  unknown_scenario: ApiError;
}>("errors.json");
export const fixtureSseBody = readFileSync(
  join(here, "fixtures", "events.sse.txt"),
  "utf-8",
);
