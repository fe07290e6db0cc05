/** Config-wizard validation. Mirrors the server's invalid_config rules so a
 * bad form never produces a request. */

import type { SimulationConfig } from "./types.js";

export const SCENARIOS = ["job_market", "recommender", "group_discussion"] as const;
export const BACKEND_KINDS = [
  "mock_deterministic",
  "mock_stochastic",
  "http_openai_compatible",
] as const;

export interface ConfigForm {
  scenario: string;
  num_agents: string;
  rounds: string;
  seed: string;
  workers: string;
  backend_kind: string;
}

export type FieldErrors = Partial<Record<keyof ConfigForm, string>>;

function intField(raw: string): number | null {
  if (!/^-?\d+$/.test(raw.trim())) return null;
  return parseInt(raw, 10);
}

/** Returns field-keyed errors; an empty object means the form is valid. */
export function validateConfigForm(form: ConfigForm): FieldErrors {
  const errors: FieldErrors = {};
  if (!(SCENARIOS as readonly string[]).includes(form.scenario)) {
    errors.scenario = `unknown scenario '${form.scenario}'`;
  }
  const numAgents = intField(form.num_agents);
  if (numAgents === null || numAgents < 1) {
    errors.num_agents = "num_agents must be an integer >= 1";
  }
  const rounds = intField(form.rounds);
  if (rounds === null || rounds < 1) {
    errors.rounds = "rounds must be an integer >= 1";
  }
  const workers = intField(form.workers);
  if (workers === null || workers < 1) {
    errors.workers = "workers must be an integer >= 1";
  }
  if (intField(form.seed) === null) {
    errors.seed = "seed must be an integer";
  }
  if (!(BACKEND_KINDS as readonly string[]).includes(form.backend_kind)) {
    errors.backend_kind = `unknown backend kind '${form.backend_kind}'`;
  }
  return errors;
}

/** Convert a validated form into the request body for POST /simulations.
 * Throws if the form still has errors — callers must gate on validation. */
export function formToConfig(form: ConfigForm): SimulationConfig {
  const errors = validateConfigForm(form);
  if (Object.keys(errors).length > 0) {
    throw new Error(`form has errors: ${Object.keys(errors).join(", ")}`);
  }
  return {
    scenario: form.scenario,
    num_agents: parseInt(form.num_agents, 10),
    rounds: parseInt(form.rounds, 10),
    seed: parseInt(form.seed, 10),
    workers: parseInt(form.workers, 10),
    backend: { kind: form.backend_kind, seed: parseInt(form.seed, 10) },
  };
}

/** Map a server invalid_config message back to the form field it names, so
 * the wizard can highlight it even when client validation missed the case. */
export function fieldFromServerMessage(message: string): keyof ConfigForm | null {
  const fields: (keyof ConfigForm)[] = [
    "num_agents",
    "rounds",
    "workers",
    "seed",
    "scenario",
  ];
  for (const field of fields) {
    if (message.includes(field)) return field;
  }
  if (message.includes("backend")) return "backend_kind";
  return null;
}
