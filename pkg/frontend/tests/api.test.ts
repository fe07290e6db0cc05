import { describe, expect, it } from "vitest";

import { ApiClient, ApiRequestError, newIdempotencyKey, type FetchLike } from "../src/api.js";
import { eventStreamUrl } from "../src/sse.js";
import { fixtureAgentDetail, fixtureAgents, fixtureErrors, fixtureHandle } from "./fixtures.js";

interface Recorded {
  url: string;
  method: string;
  headers: Record<string, string>;
  body?: string;
}

/** Fetch stub that replays recorded fixture responses. */
function fixtureFetch(
  routes: Record<string, { status: number; body: unknown }>,
): { fetch: FetchLike; calls: Recorded[] } {
  const calls: Recorded[] = [];
  const fetch: FetchLike = async (url, init) => {
    calls.push({
      url,
      method: init?.method ?? "GET",
      headers: init?.headers ?? {},
      ...(init?.body !== undefined ? { body: init.body } : {}),
    });
    const route = routes[`${init?.method ?? "GET"} ${url}`];
    if (!route) throw new Error(`no fixture for ${init?.method} ${url}`);
    return {
      status: route.status,
      json: async () => route.body,
      text: async () => JSON.stringify(route.body),
    };
  };
  return { fetch, calls };
}

const BASE = "http://engine.test";

describe("api client", () => {
  it("returns the recorded handle on create", async () => {
    const { fetch } = fixtureFetch({
      [`POST ${BASE}/simulations`]: { status: 201, body: fixtureHandle.created },
    });
    const client = new ApiClient(BASE, fetch);
    const handle = await client.createSimulation({
      scenario: "recommender",
      num_agents: 50,
      rounds: 20,
      seed: 11,
      workers: 8,
      backend: { kind: "mock_deterministic", seed: 11 },
    });
    expect(handle).toEqual(fixtureHandle.created);
  });

  it("surfaces recorded API errors with code and message", async () => {
    const { fetch } = fixtureFetch({
      [`POST ${BASE}/simulations`]: { status: 400, body: fixtureErrors.num_agents_zero },
    });
    const client = new ApiClient(BASE, fetch);
    await expect(
      client.createSimulation({} as never),
    ).rejects.toMatchObject({ code: "invalid_config", status: 400 });
    await expect(client.createSimulation({} as never)).rejects.toBeInstanceOf(
      ApiRequestError,
    );
  });

  it("sends an Idempotency-Key on every mutation, none on reads", async () => {
    const simId = fixtureHandle.created.id;
    const { fetch, calls } = fixtureFetch({
      [`POST ${BASE}/feedback/score`]: { status: 201, body: { ok: true } },
      [`GET ${BASE}/simulations/${simId}`]: {
        status: 200,
        body: fixtureHandle.finished,
      },
    });
    const client = new ApiClient(BASE, fetch);
    await client.submitScore({ event_seq: 0, s: 7, source: "human" });
    await client.getSimulation(simId);
    expect(calls[0]!.headers["Idempotency-Key"]).toBeTruthy();
    expect(calls[1]!.headers["Idempotency-Key"]).toBeUndefined();
  });

  it("reuses the same key when retrying the same logical mutation", async () => {
    const { fetch, calls } = fixtureFetch({
      [`POST ${BASE}/feedback/revision`]: { status: 201, body: { ok: true } },
    });
    const client = new ApiClient(BASE, fetch);
    const key = newIdempotencyKey();
    const payload = { event_seq: 4, a_prime: "better" };
    await client.submitRevision(payload, key);
    await client.submitRevision(payload, key); // retry after a flaky response
    expect(calls[0]!.headers["Idempotency-Key"]).toBe(key);
    expect(calls[1]!.headers["Idempotency-Key"]).toBe(key);
    expect(calls[0]!.body).toBe(calls[1]!.body);
  });

  it("generates distinct keys for distinct mutations", () => {
    expect(newIdempotencyKey()).not.toBe(newIdempotencyKey());
  });

  it("fetches agent search results and profile detail from fixtures", async () => {
    const simId = fixtureHandle.created.id;
    const { fetch } = fixtureFetch({
      [`GET ${BASE}/simulations/${simId}/agents?q=&offset=0&limit=50`]: {
        status: 200,
        body: fixtureAgents,
      },
      [`GET ${BASE}/simulations/${simId}/agents/0`]: {
        status: 200,
        body: fixtureAgentDetail,
      },
    });
    const client = new ApiClient(BASE, fetch);
    const page = await client.searchAgents(simId);
    expect(page.total).toBe(50);
    const detail = await client.getAgent(simId, 0);
    expect(detail.profile.id).toBe(0);
    expect(detail.recent_events.length).toBeGreaterThan(0);
  });

  it("builds resumable event-stream URLs from the feed cursor", () => {
    expect(eventStreamUrl(`${BASE}/`, "sim-1", 599)).toBe(
      `${BASE}/simulations/sim-1/events?from_seq=599`,
    );
  });
});
