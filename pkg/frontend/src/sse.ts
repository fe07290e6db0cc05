/** Minimal SSE wire parsing for the /events stream.
 *
 * The server emits `id: <seq>` + `data: <json>` frames separated by blank
 * lines. Parsing is incremental so a network read can end mid-frame.
 */

import type { ActionEvent } from "./types.js";

export class SseParser {
  private buffer = "";

  /** Feed a chunk of the response body; returns any completed events. */
  push(chunk: string): ActionEvent[] {
    this.buffer += chunk;
    const events: ActionEvent[] = [];
    let boundary: number;
    while ((boundary = this.buffer.indexOf("\n\n")) !== -1) {
      const frame = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const data = frame
        .split("\n")
        .filter((line) => line.startsWith("data: "))
        .map((line) => line.slice(6))
        .join("\n");
      if (data) events.push(JSON.parse(data) as ActionEvent);
    }
    return events;
  }
}

/** Parse a complete SSE body in one go. */
export function parseSseBody(body: string): ActionEvent[] {
  return new SseParser().push(body.endsWith("\n\n") ? body : body + "\n\n");
}

/** URL for subscribing (or resuming) the event stream of a simulation. */
export function eventStreamUrl(
  baseUrl: string,
  simulationId: string,
  cursor: number,
): string {
  const base = baseUrl.replace(/\/$/, "");
  return `${base}/simulations/${simulationId}/events?from_seq=${cursor}`;
}
