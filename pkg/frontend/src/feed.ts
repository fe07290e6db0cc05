/** Behavior-feed state: an append-only, seq-keyed event buffer.
 *
 * Every rendered row comes from the server log; duplicates from
 * reconnect overlap are dropped by seq, and the cursor only moves forward,
 * so `from_seq=cursor` resumes cleanly after any disconnect.
 */

import type { ActionEvent } from "./types.js";

export class FeedStore {
  private events: ActionEvent[] = [];
  private seen = new Set<number>();
  private _cursor = -1;

  /** Last seq seen; -1 before the first event. Monotone non-decreasing. */
  get cursor(): number {
    return this._cursor;
  }

  get size(): number {
    return this.events.length;
  }

  /** Insert events, ignoring any seq already present. Returns the number of
   * events actually added. */
  ingest(batch: ActionEvent[]): number {
    let added = 0;
    for (const event of batch) {
      if (this.seen.has(event.seq)) continue;
      this.seen.add(event.seq);
      this.events.push(event);
      added += 1;
      if (event.seq > this._cursor) this._cursor = event.seq;
    }
    if (added > 0) this.events.sort((a, b) => a.seq - b.seq);
    return added;
  }

  all(): readonly ActionEvent[] {
    return this.events;
  }

  /** True when rendered seqs are strictly increasing without gaps. */
  isContiguous(): boolean {
    for (let i = 0; i < this.events.length; i++) {
      if (this.events[i]!.seq !== (this.events[0]?.seq ?? 0) + i) return false;
    }
    return true;
  }
}

export interface WindowSlice {
  start: number;
  end: number; // exclusive
  topPadding: number; // px of spacer above the rendered slice
  totalHeight: number; // px height of the whole virtual list
}

/** Compute the visible slice for a fixed-row-height virtualized list.
 * `overscan` extra rows are rendered on each side to avoid blank flashes. */
export function visibleWindow(
  total: number,
  scrollTop: number,
  viewportHeight: number,
  rowHeight: number,
  overscan = 5,
): WindowSlice {
  if (rowHeight <= 0) throw new Error("rowHeight must be positive");
  const first = Math.floor(Math.max(0, scrollTop) / rowHeight);
  const visible = Math.ceil(viewportHeight / rowHeight);
  const start = Math.max(0, first - overscan);
  const end = Math.min(total, first + visible + overscan);
  return {
    start,
    end,
    topPadding: start * rowHeight,
    totalHeight: total * rowHeight,
  };
}

/** One-line render model for a feed row: round, agent, parsed action. */
export function rowLabel(event: ActionEvent): string {
  const action = event.error
    ? `error: ${event.error}`
    : JSON.stringify(event.parsed);
  return `r${event.round} · agent ${event.agent_id} · ${action}`;
}
