/** Top-level UI state: one open simulation, its feed, the selected agent,
 * and pending label drafts. Drafts may only reference events that exist in
 * the feed — the UI never labels state it has not seen. */

import { DraftStore, type KeyValueStorage, type LabelDraft } from "./drafts.js";
import { FeedStore } from "./feed.js";
import type { ActionEvent, SimulationHandle } from "./types.js";

export class ViewState {
  feed = new FeedStore();
  drafts: DraftStore;
  handle: SimulationHandle | null = null;
  selectedAgent: number | null = null;

  constructor(storage: KeyValueStorage) {
    this.drafts = new DraftStore(storage);
  }

  openSimulation(handle: SimulationHandle): void {
    this.handle = handle;
    this.feed = new FeedStore();
    this.selectedAgent = null;
  }

  /** Stage a label draft for an event that is present in the feed. */
  stageDraft(draft: LabelDraft): void {
    const event = this.findEvent(draft.event_seq);
    if (!event) {
      throw new Error(`no event with seq ${draft.event_seq} in the feed`);
    }
    this.drafts.put(draft, event);
  }

  findEvent(seq: number): ActionEvent | undefined {
    return this.feed.all().find((e) => e.seq === seq);
  }
}
