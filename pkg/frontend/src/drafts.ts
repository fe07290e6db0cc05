/** Label drafts: in-progress score/revision feedback on selected events.
 *
 * Drafts persist in Storage (localStorage in the browser) so they survive
 * feed updates and page reloads until submitted, and each draft holds
 * exactly one of a score or a revision.
 */

import type {
  ActionEvent,
  RevisionFeedbackPayload,
  ScoreFeedbackPayload,
} from "./types.js";

export type LabelDraft =
  | { event_seq: number; score: number }
  | { event_seq: number; revision: string };

export class DraftValidationError extends Error {}

export function validateDraft(draft: LabelDraft, original?: ActionEvent): void {
  if ("score" in draft && "revision" in draft) {
    throw new DraftValidationError("draft must set exactly one of score/revision");
  }
  if ("score" in draft) {
    if (!Number.isFinite(draft.score) || draft.score < 0 || draft.score > 10) {
      throw new DraftValidationError("score must be in [0, 10]");
    }
  } else if ("revision" in draft) {
    if (!draft.revision.trim()) {
      throw new DraftValidationError("revision must be non-empty");
    }
    if (original && draft.revision === original.a) {
      throw new DraftValidationError("revision must differ from the original action");
    }
  } else {
    throw new DraftValidationError("draft must set exactly one of score/revision");
  }
}

export function scorePayload(
  draft: Extract<LabelDraft, { score: number }>,
  simulationId?: string,
): ScoreFeedbackPayload {
  return {
    ...(simulationId !== undefined ? { simulation_id: simulationId } : {}),
    event_seq: draft.event_seq,
    s: draft.score,
    source: "human",
  };
}

export function revisionPayload(
  draft: Extract<LabelDraft, { revision: string }>,
  simulationId?: string,
): RevisionFeedbackPayload {
  return {
    ...(simulationId !== undefined ? { simulation_id: simulationId } : {}),
    event_seq: draft.event_seq,
    a_prime: draft.revision,
  };
}

/** Minimal Storage surface so tests can inject a fake. */
export interface KeyValueStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class DraftStore {
  private drafts = new Map<number, LabelDraft>();

  constructor(
    private storage: KeyValueStorage,
    private storageKey = "gensim.labelDrafts",
  ) {
    const raw = storage.getItem(storageKey);
    if (raw) {
      for (const draft of JSON.parse(raw) as LabelDraft[]) {
        this.drafts.set(draft.event_seq, draft);
      }
    }
  }

  /** Validate and stage a draft; replaces any prior draft for the event. */
  put(draft: LabelDraft, original?: ActionEvent): void {
    validateDraft(draft, original);
    this.drafts.set(draft.event_seq, draft);
    this.persist();
  }

  get(eventSeq: number): LabelDraft | undefined {
    return this.drafts.get(eventSeq);
  }

  /** Drop a draft after successful submission. */
  remove(eventSeq: number): void {
    this.drafts.delete(eventSeq);
    this.persist();
  }

  all(): LabelDraft[] {
    return [...this.drafts.values()].sort((a, b) => a.event_seq - b.event_seq);
  }

  revisionCount(): number {
    return this.all().filter((d) => "revision" in d).length;
  }

  /** The "Export SFT" button is enabled only when revisions exist. */
  canExportSft(submittedRevisions: number): boolean {
    return submittedRevisions > 0;
  }

  private persist(): void {
    this.storage.setItem(this.storageKey, JSON.stringify(this.all()));
  }
}
