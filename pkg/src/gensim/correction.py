"""Error-correction loop.

Captures score feedback (q, a, s) and revision feedback (q, a') from a
judge backend or from humans, exports fine-tuning datasets, applies a
revision-replay adapter in place of weight updates, and tracks
round-over-round quality. Feedback stores are append-only.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .agent import lexical_similarity
from .gateway import ChatRequest, ChatResponse, stable_hash
from .scheduler import ActionEvent


class JudgeFormatError(ValueError):
    pass


class NoOpRevisionError(ValueError):
    pass


class ExportError(ValueError):
    pass


class ProtocolError(RuntimeError):
    pass


@dataclass
class ScoreFeedback:
    event_seq: int
    q: str
    a: str
    s: float
    source: str = "judge"  # judge | human

    def __post_init__(self):
        if not 0.0 <= self.s <= 10.0:
            raise ValueError("score must be in [0, 10]")
        if self.source not in ("judge", "human"):
            raise ValueError(f"unknown feedback source {self.source!r}")


@dataclass
class RevisionFeedback:
    event_seq: int
    q: str
    a_prime: str
    source: str = "judge"

    def __post_init__(self):
        if not self.a_prime:
            raise ValueError("revision must be non-empty")
        if self.source not in ("judge", "human"):
            raise ValueError(f"unknown feedback source {self.source!r}")


DEFAULT_RUBRIC = (
    "You are judging a simulated agent behavior for reasonableness.\n"
    "Prompt:\n{q}\nBehavior:\n{a}\n"
    "Reply with a single score from 0 to 10."
)
DEFAULT_REVISE_RUBRIC = (
    "You are revising a simulated agent behavior.\n"
    "Prompt:\n{q}\nBehavior:\n{a}\n"
    "Reply with the corrected behavior only."
)


@dataclass
class JudgeConfig:
    backend: object
    rubric: str = DEFAULT_RUBRIC
    mode: str = "score"  # score | revise

    def __post_init__(self):
        if self.mode not in ("score", "revise"):
            raise ValueError(f"unknown judge mode {self.mode!r}")
        if "{q}" not in self.rubric or "{a}" not in self.rubric:
            raise ValueError("rubric must contain {q} and {a} placeholders")


class FeedbackStore:
    """Append-only, thread-safe stores for both feedback kinds."""

    def __init__(self):
        self._lock = threading.Lock()
        self.scores: list[ScoreFeedback] = []
        self.revisions: list[RevisionFeedback] = []

    def add_score(self, fb: ScoreFeedback):
        with self._lock:
            self.scores.append(fb)

    def add_revision(self, fb: RevisionFeedback):
        with self._lock:
            self.revisions.append(fb)


_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?")


def parse_score(reply: str) -> float:
    """First number in [0, 10] found in the judge reply."""
    for match in _NUMBER_RE.finditer(reply):
        value = float(match.group(0))
        if 0.0 <= value <= 10.0:
            return value
    raise JudgeFormatError(f"no score in [0, 10] found in judge reply: {reply!r}")


def judge_score(event: ActionEvent, judge: JudgeConfig,
                store: Optional[FeedbackStore] = None) -> ScoreFeedback:
    if judge.mode != "score":
        raise ValueError("judge is not in score mode")
    reply = judge.backend.complete(
        ChatRequest.user(judge.rubric.format(q=event.q, a=event.a))
    )
    fb = ScoreFeedback(event_seq=event.seq, q=event.q, a=event.a, s=parse_score(reply.content))
    if store is not None:
        store.add_score(fb)
    return fb


def judge_revise(event: ActionEvent, judge: JudgeConfig,
                 store: Optional[FeedbackStore] = None) -> RevisionFeedback:
    if judge.mode != "revise":
        raise ValueError("judge is not in revise mode")
    reply = judge.backend.complete(
        ChatRequest.user(judge.rubric.format(q=event.q, a=event.a))
    )
    a_prime = reply.content
    if a_prime == event.a:
        raise NoOpRevisionError("revision is identical to the original action")
    fb = RevisionFeedback(event_seq=event.seq, q=event.q, a_prime=a_prime)
    if store is not None:
        store.add_revision(fb)
    return fb


def export_sft_dataset(revisions: Sequence[RevisionFeedback], path) -> int:
    """JSON-lines {"prompt": q, "completion": a'} in event_seq order."""
    if not revisions:
        raise ExportError("no revisions to export")
    ordered = sorted(revisions, key=lambda r: r.event_seq)
    with open(path, "w", encoding="utf-8") as fh:
        for rev in ordered:
            fh.write(
                json.dumps(
                    {"prompt": rev.q, "completion": rev.a_prime}, ensure_ascii=False
                )
                + "\n"
            )
    return len(ordered)


def export_reward_dataset(scores: Sequence[ScoreFeedback], path) -> int:
    """JSON-lines {"prompt", "completion", "score", "source"} in seq order."""
    if not scores:
        raise ExportError("no scores to export")
    ordered = sorted(scores, key=lambda s: s.event_seq)
    with open(path, "w", encoding="utf-8") as fh:
        for fb in ordered:
            fh.write(
                json.dumps(
                    {
                        "prompt": fb.q,
                        "completion": fb.a,
                        "score": fb.s,
                        "source": fb.source,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    return len(ordered)


class RevisionReplayAdapter:
    """Backend wrapper standing in for fine-tuned weights at desk scale.

    A request whose prompt has token-Jaccard similarity >= threshold to a
    stored q gets the stored a' back (highest similarity, ties by earliest
    event_seq); anything else is delegated to the wrapped backend.
    Immutable after construction.
    """

    backend_id = "revision_adapter"

    def __init__(self, backend, revisions: Iterable[RevisionFeedback], threshold: float = 0.8):
        self.backend = backend
        self.revisions = sorted(revisions, key=lambda r: r.event_seq)
        self.threshold = threshold
        self.total_concurrency = getattr(backend, "total_concurrency", None)

    def complete(self, request: ChatRequest) -> ChatResponse:
        prompt = request.full_text()
        best: Optional[RevisionFeedback] = None
        best_sim = -1.0
        for rev in self.revisions:  # earliest event_seq first, so ties keep it
            sim = lexical_similarity(prompt, rev.q)
            if sim > best_sim:
                best, best_sim = rev, sim
        if best is not None and best_sim >= self.threshold:
            return ChatResponse(
                content=best.a_prime,
                latency=0.0,
                backend_id=self.backend_id,
                token_estimate=len(best.a_prime.split()),
            )
        return self.backend.complete(request)


def apply_revision_adapter(backend, revisions, threshold: float = 0.8):
    return RevisionReplayAdapter(backend, revisions, threshold)


def trigger_external_finetune(dataset_path, endpoint_url: str, method: str = "sft") -> str:
    """POST the dataset reference to a training service; returns its job id.

    The engine never blocks on training; the returned id is an external
    handle only.
    """
    import httpx

    if method not in ("sft", "ppo"):
        raise ValueError("method must be 'sft' or 'ppo'")
    try:
        resp = httpx.post(
            f"{endpoint_url.rstrip('/')}/finetune",
            json={"dataset_path": str(dataset_path), "method": method},
            timeout=30.0,
        )
    except httpx.HTTPError as exc:
        raise ProtocolError(f"training endpoint unreachable: {exc}") from exc
    if resp.status_code != 200:
        raise ProtocolError(f"training endpoint returned {resp.status_code}")
    try:
        job_id = resp.json()["job_id"]
    except (ValueError, KeyError) as exc:
        raise ProtocolError(f"malformed training-service reply: {resp.text!r}") from exc
    return str(job_id)


def evaluate_rounds(
    events: Sequence[ActionEvent],
    judge: JudgeConfig,
    sample_per_round: int = 100,
    seed: int = 0,
) -> dict[int, float]:
    """Mean judge score per round over up to `sample_per_round` sampled
    events per round (seeded deterministic sampling, no duplicates)."""
    by_round: dict[int, list[ActionEvent]] = {}
    for ev in events:
        by_round.setdefault(ev.round, []).append(ev)
    result: dict[int, float] = {}
    for rnd in sorted(by_round):
        pool = by_round[rnd]
        if len(pool) > sample_per_round:
            ranked = sorted(pool, key=lambda e: stable_hash("sample", seed, rnd, e.seq))
            pool = ranked[:sample_per_round]
        scores = [judge_score(ev, judge).s for ev in pool]
        result[rnd] = sum(scores) / len(scores)
    return result
