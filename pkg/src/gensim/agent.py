"""Agents: profile, layered memory, and prompt assembly.

An agent is a profile (public + private attribute maps), a memory made of
a bounded short-term buffer, an append-only long-term store, and a
reflection mechanism, plus the template machinery that turns profile +
memories + environment view into the LLM prompt driving each action.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .gateway import ChatRequest

AgentId = int  # unique 64-bit identifier, totally ordered


class ValidationError(ValueError):
    pass


@dataclass
class AgentProfile:
    id: AgentId
    public_attrs: dict
    private_attrs: dict = field(default_factory=dict)

    def __post_init__(self):
        overlap = set(self.public_attrs) & set(self.private_attrs)
        if overlap:
            raise ValidationError(f"public/private keys overlap: {sorted(overlap)}")
        if "name" not in self.public_attrs:
            raise ValidationError("profile must have a public 'name'")

    @property
    def name(self) -> str:
        return self.public_attrs["name"]

    def to_json(self) -> dict:
        return {"id": self.id, "public": self.public_attrs, "private": self.private_attrs}

    @classmethod
    def from_json(cls, obj: dict) -> "AgentProfile":
        return cls(
            id=int(obj["id"]),
            public_attrs=dict(obj.get("public", {})),
            private_attrs=dict(obj.get("private", {})),
        )


@dataclass
class MemoryRecord:
    content: str
    round: int
    importance: float = 0.5
    kind: str = "observation"  # observation | reflection

    def __post_init__(self):
        if self.round < 0:
            raise ValidationError("round must be non-negative")
        if not 0.0 <= self.importance <= 1.0:
            raise ValidationError("importance must be in [0, 1]")
        if self.kind not in ("observation", "reflection"):
            raise ValidationError(f"unknown memory kind {self.kind!r}")

    def to_json(self) -> dict:
        return {
            "content": self.content,
            "round": self.round,
            "importance": self.importance,
            "kind": self.kind,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MemoryRecord":
        return cls(
            content=obj["content"],
            round=int(obj["round"]),
            importance=float(obj["importance"]),
            kind=obj.get("kind", "observation"),
        )


@dataclass
class MemoryConfig:
    short_term_capacity: int = 10
    retrieval_k: int = 5
    reflection_threshold: float = math.inf
    recency_half_life: float = 4.0

    def __post_init__(self):
        if self.short_term_capacity <= 0:
            raise ValidationError("short_term_capacity must be positive")
        if self.retrieval_k <= 0:
            raise ValidationError("retrieval_k must be positive")
        if self.reflection_threshold <= 0:
            raise ValidationError("reflection_threshold must be positive")
        if self.recency_half_life <= 0:
            raise ValidationError("recency_half_life must be positive")

    def to_json(self) -> dict:
        thr = self.reflection_threshold
        return {
            "short_term_capacity": self.short_term_capacity,
            "retrieval_k": self.retrieval_k,
            "reflection_threshold": None if math.isinf(thr) else thr,
            "recency_half_life": self.recency_half_life,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MemoryConfig":
        thr = obj.get("reflection_threshold")
        return cls(
            short_term_capacity=int(obj.get("short_term_capacity", 10)),
            retrieval_k=int(obj.get("retrieval_k", 5)),
            reflection_threshold=math.inf if thr is None else float(thr),
            recency_half_life=float(obj.get("recency_half_life", 4.0)),
        )


def token_set(text: str) -> frozenset:
    return frozenset(re.findall(r"[a-z0-9']+", text.lower()))


def lexical_similarity(a: str, b: str) -> float:
    """Jaccard similarity over lowercase word sets."""
    sa, sb = token_set(a), token_set(b)
    if not sa and not sb:
        return 0.0
    return len(sa & sb) / len(sa | sb)


REFLECTION_TEMPLATE = (
    "You are reviewing recent memories. Summarize high-level insights from "
    "the following:\n{memories}\nReply with one concise insight."
)


class Agent:
    """One simulated individual: profile + memory + LLM-driven actions.

    Owned by one worker at a time during a round; never mutated
    concurrently.
    """

    def __init__(self, profile: AgentProfile, memory_config: Optional[MemoryConfig] = None):
        self.profile = profile
        self.memory_config = memory_config or MemoryConfig()
        self.long_term: list[MemoryRecord] = []
        self.short_term: list[int] = []  # indices into long_term, FIFO
        self.importance_since_reflection = 0.0
        # scenario-owned per-agent flags (e.g. employment status)
        self.tags: dict = {}

    @property
    def id(self) -> AgentId:
        return self.profile.id

    def append_memory(self, record: MemoryRecord, current_round: Optional[int] = None):
        if current_round is not None and record.round > current_round:
            raise ValidationError("memory round is in the future")
        self.long_term.append(record)
        self.short_term.append(len(self.long_term) - 1)
        if len(self.short_term) > self.memory_config.short_term_capacity:
            self.short_term.pop(0)
        self.importance_since_reflection += record.importance

    def short_term_records(self) -> list[MemoryRecord]:
        return [self.long_term[i] for i in self.short_term]

    def retrieve_memories(self, query: str, k: int, current_round: int) -> list[MemoryRecord]:
        """Top-k memories by recency + importance + lexical similarity.

        score = exp(-ln2 * age / half_life) + importance + jaccard(query, content)
        Ties break by newer round, then by insertion order.
        """
        if k < 1:
            raise ValidationError("k must be >= 1")
        if not self.long_term:
            return []
        half_life = self.memory_config.recency_half_life
        query_tokens = token_set(query)

        def score(rec: MemoryRecord) -> float:
            age = max(0, current_round - rec.round)
            recency = math.exp(-math.log(2) * age / half_life)
            rec_tokens = token_set(rec.content)
            union = query_tokens | rec_tokens
            sim = len(query_tokens & rec_tokens) / len(union) if union else 0.0
            return recency + rec.importance + sim

        ranked = sorted(
            enumerate(self.long_term),
            key=lambda pair: (-score(pair[1]), -pair[1].round, pair[0]),
        )
        return [rec for _i, rec in ranked[:k]]

    def reflect(self, backend, current_round: int) -> Optional[MemoryRecord]:
        """Synthesize a high-level insight once enough importance accrues.

        No-op while the cumulative importance counter is below the
        threshold. On backend failure the counter is left unchanged.
        """
        if self.importance_since_reflection < self.memory_config.reflection_threshold:
            return None
        top = self.retrieve_memories(
            "high-level insights", self.memory_config.retrieval_k, current_round
        )
        prompt = REFLECTION_TEMPLATE.format(
            memories="\n".join(f"- {m.content}" for m in top)
        )
        response = backend.complete(ChatRequest.user(prompt))
        record = MemoryRecord(
            content=response.content,
            round=current_round,
            importance=1.0,
            kind="reflection",
        )
        self.append_memory(record, current_round)
        self.importance_since_reflection = 0.0
        return record

    def persona(self, include_private: bool = False) -> str:
        lines = [f"{k}: {v}" for k, v in self.profile.public_attrs.items()]
        if include_private:
            lines += [f"{k}: {v}" for k, v in self.profile.private_attrs.items()]
        return "\n".join(lines)

    def state_to_json(self) -> dict:
        return {
            "profile": self.profile.to_json(),
            "memory_config": self.memory_config.to_json(),
            "long_term": [r.to_json() for r in self.long_term],
            "short_term": list(self.short_term),
            "importance_since_reflection": self.importance_since_reflection,
            "tags": self.tags,
        }

    @classmethod
    def state_from_json(cls, obj: dict) -> "Agent":
        agent = cls(
            AgentProfile.from_json(obj["profile"]),
            MemoryConfig.from_json(obj["memory_config"]),
        )
        agent.long_term = [MemoryRecord.from_json(r) for r in obj["long_term"]]
        agent.short_term = [int(i) for i in obj["short_term"]]
        agent.importance_since_reflection = float(obj["importance_since_reflection"])
        agent.tags = dict(obj.get("tags", {}))
        return agent


PLACEHOLDERS = ("profile", "profile.private", "memories", "environment", "instruction")
_PLACEHOLDER_RE = re.compile(r"\{([a-z_.]+)\}")


@dataclass(frozen=True)
class PromptTemplate:
    """Template with named placeholders {profile}, {profile.private},
    {memories}, {environment}, {instruction}."""

    text: str

    def placeholders(self) -> list[str]:
        return _PLACEHOLDER_RE.findall(self.text)

    def validate(self):
        unknown = [p for p in self.placeholders() if p not in PLACEHOLDERS]
        if unknown:
            raise ValidationError(f"unbound placeholders: {unknown}")


DEFAULT_TEMPLATE = PromptTemplate(
    "You are the following person:\n{profile}\n"
    "Relevant memories:\n{memories}\n"
    "Environment:\n{environment}\n"
    "{instruction}"
)


def render_prompt(
    template: PromptTemplate,
    profile: AgentProfile,
    memories: Iterable[MemoryRecord],
    env_view: str,
    instruction: str,
) -> str:
    """Deterministic pure rendering; private attrs only via {profile.private}."""
    template.validate()
    public = "\n".join(f"{k}: {v}" for k, v in profile.public_attrs.items())
    private = "\n".join(f"{k}: {v}" for k, v in profile.private_attrs.items())
    memory_text = "\n".join(m.content for m in memories)

    def repl(match: re.Match) -> str:
        name = match.group(1)
        if name == "profile":
            return public
        if name == "profile.private":
            return private
        if name == "memories":
            return memory_text
        if name == "environment":
            return env_view
        if name == "instruction":
            return instruction
        raise ValidationError(f"unbound placeholder {{{name}}}")

    return _PLACEHOLDER_RE.sub(repl, template.text)


def load_population(path, memory_config: Optional[MemoryConfig] = None) -> list[Agent]:
    """Load agents from a JSON-lines population file; rejects duplicate ids."""
    agents: list[Agent] = []
    seen: set[int] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            profile = AgentProfile.from_json(obj)
            if profile.id in seen:
                raise ValidationError(f"duplicate agent id {profile.id} at line {lineno}")
            seen.add(profile.id)
            agents.append(Agent(profile, memory_config))
    return agents


def save_population(agents: Iterable[Agent], path):
    with open(path, "w", encoding="utf-8") as fh:
        for agent in agents:
            fh.write(json.dumps(agent.profile.to_json(), ensure_ascii=False) + "\n")
