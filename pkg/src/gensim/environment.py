"""Environment: all non-agent simulation state.

Holds the round counter, global key-value state, the scenario-owned state
blob, the intervention queue, and the interview/search utilities. During
a round the environment is read-only to workers; mutations happen
single-threaded at the round barrier.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional

from .agent import Agent, AgentProfile, render_prompt, DEFAULT_TEMPLATE
from .gateway import ChatRequest


class InterventionError(ValueError):
    pass


class NotFoundError(KeyError):
    pass


@dataclass
class Intervention:
    apply_at_round: int
    kind: str  # set_global | broadcast
    key: Optional[str] = None
    value: Optional[str] = None
    message: Optional[str] = None
    issued_by: str = "script"  # api | ui | script

    def __post_init__(self):
        if self.kind == "set_global":
            if self.key is None or self.value is None:
                raise InterventionError("set_global needs key and value")
        elif self.kind == "broadcast":
            if not self.message:
                raise InterventionError("broadcast needs a message")
        else:
            raise InterventionError(f"unknown intervention kind {self.kind!r}")

    def to_json(self) -> dict:
        return {
            "apply_at_round": self.apply_at_round,
            "kind": self.kind,
            "key": self.key,
            "value": self.value,
            "message": self.message,
            "issued_by": self.issued_by,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Intervention":
        return cls(
            apply_at_round=int(obj["apply_at_round"]),
            kind=obj["kind"],
            key=obj.get("key"),
            value=obj.get("value"),
            message=obj.get("message"),
            issued_by=obj.get("issued_by", "script"),
        )


@dataclass
class InterviewExchange:
    agent_id: int
    question: str
    answer: str
    round: int

    def to_json(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "question": self.question,
            "answer": self.answer,
            "round": self.round,
        }


class Environment:
    """Round counter + globals + scenario state + intervention queue."""

    def __init__(self):
        self.round = 0
        self.globals: dict = {}
        self.scenario_state: dict = {}
        self._queue: list[Intervention] = []
        self._queue_lock = threading.Lock()
        self._active_broadcasts: list[str] = []
        self.interview_log: list[InterviewExchange] = []

    def submit_intervention(self, intervention: Intervention):
        """Queue an intervention; applied at the start of its round."""
        if intervention.apply_at_round < self.round:
            raise InterventionError(
                f"apply_at_round {intervention.apply_at_round} is in the past "
                f"(current round {self.round})"
            )
        with self._queue_lock:
            self._queue.append(intervention)

    def pending_interventions(self) -> list[Intervention]:
        with self._queue_lock:
            return list(self._queue)

    def apply_due_interventions(self):
        """Apply interventions due this round, before any agent acts.

        set_global mutates globals; broadcast messages are active for this
        round only. Runs single-threaded at the round barrier.
        """
        self._active_broadcasts = []
        with self._queue_lock:
            due = [i for i in self._queue if i.apply_at_round == self.round]
            self._queue = [i for i in self._queue if i.apply_at_round != self.round]
        for intervention in due:
            if intervention.kind == "set_global":
                self.globals[intervention.key] = intervention.value
            elif intervention.kind == "broadcast":
                self._active_broadcasts.append(intervention.message)

    def view(self) -> str:
        """The environment text prepended to every agent prompt this round."""
        lines = [f"round: {self.round}"]
        lines += [f"{k}: {v}" for k, v in self.globals.items()]
        lines += [f"announcement: {m}" for m in self._active_broadcasts]
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "round": self.round,
            "globals": self.globals,
            "scenario_state": self.scenario_state,
            "queue": [i.to_json() for i in self._queue],
            "active_broadcasts": list(self._active_broadcasts),
            "interview_log": [x.to_json() for x in self.interview_log],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Environment":
        env = cls()
        env.round = int(obj["round"])
        env.globals = dict(obj["globals"])
        env.scenario_state = obj["scenario_state"]
        env._queue = [Intervention.from_json(i) for i in obj.get("queue", [])]
        env._active_broadcasts = list(obj.get("active_broadcasts", []))
        env.interview_log = [
            InterviewExchange(
                agent_id=x["agent_id"],
                question=x["question"],
                answer=x["answer"],
                round=x["round"],
            )
            for x in obj.get("interview_log", [])
        ]
        return env


def interview(agents: dict, env: Environment, agent_id: int, question: str, backend) -> InterviewExchange:
    """Ask one agent a question out-of-band.

    Read-only on the simulation trajectory: the exchange goes to the
    interview log, never into agent memory.
    """
    if agent_id not in agents:
        raise NotFoundError(f"no agent with id {agent_id}")
    agent: Agent = agents[agent_id]
    memories = agent.retrieve_memories(question, agent.memory_config.retrieval_k, env.round)
    prompt = render_prompt(
        DEFAULT_TEMPLATE,
        agent.profile,
        memories,
        env.view(),
        f"Answer this interview question in first person: {question}",
    )
    response = backend.complete(ChatRequest.user(prompt))
    exchange = InterviewExchange(
        agent_id=agent_id, question=question, answer=response.content, round=env.round
    )
    env.interview_log.append(exchange)
    return exchange


def search_agents(profiles, query: str) -> list[AgentProfile]:
    """Profiles whose public attribute values contain the query
    (case-insensitive substring), ordered by agent id. Private attributes
    are never searched."""
    needle = query.lower()
    hits = [
        p
        for p in profiles
        if any(needle in str(v).lower() for v in p.public_attrs.values()) or not needle
    ]
    return sorted(hits, key=lambda p: p.id)
