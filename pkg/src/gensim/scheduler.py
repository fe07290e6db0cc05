"""Round-based execution core.

Each round: apply due interventions, build one task per active agent,
dispatch tasks over the gateway with bounded parallelism, enforce a
barrier, run the scenario's single-threaded resolution over results
sorted by agent id, append memories, and emit the event log. With a
deterministic backend the event log is invariant to worker count and
timing.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from .agent import Agent, MemoryConfig
from .environment import Environment
from .gateway import (
    ChatRequest,
    GatewayError,
    backend_concurrency,
    build_backend,
    pool_dispatch,
)
from .scenarios import make_scenario


class ConfigError(ValueError):
    def __init__(self, message: str, field_name: Optional[str] = None):
        super().__init__(message)
        self.field_name = field_name


class RoundAborted(RuntimeError):
    def __init__(self, report: "RoundReport"):
        super().__init__(
            f"round {report.round} aborted: {report.errors}/{report.events + report.errors} "
            "tasks failed terminally"
        )
        self.report = report


@dataclass
class SimulationConfig:
    scenario: str
    num_agents: int
    rounds: int
    seed: int = 0
    backend: dict = field(default_factory=lambda: {"kind": "mock_deterministic", "seed": 0})
    workers: int = 4
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    scenario_params: dict = field(default_factory=dict)

    def validate(self):
        from .scenarios import REGISTRY

        if self.scenario not in REGISTRY:
            raise ConfigError(f"unknown scenario {self.scenario!r}", "scenario")
        if self.num_agents < 1:
            raise ConfigError("num_agents must be >= 1", "num_agents")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1", "rounds")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1", "workers")
        if not isinstance(self.backend, dict) or "kind" not in self.backend:
            raise ConfigError("backend must be an object with a 'kind'", "backend")

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "num_agents": self.num_agents,
            "rounds": self.rounds,
            "seed": self.seed,
            "backend": self.backend,
            "workers": self.workers,
            "memory": self.memory.to_json(),
            "scenario_params": self.scenario_params,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SimulationConfig":
        try:
            memory = (
                MemoryConfig.from_json(obj["memory"]) if "memory" in obj else MemoryConfig()
            )
            cfg = cls(
                scenario=obj["scenario"],
                num_agents=int(obj["num_agents"]),
                rounds=int(obj["rounds"]),
                seed=int(obj.get("seed", 0)),
                backend=obj.get("backend", {"kind": "mock_deterministic", "seed": 0}),
                workers=int(obj.get("workers", 4)),
                memory=memory,
                scenario_params=dict(obj.get("scenario_params", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad config: {exc}") from exc
        cfg.validate()
        return cfg


@dataclass
class ActionEvent:
    seq: int
    round: int
    agent_id: int
    q: str
    a: str
    parsed: object
    latency: float = 0.0  # seconds
    error: Optional[str] = None

    def to_json(self) -> dict:
        obj = {
            "seq": self.seq,
            "round": self.round,
            "agent_id": self.agent_id,
            "q": self.q,
            "a": self.a,
            "parsed": self.parsed,
            "latency_ms": round(self.latency * 1000.0, 3),
        }
        if self.error is not None:
            obj["error"] = self.error
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "ActionEvent":
        return cls(
            seq=int(obj["seq"]),
            round=int(obj["round"]),
            agent_id=int(obj["agent_id"]),
            q=obj["q"],
            a=obj["a"],
            parsed=obj.get("parsed"),
            latency=float(obj.get("latency_ms", 0.0)) / 1000.0,
            error=obj.get("error"),
        )


@dataclass
class RoundReport:
    round: int
    events: int
    wall_time: float
    errors: int


class EventLog:
    """Append-only event log: in-memory list plus optional JSON-lines file,
    flushed once per round. Readers (SSE tails) wait on the condition."""

    def __init__(self, path=None):
        self.path = path
        self.events: list[ActionEvent] = []
        self._cond = threading.Condition()
        self._fh = open(path, "a", encoding="utf-8") if path else None

    def append_round(self, events: list[ActionEvent]):
        with self._cond:
            self.events.extend(events)
            if self._fh:
                for ev in events:
                    self._fh.write(
                        json.dumps(ev.to_json(), ensure_ascii=False, separators=(",", ":"))
                        + "\n"
                    )
                self._fh.flush()
            self._cond.notify_all()

    def snapshot(self, from_seq: int = -1) -> list[ActionEvent]:
        with self._cond:
            return [e for e in self.events if e.seq > from_seq]

    def wait_for_more(self, last_seq: int, timeout: float = 0.2) -> list[ActionEvent]:
        with self._cond:
            if not self.events or self.events[-1].seq <= last_seq:
                self._cond.wait(timeout)
            return [e for e in self.events if e.seq > last_seq]

    def notify_waiters(self):
        with self._cond:
            self._cond.notify_all()

    def close(self):
        if self._fh:
            self._fh.close()
            self._fh = None


class Simulation:
    """One simulation instance: agents, environment, scenario, event log."""

    ABORT_FRACTION = 0.5  # round aborts when terminal failures exceed this

    def __init__(self, config: SimulationConfig, backend=None, log_path=None, _init_scenario=True):
        config.validate()
        self.config = config
        self.backend = backend if backend is not None else build_backend(config.backend)
        self.scenario = make_scenario(config.scenario, config.scenario_params, config.seed)
        self.env = Environment()
        self.log = EventLog(log_path)
        self.next_seq = 0
        self.reports: list[RoundReport] = []
        self._stop = threading.Event()
        self.agents: dict[int, Agent] = {}
        if _init_scenario:
            population = self.scenario.init(config.num_agents, self.env, config.memory)
            self.agents = {a.id: a for a in population}

    def request_stop(self):
        """Ask the run loop to stop at the next round barrier."""
        self._stop.set()

    @property
    def current_round(self) -> int:
        return self.env.round

    def run_round(self) -> RoundReport:
        start = time.monotonic()
        self.env.apply_due_interventions()
        if self.scenario.uses_tasks:
            events, errors = self._run_task_round()
        else:
            raw, errors = self.scenario.run_discussions(
                self.agents, self.env, self.backend,
                backend_concurrency(self.backend, self.config.workers),
            )
            events = [
                ActionEvent(seq=0, round=self.env.round, agent_id=aid, q=q, a=a, parsed=parsed)
                for aid, q, a, parsed in raw
            ]
            events.sort(key=lambda e: (e.agent_id, e.parsed.get("turn", 0)))

        self._maybe_reflect()

        for ev in events:
            ev.seq = self.next_seq
            self.next_seq += 1
        self.log.append_round(events)
        report = RoundReport(
            round=self.env.round,
            events=len(events),
            wall_time=time.monotonic() - start,
            errors=errors,
        )
        self.reports.append(report)
        self.env.round += 1
        return report

    def _run_task_round(self):
        active = self.scenario.active_agents(self.agents, self.env)
        tasks = [self.scenario.build_task(a, self.env) for a in active]
        requests = [ChatRequest.user(t.prompt) for t in tasks]
        outcomes = pool_dispatch(self.backend, requests, max_workers=self.config.workers)

        events: list[ActionEvent] = []
        successes: list[tuple[int, dict]] = []
        terminal = 0
        for task, outcome in zip(tasks, outcomes):
            if isinstance(outcome, GatewayError):
                terminal += 1
                events.append(
                    ActionEvent(
                        seq=0,
                        round=self.env.round,
                        agent_id=task.agent_id,
                        q=task.prompt,
                        a="",
                        parsed=None,
                        error=str(outcome),
                    )
                )
            else:
                parsed = self.scenario.parse(outcome.content)
                successes.append((task.agent_id, parsed))
                events.append(
                    ActionEvent(
                        seq=0,
                        round=self.env.round,
                        agent_id=task.agent_id,
                        q=task.prompt,
                        a=outcome.content,
                        parsed=parsed,
                        latency=outcome.latency,
                    )
                )
        if tasks and terminal / len(tasks) > self.ABORT_FRACTION:
            raise RoundAborted(
                RoundReport(
                    round=self.env.round,
                    events=len(successes),
                    wall_time=0.0,
                    errors=terminal,
                )
            )
        self.scenario.resolve(sorted(successes, key=lambda s: s[0]), self.agents, self.env)
        events.sort(key=lambda e: e.agent_id)
        return events, terminal

    def _maybe_reflect(self):
        if math.isinf(self.config.memory.reflection_threshold):
            return
        for agent_id in sorted(self.agents):
            self.agents[agent_id].reflect(self.backend, self.env.round)

    def run(self, rounds: Optional[int] = None, on_round=None) -> list[RoundReport]:
        """Execute up to `rounds` rounds (default: config.rounds). Stop
        requests take effect at the next round barrier."""
        total = rounds if rounds is not None else self.config.rounds
        reports = []
        for _ in range(total):
            if self._stop.is_set():
                break
            report = self.run_round()
            reports.append(report)
            if on_round:
                on_round(report)
        return reports
