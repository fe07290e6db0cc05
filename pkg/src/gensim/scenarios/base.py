"""Scenario contract.

A scenario owns: population construction, per-agent task building, output
parsing (total: falls back to a default action, never raises), and the
single-threaded barrier resolution that folds parsed actions into state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..agent import Agent, AgentProfile, MemoryConfig
from ..environment import Environment
from ..gateway import stable_hash

FIRST_NAMES = (
    "Alice", "Bob", "Carol", "David", "Erin", "Frank", "Grace", "Henry",
    "Iris", "Jack", "Karen", "Leo", "Mona", "Nate", "Olga", "Paul",
    "Quinn", "Rosa", "Sam", "Tina", "Uma", "Victor", "Wendy", "Xavier",
    "Yara", "Zack",
)
BIRTHPLACES = ("Springfield", "Riverton", "Lakeside", "Hillview", "Brookfield")
GENDERS = ("female", "male", "nonbinary")
SKILLS = ("cooking", "coding", "teaching", "nursing", "carpentry", "sales")


def synthetic_profile(index: int, seed: int) -> AgentProfile:
    """Deterministic synthetic profile for agent number `index`."""
    h = stable_hash("profile", seed, index)
    name = f"{FIRST_NAMES[h % len(FIRST_NAMES)]}-{index}"
    return AgentProfile(
        id=index,
        public_attrs={
            "name": name,
            "gender": GENDERS[(h >> 8) % len(GENDERS)],
            "birthplace": BIRTHPLACES[(h >> 16) % len(BIRTHPLACES)],
            "skill": SKILLS[(h >> 24) % len(SKILLS)],
        },
        private_attrs={
            "income": str(20000 + (h >> 32) % 80000),
            "health condition": ("good", "fair", "poor")[(h >> 40) % 3],
        },
    )


def spawn_population(n: int, profile_generator=None, seed: int = 0,
                     memory_config: Optional[MemoryConfig] = None) -> list[Agent]:
    """Generate n distinct agents deterministically from the seed."""
    if n < 1:
        raise ValueError("population size must be >= 1")
    gen = profile_generator or synthetic_profile
    return [Agent(gen(i, seed), memory_config) for i in range(n)]


@dataclass
class Task:
    """One agent's work item for a round: the prompt to send."""

    agent_id: int
    prompt: str


class Scenario:
    """Base scenario; job market and recommender use the task-based round."""

    name = "base"

    def __init__(self, params: Optional[dict] = None, seed: int = 0):
        self.params = params or {}
        self.seed = seed

    def init(self, num_agents: int, env: Environment,
             memory_config: Optional[MemoryConfig] = None) -> list[Agent]:
        """Build scenario state into env and return the population."""
        return spawn_population(num_agents, seed=self.seed, memory_config=memory_config)

    def active_agents(self, agents: dict, env: Environment) -> list[Agent]:
        """Agents that act this round, in id order."""
        return [agents[i] for i in sorted(agents)]

    def build_task(self, agent: Agent, env: Environment) -> Task:
        raise NotImplementedError

    def parse(self, raw: str):
        """Total parse: never raises on arbitrary byte strings."""
        raise NotImplementedError

    def resolve(self, results: Sequence, agents: dict, env: Environment):
        """Barrier phase: fold (agent_id, parsed) pairs, sorted by agent id,
        into agent/environment state. Single-threaded, deterministic."""
        raise NotImplementedError

    # Scenarios with non-task rounds (group discussion) override run_round
    # on the simulation instead; see gensim.scheduler.
    uses_tasks = True

    def state_to_json(self, env: Environment) -> dict:
        return env.scenario_state

    def state_from_json(self, env: Environment, obj: dict):
        env.scenario_state = obj
