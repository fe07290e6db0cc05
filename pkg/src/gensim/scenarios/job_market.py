"""Job market scenario.

Each round, every unemployed agent is asked to pick one posting by id.
Applicants are assigned to postings in agent-id order until capacity runs
out; hired agents gain a memory record and stop applying.
"""

from __future__ import annotations

import re
from typing import Optional, Sequence

from ..agent import Agent, MemoryConfig, MemoryRecord, render_prompt, DEFAULT_TEMPLATE
from ..environment import Environment
from .base import Scenario, Task, spawn_population

_APPLY_RE = re.compile(r"apply to posting (\d+)")

DEFAULT_POSTINGS = [
    {"id": 1, "title": "line cook", "required_skill": "cooking", "capacity": 3},
    {"id": 2, "title": "software engineer", "required_skill": "coding", "capacity": 3},
    {"id": 3, "title": "school teacher", "required_skill": "teaching", "capacity": 3},
    {"id": 4, "title": "sales associate", "required_skill": "sales", "capacity": 3},
]


class JobMarketScenario(Scenario):
    name = "job_market"

    def init(self, num_agents, env, memory_config=None):
        postings = self.params.get("postings", DEFAULT_POSTINGS)
        for p in postings:
            if p.get("capacity", 0) < 1:
                raise ValueError(f"posting {p.get('id')} must have capacity >= 1")
        env.scenario_state = {
            "postings": [dict(p) for p in postings],
            "remaining": {str(p["id"]): p["capacity"] for p in postings},
            "hired": {},  # agent_id (str) -> posting id
            "error_count": 0,
        }
        return spawn_population(num_agents, seed=self.seed, memory_config=memory_config)

    def active_agents(self, agents, env):
        hired = env.scenario_state["hired"]
        return [agents[i] for i in sorted(agents) if str(i) not in hired]

    def build_task(self, agent: Agent, env: Environment) -> Task:
        postings = env.scenario_state["postings"]
        remaining = env.scenario_state["remaining"]
        lines = [
            f"- posting {p['id']}: {p['title']} (skill: {p['required_skill']}, "
            f"openings: {remaining[str(p['id'])]})"
            for p in postings
        ]
        memories = agent.retrieve_memories(
            "job application", agent.memory_config.retrieval_k, env.round
        )
        instruction = (
            "You are looking for a job. Open postings:\n"
            + "\n".join(lines)
            + "\nPick one posting and reply exactly: apply to posting <id>"
        )
        prompt = render_prompt(DEFAULT_TEMPLATE, agent.profile, memories, env.view(), instruction)
        return Task(agent_id=agent.id, prompt=prompt)

    def parse(self, raw: str) -> dict:
        match = _APPLY_RE.search(raw if isinstance(raw, str) else "")
        if match:
            return {"action": "apply", "posting_id": int(match.group(1))}
        return {"action": "no_application"}

    def resolve(self, results: Sequence, agents: dict, env: Environment):
        """Assign applicants in agent-id order until posting capacity."""
        state = env.scenario_state
        remaining = state["remaining"]
        by_title = {str(p["id"]): p["title"] for p in state["postings"]}
        for agent_id, parsed in sorted(results, key=lambda r: r[0]):
            if parsed.get("action") != "apply":
                state["error_count"] += 1
                continue
            pid = str(parsed["posting_id"])
            if pid not in remaining:
                state["error_count"] += 1
                continue
            if remaining[pid] <= 0:
                continue
            remaining[pid] -= 1
            state["hired"][str(agent_id)] = int(pid)
            agents[agent_id].append_memory(
                MemoryRecord(
                    content=f"hired as {by_title[pid]}",
                    round=env.round,
                    importance=0.9,
                ),
                env.round,
            )
