"""Group discussion scenario.

Partitions the population into fixed groups and runs one agent-mode
conversation per group each round; transcripts land in the environment
and turns in the speakers' memories.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from ..environment import Environment
from ..interaction import run_agent_mode
from .base import Scenario, spawn_population


class GroupDiscussionScenario(Scenario):
    name = "group_discussion"
    uses_tasks = False

    def __init__(self, params=None, seed: int = 0):
        super().__init__(params, seed)
        self.topic = self.params.get("topic", "how the neighborhood is changing")
        self.group_size = int(self.params.get("group_size", 5))
        self.max_turns = int(self.params.get("max_turns", 10))
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2")
        if self.max_turns < 1:
            raise ValueError("max_turns must be >= 1")

    def init(self, num_agents, env, memory_config=None):
        if num_agents < 2:
            raise ValueError("group discussion needs at least 2 agents")
        env.scenario_state = {"transcripts": []}
        return spawn_population(num_agents, seed=self.seed, memory_config=memory_config)

    def groups(self, agents: dict) -> list[list]:
        ordered = [agents[i] for i in sorted(agents)]
        out = []
        for start in range(0, len(ordered), self.group_size):
            group = ordered[start : start + self.group_size]
            if len(group) >= 2:
                out.append(group)
            elif out:
                out[-1].extend(group)  # fold a trailing singleton into the last group
        return out

    def run_discussions(self, agents: dict, env: Environment, backend, workers: int):
        """One agent-mode conversation per group; groups run in parallel,
        each conversation sequentially. Returns per-turn event tuples."""
        groups = self.groups(agents)

        def one(group):
            return run_agent_mode(group, self.topic, self.max_turns, backend, env.round)

        if workers > 1 and len(groups) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                transcripts = list(pool.map(one, groups))
        else:
            transcripts = [one(g) for g in groups]

        events = []
        errors = 0
        for group, transcript in zip(groups, transcripts):
            by_name = {a.profile.name: a.id for a in group}
            env.scenario_state["transcripts"].append(
                {"round": env.round, **transcript.to_json()}
            )
            if transcript.error:
                errors += 1
            for turn, prompt in zip(transcript.turns, transcript.prompts):
                events.append(
                    (
                        by_name[turn.speaker],
                        prompt,
                        turn.content,
                        {"speaker": turn.speaker, "turn": turn.index},
                    )
                )
        return events, errors
