"""Recommender system scenario.

Each round, every agent sees k recommended items (default: uniform-random
per agent, seeded) and is asked to rate each on the half-point grid
R = {0.5, 1.0, ..., 5.0}. Off-grid ratings are clamped to the nearest
member of R, ties rounding up. Results accumulate into a rating histogram.
"""

from __future__ import annotations

import csv
import json
import math
import re
from typing import Optional, Sequence

from ..agent import Agent, MemoryRecord, render_prompt, DEFAULT_TEMPLATE
from ..environment import Environment
from ..gateway import RATING_GRID, stable_hash
from .base import Scenario, Task, spawn_population

_RATING_LINE_RE = re.compile(r"^\s*(\d+)\s*=\s*(-?\d+(?:\.\d+)?)\s*$", re.MULTILINE)

ADJECTIVES = ("quiet", "wild", "lost", "broken", "golden", "silent", "electric", "blue")
NOUNS = ("river", "city", "garden", "mirror", "signal", "harbor", "engine", "orchard")


def clamp_rating(value: float) -> float:
    """Nearest member of the rating grid; ties round up."""
    value = min(max(value, RATING_GRID[0]), RATING_GRID[-1])
    step = math.floor(value / 0.5 + 0.5)  # round half up
    return min(max(step, 1), 10) * 0.5


def parse_ratings(raw: str) -> list[tuple[int, float]]:
    """Extract "item_id=rating" lines, clamped to the grid. Total."""
    if not isinstance(raw, str):
        return []
    out = []
    for item_id, value in _RATING_LINE_RE.findall(raw):
        try:
            out.append((int(item_id), clamp_rating(float(value))))
        except (ValueError, OverflowError):
            continue
    return out


def synthetic_catalog(size: int, seed: int) -> list[dict]:
    items = []
    for i in range(size):
        h = stable_hash("item", seed, i)
        title = f"{ADJECTIVES[h % len(ADJECTIVES)]} {NOUNS[(h >> 8) % len(NOUNS)]} {i}"
        items.append({"id": i, "title": title})
    return items


def load_catalog_jsonl(path) -> list[dict]:
    items = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                obj = json.loads(line)
                items.append({"id": int(obj["id"]), "title": str(obj.get("title", obj["id"]))})
    return items


def load_ratings_csv(path) -> list[dict]:
    """Ingest a "userId,movieId,rating,timestamp" CSV (MovieLens-compatible)."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                {
                    "user_id": int(row["userId"]),
                    "item_id": int(row["movieId"]),
                    "rating": clamp_rating(float(row["rating"])),
                    "timestamp": int(row["timestamp"]),
                }
            )
    return rows


class RecommenderScenario(Scenario):
    name = "recommender"

    def init(self, num_agents, env, memory_config=None):
        catalog_path = self.params.get("catalog_path")
        if catalog_path:
            catalog = load_catalog_jsonl(catalog_path)
        else:
            catalog = synthetic_catalog(int(self.params.get("catalog_size", 50)), self.seed)
        env.scenario_state = {
            "catalog": catalog,
            "k": int(self.params.get("recommend_k", 5)),
            "histogram": {str(r): 0 for r in RATING_GRID},
            "accepted": 0,
            "skipped": 0,
        }
        return spawn_population(num_agents, seed=self.seed, memory_config=memory_config)

    def recommended_items(self, agent_id: int, env: Environment) -> list[dict]:
        """Default policy: uniform-random k items per agent per round, seeded."""
        catalog = env.scenario_state["catalog"]
        k = min(env.scenario_state["k"], len(catalog))
        chosen, seen = [], set()
        draw = 0
        while len(chosen) < k:
            idx = stable_hash("rec", self.seed, env.round, agent_id, draw) % len(catalog)
            draw += 1
            if idx not in seen:
                seen.add(idx)
                chosen.append(catalog[idx])
        return chosen

    def build_task(self, agent: Agent, env: Environment) -> Task:
        items = self.recommended_items(agent.id, env)
        lines = [f"- item {it['id']}: {it['title']}" for it in items]
        memories = agent.retrieve_memories(
            "movie ratings", agent.memory_config.retrieval_k, env.round
        )
        instruction = (
            "You are browsing a movie site. Recommended items:\n"
            + "\n".join(lines)
            + "\nRate each item on the scale 0.5 to 5.0 in half-point steps. "
            'Reply one line per item, formatted exactly as "<item_id>=<rating>".'
        )
        prompt = render_prompt(DEFAULT_TEMPLATE, agent.profile, memories, env.view(), instruction)
        return Task(agent_id=agent.id, prompt=prompt)

    def parse(self, raw: str) -> dict:
        return {"ratings": parse_ratings(raw)}

    def resolve(self, results: Sequence, agents: dict, env: Environment):
        state = env.scenario_state
        hist = state["histogram"]
        for agent_id, parsed in sorted(results, key=lambda r: r[0]):
            expected = {it["id"] for it in self.recommended_items(agent_id, env)}
            rated = []
            for item_id, rating in parsed.get("ratings", []):
                if item_id not in expected:
                    continue
                hist[str(rating)] += 1
                state["accepted"] += 1
                rated.append(f"{item_id}={rating}")
                expected.discard(item_id)
            state["skipped"] += len(expected)
            if rated:
                agents[agent_id].append_memory(
                    MemoryRecord(
                        content="rated items: " + ", ".join(rated),
                        round=env.round,
                        importance=0.3,
                    ),
                    env.round,
                )
