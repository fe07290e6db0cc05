"""Fluctuation analysis and throughput benchmarks.

The fluctuation metric: given rating distributions p_1..p_m from repeated
runs, v(r) is the population standard deviation of {p_i(r)} for each
rating r on the half-point grid, and v_sum is the total over the grid.
Small samples fluctuate strongly; v_sum shrinks roughly as 1/sqrt(n).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .gateway import (
    RATING_GRID,
    ChatRequest,
    DeterministicMockBackend,
    StochasticMockBackend,
    stable_hash,
)
from .scenarios.recommender import parse_ratings


class FluctuationInputError(ValueError):
    pass


@dataclass
class RatingDistribution:
    """Normalized probability vector over the 10-point rating grid."""

    p: tuple

    def __post_init__(self):
        p = tuple(float(x) for x in self.p)
        if len(p) != len(RATING_GRID):
            raise FluctuationInputError(f"distribution must have length {len(RATING_GRID)}")
        if any(x < 0 for x in p):
            raise FluctuationInputError("distribution entries must be non-negative")
        if abs(sum(p) - 1.0) > 1e-9:
            raise FluctuationInputError("distribution must sum to 1")
        object.__setattr__(self, "p", p)

    @classmethod
    def from_counts(cls, counts: Sequence[float]) -> "RatingDistribution":
        total = float(sum(counts))
        if total <= 0:
            raise FluctuationInputError("empty count vector")
        return cls(tuple(c / total for c in counts))


@dataclass
class FluctuationResult:
    sample_size: int
    repeats: int
    v_sum: float
    per_rating_v: tuple

    def to_row(self) -> dict:
        row = {
            "sample_size": self.sample_size,
            "repeat_count": self.repeats,
            "v_sum": self.v_sum,
        }
        for rating, v in zip(RATING_GRID, self.per_rating_v):
            row[f"v_{rating}"] = v
        return row


def fluctuation(distributions: Sequence[RatingDistribution],
                sample_size: int = 0) -> FluctuationResult:
    """Per-rating population standard deviation across repeated runs."""
    if len(distributions) < 2:
        raise FluctuationInputError("need at least 2 distributions")
    matrix = np.array([d.p for d in distributions], dtype=float)
    per_rating = np.std(matrix, axis=0, ddof=0)  # population sigma, divide by N
    return FluctuationResult(
        sample_size=sample_size,
        repeats=len(distributions),
        v_sum=float(per_rating.sum()),
        per_rating_v=tuple(float(v) for v in per_rating),
    )


def simulate_rating_distribution(
    backend: StochasticMockBackend, n: int, repeat_seed: int, batch_items: int = 5
) -> RatingDistribution:
    """Empirical rating distribution from n simulated ratings.

    Issues item-rating requests through the mock in batches of
    `batch_items` items, mirroring the recommender task/parse path.
    """
    counts = {r: 0 for r in RATING_GRID}
    drawn = 0
    batch_index = 0
    while drawn < n:
        want = min(batch_items, n - drawn)
        lines = "\n".join(f"- item {batch_index * batch_items + j}: x" for j in range(want))
        request = ChatRequest.user(f"b{batch_index}\n{lines}", seed=repeat_seed)
        reply = backend.complete(request)
        for _item, rating in parse_ratings(reply.content)[:want]:
            counts[rating] += 1
            drawn += 1
        batch_index += 1
    return RatingDistribution.from_counts([counts[r] for r in RATING_GRID])


def run_fluctuation_experiment(
    sample_sizes: Sequence[int],
    repeats: int,
    rating_weights: Optional[Sequence[float]] = None,
    seed: int = 0,
) -> list[FluctuationResult]:
    """Repeat the rating simulation at each sample size and measure v_sum.

    Each repeat uses a stochastic mock with its own derived seed, so the
    whole experiment is deterministic given `seed`.
    """
    if repeats < 2:
        raise FluctuationInputError("repeats must be >= 2")
    results = []
    for n in sample_sizes:
        dists = []
        for i in range(repeats):
            repeat_seed = stable_hash("fluct", seed, n, i)
            backend = StochasticMockBackend(seed=repeat_seed, rating_weights=rating_weights)
            dists.append(simulate_rating_distribution(backend, n, repeat_seed))
        results.append(fluctuation(dists, sample_size=n))
    return results


def write_fluctuation_csv(results: Sequence[FluctuationResult], path):
    fields = ["sample_size", "repeat_count", "v_sum"] + [f"v_{r}" for r in RATING_GRID]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for res in results:
            writer.writerow(res.to_row())


def run_scaling_benchmark(
    agent_counts: Sequence[int],
    concurrency_levels: Sequence[int],
    latency: float = 0.05,
    seed: int = 0,
    scenario: str = "recommender",
) -> list[dict]:
    """One simulated round per (N, C) cell with a fixed-latency mock.

    Wall time should track ceil(N / C) * latency: more agents cost more,
    more parallel lanes cost less.
    """
    from .scheduler import Simulation, SimulationConfig

    rows = []
    for n in agent_counts:
        for c in concurrency_levels:
            config = SimulationConfig(
                scenario=scenario,
                num_agents=n,
                rounds=1,
                seed=seed,
                backend={"kind": "mock_deterministic", "seed": seed,
                         "latency_ms": latency * 1000.0},
                workers=c,
            )
            sim = Simulation(config)
            start = time.monotonic()
            sim.run_round()
            wall = time.monotonic() - start
            rows.append({"agents": n, "concurrency": c, "wall_time_ms": wall * 1000.0})
    return rows


def write_scaling_csv(rows: Sequence[dict], path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["agents", "concurrency", "wall_time_ms"])
        writer.writeheader()
        writer.writerows(rows)
