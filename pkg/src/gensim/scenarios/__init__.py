"""Default scenarios and the scenario registry."""

from .base import Scenario, Task, spawn_population, synthetic_profile
from .group_discussion import GroupDiscussionScenario
from .job_market import JobMarketScenario
from .recommender import (
    RecommenderScenario,
    clamp_rating,
    load_ratings_csv,
    parse_ratings,
)

REGISTRY = {
    JobMarketScenario.name: JobMarketScenario,
    RecommenderScenario.name: RecommenderScenario,
    GroupDiscussionScenario.name: GroupDiscussionScenario,
}


def make_scenario(name: str, params=None, seed: int = 0) -> Scenario:
    if name not in REGISTRY:
        raise ValueError(f"unknown scenario {name!r}; known: {sorted(REGISTRY)}")
    return REGISTRY[name](params=params, seed=seed)


__all__ = [
    "Scenario",
    "Task",
    "spawn_population",
    "synthetic_profile",
    "JobMarketScenario",
    "RecommenderScenario",
    "GroupDiscussionScenario",
    "clamp_rating",
    "parse_ratings",
    "load_ratings_csv",
    "make_scenario",
    "REGISTRY",
]
