import json

import pytest

from gensim.environment import (
    Environment,
    Intervention,
    InterventionError,
    NotFoundError,
    interview,
    search_agents,
)
from gensim.agent import AgentProfile
from gensim.persistence import RestoreError, checkpoint, restore
from gensim.scheduler import Simulation, SimulationConfig
from tests.conftest import EchoBackend


def log_lines(sim):
    return [json.dumps(e.to_json(), separators=(",", ":")) for e in sim.log.events]


class TestInterventions:
    def test_set_global_takes_effect_at_round(self):
        env = Environment()
        env.submit_intervention(
            Intervention(apply_at_round=2, kind="set_global", key="tax_rate", value="0.3")
        )
        env.apply_due_interventions()  # round 0
        assert "tax_rate" not in env.globals
        env.round = 2
        env.apply_due_interventions()
        assert env.globals["tax_rate"] == "0.3"
        env.round = 3
        env.apply_due_interventions()
        assert env.globals["tax_rate"] == "0.3"  # persists

    def test_broadcast_one_round_only(self):
        cfg = SimulationConfig(scenario="job_market", num_agents=3, rounds=2, workers=1)
        sim = Simulation(cfg)
        sim.env.submit_intervention(
            Intervention(apply_at_round=0, kind="broadcast", message="market closes soon")
        )
        sim.run_round()
        round0 = [e for e in sim.log.events if e.round == 0]
        assert all("market closes soon" in e.q for e in round0)
        sim.run_round()
        round1 = [e for e in sim.log.events if e.round == 1]
        assert all("market closes soon" not in e.q for e in round1)

    def test_past_round_rejected(self):
        env = Environment()
        env.round = 5
        with pytest.raises(InterventionError):
            env.submit_intervention(
                Intervention(apply_at_round=4, kind="set_global", key="k", value="v")
            )

    def test_applied_exactly_once(self):
        env = Environment()
        env.submit_intervention(
            Intervention(apply_at_round=0, kind="set_global", key="k", value="v")
        )
        env.apply_due_interventions()
        assert env.pending_interventions() == []

    def test_unknown_kind(self):
        with pytest.raises(InterventionError):
            Intervention(apply_at_round=0, kind="teleport")


class TestInterview:
    def test_unknown_agent(self):
        cfg = SimulationConfig(scenario="job_market", num_agents=2, rounds=1)
        sim = Simulation(cfg)
        with pytest.raises(NotFoundError):
            interview(sim.agents, sim.env, 999, "hello?", EchoBackend())

    def test_answer_contains_persona(self):
        cfg = SimulationConfig(scenario="job_market", num_agents=2, rounds=1)
        sim = Simulation(cfg)
        agent = sim.agents[0]
        exchange = interview(sim.agents, sim.env, 0, "what is your name?", EchoBackend())
        assert agent.profile.name in exchange.answer
        assert sim.env.interview_log == [exchange]

    def test_interview_is_trajectory_neutral(self):
        def run(with_interview):
            cfg = SimulationConfig(scenario="recommender", num_agents=4, rounds=3, seed=3)
            sim = Simulation(cfg)
            if with_interview:
                interview(sim.agents, sim.env, 1, "how do you feel?", sim.backend)
            sim.run()
            return log_lines(sim)

        assert run(False) == run(True)

    def test_interview_never_writes_memory(self):
        cfg = SimulationConfig(scenario="job_market", num_agents=2, rounds=1)
        sim = Simulation(cfg)
        before = len(sim.agents[0].long_term)
        interview(sim.agents, sim.env, 0, "question", EchoBackend())
        assert len(sim.agents[0].long_term) == before


class TestSearch:
    def profiles(self):
        return [
            AgentProfile(id=2, public_attrs={"name": "Alice", "city": "Riverton"},
                         private_attrs={"income": "42"}),
            AgentProfile(id=1, public_attrs={"name": "Bob", "city": "Lakeside"}),
        ]

    def test_empty_query_returns_all_sorted(self):
        out = search_agents(self.profiles(), "")
        assert [p.id for p in out] == [1, 2]

    def test_substring_match_case_insensitive(self):
        out = search_agents(self.profiles(), "alice")
        assert [p.name for p in out] == ["Alice"]

    def test_private_attrs_not_searchable(self):
        assert search_agents(self.profiles(), "42") == []


class TestCheckpoint:
    def test_replay_equivalence(self, tmp_path):
        cfg = SimulationConfig(scenario="recommender", num_agents=5, rounds=5, seed=9)
        straight = Simulation(cfg)
        straight.run()

        first = Simulation(SimulationConfig.from_json(cfg.to_json()))
        first.run(rounds=2)
        ck = tmp_path / "mid.ckpt"
        checkpoint(first, ck)
        resumed = restore(ck)
        resumed.run(rounds=3)
        assert log_lines(first) + log_lines(resumed) == log_lines(straight)

    def test_pending_interventions_survive(self, tmp_path):
        cfg = SimulationConfig(scenario="job_market", num_agents=3, rounds=4)
        sim = Simulation(cfg)
        sim.env.submit_intervention(
            Intervention(apply_at_round=3, kind="set_global", key="k", value="v")
        )
        sim.run(rounds=1)
        ck = tmp_path / "q.ckpt"
        checkpoint(sim, ck)
        resumed = restore(ck)
        assert len(resumed.env.pending_interventions()) == 1
        resumed.run(rounds=3)
        assert resumed.env.globals.get("k") == "v"

    def test_restore_from_empty_file(self, tmp_path):
        empty = tmp_path / "empty.ckpt"
        empty.write_bytes(b"")
        with pytest.raises(RestoreError):
            restore(empty)

    def test_restore_missing_file(self, tmp_path):
        with pytest.raises(RestoreError):
            restore(tmp_path / "nope.ckpt")

    def test_canonical_bytes(self, tmp_path):
        cfg = SimulationConfig(scenario="job_market", num_agents=4, rounds=3, seed=1)
        sim = Simulation(cfg)
        sim.run(rounds=2)
        ck1, ck2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        checkpoint(sim, ck1)
        resumed = restore(ck1)
        checkpoint(resumed, ck2)
        assert ck1.read_bytes() == ck2.read_bytes()
