import json
import threading

import pytest

from gensim.gateway import ChatResponse, RetryableError, TerminalError, stable_hash
from gensim.scenarios import spawn_population
from gensim.scheduler import (
    ConfigError,
    RoundAborted,
    Simulation,
    SimulationConfig,
)


def log_lines(sim):
    return [json.dumps(e.to_json(), separators=(",", ":")) for e in sim.log.events]


class FlakyBackend:
    """Fails a deterministic ~10% of calls, transiently and terminally."""

    backend_id = "flaky"
    total_concurrency = None

    def __init__(self, fail_rate=0.1, seed=0):
        self.fail_rate = fail_rate
        self.seed = seed
        self._lock = threading.Lock()
        self.terminal_failures = 0

    def complete(self, request):
        u = stable_hash("flaky", self.seed, request.full_text()) / float(1 << 64)
        if u < self.fail_rate:
            with self._lock:
                self.terminal_failures += 1
            raise TerminalError("flaky terminal failure")
        return ChatResponse(content="apply to posting 1", backend_id=self.backend_id)


class AllFailBackend:
    backend_id = "allfail"
    total_concurrency = None

    def complete(self, request):
        raise TerminalError("down")


class TestConfig:
    def test_zero_rounds_invalid(self):
        with pytest.raises(ConfigError):
            SimulationConfig.from_json(
                {"scenario": "job_market", "num_agents": 2, "rounds": 0}
            )

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError) as exc_info:
            SimulationConfig.from_json(
                {"scenario": "martian_colony", "num_agents": 2, "rounds": 1}
            )
        assert exc_info.value.field_name == "scenario"

    def test_round_trip(self):
        cfg = SimulationConfig(scenario="recommender", num_agents=3, rounds=2, seed=5)
        assert SimulationConfig.from_json(cfg.to_json()).to_json() == cfg.to_json()


class TestRunRound:
    def test_three_agents_three_events_sorted(self):
        cfg = SimulationConfig(scenario="recommender", num_agents=3, rounds=1)
        sim = Simulation(cfg)
        report = sim.run_round()
        assert report.events == 3
        assert [e.agent_id for e in sim.log.events] == [0, 1, 2]
        assert [e.seq for e in sim.log.events] == [0, 1, 2]

    def test_event_log_fields(self, tmp_path):
        path = tmp_path / "events.jsonl"
        cfg = SimulationConfig(scenario="recommender", num_agents=2, rounds=1)
        sim = Simulation(cfg, log_path=str(path))
        sim.run_round()
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        obj = json.loads(lines[0])
        assert set(obj) == {"seq", "round", "agent_id", "q", "a", "parsed", "latency_ms"}

    def test_worker_count_invariance(self):
        def run(workers):
            cfg = SimulationConfig(
                scenario="recommender", num_agents=12, rounds=3, seed=4, workers=workers
            )
            sim = Simulation(cfg)
            sim.run()
            return log_lines(sim)

        assert run(1) == run(4) == run(16)

    def test_all_failures_abort(self):
        cfg = SimulationConfig(scenario="job_market", num_agents=4, rounds=1)
        sim = Simulation(cfg, backend=AllFailBackend())
        with pytest.raises(RoundAborted):
            sim.run_round()

    def test_liveness_under_partial_faults(self):
        cfg = SimulationConfig(scenario="job_market", num_agents=30, rounds=3, workers=4)
        backend = FlakyBackend(fail_rate=0.1, seed=2)
        sim = Simulation(cfg, backend=backend)
        reports = sim.run()
        assert len(reports) == 3
        assert sum(r.errors for r in reports) == backend.terminal_failures
        error_events = [e for e in sim.log.events if e.error is not None]
        assert len(error_events) == backend.terminal_failures

    def test_barrier_ordering(self):
        cfg = SimulationConfig(scenario="recommender", num_agents=5, rounds=3, workers=8)
        sim = Simulation(cfg)
        sim.run()
        rounds = [e.round for e in sim.log.events]
        assert rounds == sorted(rounds)
        seqs = [e.seq for e in sim.log.events]
        assert seqs == list(range(len(seqs)))


class TestRun:
    def test_total_event_count(self):
        cfg = SimulationConfig(scenario="recommender", num_agents=2, rounds=3)
        sim = Simulation(cfg)
        sim.run()
        assert len(sim.log.events) == 6

    def test_stop_at_round_boundary(self):
        cfg = SimulationConfig(scenario="recommender", num_agents=3, rounds=10)
        sim = Simulation(cfg)

        def on_round(report):
            if report.round == 1:
                sim.request_stop()

        reports = sim.run(on_round=on_round)
        assert len(reports) == 2  # rounds 0 and 1 completed, stop honored at barrier
        assert {e.round for e in sim.log.events} == {0, 1}


class TestSpawnPopulation:
    def test_unique_ids_and_determinism(self):
        a = spawn_population(500, seed=3)
        b = spawn_population(500, seed=3)
        assert len({x.id for x in a}) == 500
        assert [x.profile.to_json() for x in a] == [x.profile.to_json() for x in b]

    def test_single(self):
        assert len(spawn_population(1, seed=0)) == 1

    def test_different_seeds_differ(self):
        a = spawn_population(50, seed=1)
        b = spawn_population(50, seed=2)
        assert [x.profile.to_json() for x in a] != [x.profile.to_json() for x in b]
