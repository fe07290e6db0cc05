"""Checkpointing.

A checkpoint is a single zip archive of versioned JSON-lines sections
(header, agents, environment) written with fixed timestamps so that
checkpoint -> restore -> checkpoint reproduces byte-identical files.
Checkpoints are only taken at round barriers; restore reproduces agents,
memories, environment, pending interventions, and the event sequence
counter exactly.
"""

from __future__ import annotations

import json
import zipfile

from .agent import Agent
from .environment import Environment
from .scheduler import Simulation, SimulationConfig

FORMAT_VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)  # fixed zip timestamp for canonical bytes


class RestoreError(RuntimeError):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def checkpoint(sim: Simulation, path):
    """Write the full simulation state. Call only at a round barrier."""
    header = {
        "format_version": FORMAT_VERSION,
        "round": sim.env.round,
        "next_seq": sim.next_seq,
        "config": sim.config.to_json(),
    }
    agents_lines = "\n".join(
        _dumps(sim.agents[aid].state_to_json()) for aid in sorted(sim.agents)
    )
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for name, data in (
            ("header.json", _dumps(header)),
            ("agents.jsonl", agents_lines),
            ("env.json", _dumps(sim.env.to_json())),
        ):
            info = zipfile.ZipInfo(name, date_time=_EPOCH)
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, data)


def restore(path, backend=None, log_path=None) -> Simulation:
    """Rebuild a simulation from a checkpoint; state untouched on error."""
    try:
        with zipfile.ZipFile(path, "r") as zf:
            header = json.loads(zf.read("header.json"))
            if header.get("format_version") != FORMAT_VERSION:
                raise RestoreError(
                    f"unsupported checkpoint version {header.get('format_version')}"
                )
            agents_raw = zf.read("agents.jsonl").decode("utf-8")
            env_obj = json.loads(zf.read("env.json"))
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError, OSError) as exc:
        raise RestoreError(f"cannot read checkpoint {path}: {exc}") from exc

    config = SimulationConfig.from_json(header["config"])
    sim = Simulation(config, backend=backend, log_path=log_path, _init_scenario=False)
    sim.env = Environment.from_json(env_obj)
    sim.next_seq = int(header["next_seq"])
    sim.agents = {}
    for line in agents_raw.splitlines():
        if line.strip():
            agent = Agent.state_from_json(json.loads(line))
            sim.agents[agent.id] = agent
    return sim
