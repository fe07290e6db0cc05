"""Command-line interface.

Local commands run the engine in-process (run, bench); service-backed
commands (interview, export, finetune) talk to a running `gensim serve`
instance over HTTP.
"""

from __future__ import annotations

import json
import os
import sys

import click

DEFAULT_PORT = int(os.environ.get("GENSIM_PORT", "8000"))


@click.group()
def main():
    """General, large-scale, correctable multi-agent social simulation."""


@main.command()
@click.option("--port", default=DEFAULT_PORT, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(port, host):
    """Start the HTTP control plane."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--log", "log_path", default=None, type=click.Path(),
              help="Event log output (JSON-lines).")
@click.option("--checkpoint", "checkpoint_path", default=None, type=click.Path(),
              help="Write a checkpoint after the final round.")
@click.option("--resume", "resume_path", default=None, type=click.Path(exists=True),
              help="Resume from a checkpoint instead of a fresh start.")
def run(config_path, log_path, checkpoint_path, resume_path):
    """Run a simulation locally from a JSON config file."""
    from .persistence import checkpoint as write_checkpoint
    from .persistence import restore
    from .scheduler import Simulation, SimulationConfig

    with open(config_path, "r", encoding="utf-8") as fh:
        config = SimulationConfig.from_json(json.load(fh))
    if resume_path:
        sim = restore(resume_path, log_path=log_path)
    else:
        sim = Simulation(config, log_path=log_path)
    remaining = config.rounds - sim.current_round
    for report in sim.run(rounds=remaining):
        click.echo(
            f"round {report.round}: {report.events} events, "
            f"{report.errors} errors, {report.wall_time:.2f}s"
        )
    if checkpoint_path:
        write_checkpoint(sim, checkpoint_path)
        click.echo(f"checkpoint written to {checkpoint_path}")


@main.group()
def bench():
    """Fluctuation and scaling benchmarks (CSV output)."""


@bench.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_dir", default=".", type=click.Path())
def fluctuation(config_path, out_dir):
    """Rating-distribution fluctuation vs sample size."""
    from .experiments import run_fluctuation_experiment, write_fluctuation_csv

    params = {"sample_sizes": [300, 3000, 30000], "repeats": 10, "seed": 0}
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            params.update(json.load(fh))
    results = run_fluctuation_experiment(
        params["sample_sizes"], params["repeats"],
        rating_weights=params.get("rating_weights"), seed=params["seed"],
    )
    os.makedirs(out_dir, exist_ok=True)
    out = os.path.join(out_dir, "fluctuation.csv")
    write_fluctuation_csv(results, out)
    for res in results:
        click.echo(f"n={res.sample_size}: v_sum={res.v_sum:.6f}")
    click.echo(f"wrote {out}")


@bench.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_dir", default=".", type=click.Path())
def scaling(config_path, out_dir):
    """Round wall time vs agent count and concurrency."""
    from .experiments import run_scaling_benchmark, write_scaling_csv

    params = {
        "agent_counts": [100, 200, 400],
        "concurrency_levels": [2, 4, 8],
        "latency_ms": 50.0,
        "seed": 0,
    }
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            params.update(json.load(fh))
    rows = run_scaling_benchmark(
        params["agent_counts"], params["concurrency_levels"],
        latency=params["latency_ms"] / 1000.0, seed=params["seed"],
    )
    os.makedirs(out_dir, exist_ok=True)
    out = os.path.join(out_dir, "scaling.csv")
    write_scaling_csv(rows, out)
    for row in rows:
        click.echo(
            f"N={row['agents']} C={row['concurrency']}: {row['wall_time_ms']:.0f} ms"
        )
    click.echo(f"wrote {out}")


def _base_url(base_url, port):
    return base_url or f"http://127.0.0.1:{port}"


@main.command()
@click.option("--id", "agent_id", required=True, type=int)
@click.option("--question", required=True)
@click.option("--base-url", default=None)
@click.option("--port", default=DEFAULT_PORT)
def interview(agent_id, question, base_url, port):
    """Interview an agent through a running service."""
    import httpx

    resp = httpx.post(
        f"{_base_url(base_url, port)}/agents/{agent_id}/interview",
        json={"question": question},
        timeout=60.0,
    )
    if resp.status_code != 200:
        click.echo(resp.text, err=True)
        sys.exit(1)
    click.echo(resp.json()["answer"])


@main.command()
@click.option("--kind", type=click.Choice(["sft", "reward"]), required=True)
@click.option("--path", default=None)
@click.option("--simulation-id", default=None)
@click.option("--base-url", default=None)
@click.option("--port", default=DEFAULT_PORT)
def export(kind, path, simulation_id, base_url, port):
    """Export a feedback dataset through a running service."""
    import httpx

    body = {}
    if path:
        body["path"] = path
    if simulation_id:
        body["simulation_id"] = simulation_id
    resp = httpx.post(f"{_base_url(base_url, port)}/export/{kind}", json=body, timeout=60.0)
    if resp.status_code != 200:
        click.echo(resp.text, err=True)
        sys.exit(1)
    data = resp.json()
    click.echo(f"wrote {data['count']} records to {data['path']}")


@main.command()
@click.option("--method", type=click.Choice(["sft", "ppo"]), default="sft")
@click.option("--endpoint", required=True, help="Training service base URL.")
@click.option("--dataset-path", default=None)
@click.option("--simulation-id", default=None)
@click.option("--base-url", default=None)
@click.option("--port", default=DEFAULT_PORT)
def finetune(method, endpoint, dataset_path, simulation_id, base_url, port):
    """Trigger an external fine-tuning job through a running service."""
    import httpx

    body = {"method": method, "endpoint": endpoint}
    if dataset_path:
        body["dataset_path"] = dataset_path
    if simulation_id:
        body["simulation_id"] = simulation_id
    resp = httpx.post(f"{_base_url(base_url, port)}/finetune", json=body, timeout=60.0)
    if resp.status_code != 200:
        click.echo(resp.text, err=True)
        sys.exit(1)
    click.echo(f"job id: {resp.json()['job_id']}")


if __name__ == "__main__":
    main()
