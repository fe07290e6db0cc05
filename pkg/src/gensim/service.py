"""HTTP control plane.

Exposes the configure / launch / observe / search / intervene /
interview / label / export / fine-tune workflow over JSON + SSE. A single
process hosts many simulations keyed by opaque id; each simulation's
control state is serialized through one lock, and the event feed fans out
from the append-only log without blocking the scheduler.

All mutating endpoints accept an Idempotency-Key header: retries with the
same key return the original response and apply the effect once.
"""

from __future__ import annotations

import json
import threading
import uuid
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .correction import (
    ExportError,
    FeedbackStore,
    RevisionFeedback,
    ScoreFeedback,
    trigger_external_finetune,
)
from .environment import Intervention, InterventionError, NotFoundError, interview
from .environment import search_agents as env_search_agents
from .scheduler import ConfigError, RoundAborted, Simulation, SimulationConfig

LEGAL_TRANSITIONS = {
    "configured": {"running"},
    "running": {"paused", "stopped", "finished"},
    "paused": {"running", "stopped"},
    "stopped": set(),
    "finished": set(),
}


class ApiException(Exception):
    def __init__(self, code: str, message: str, status: int):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


def not_found(message: str) -> ApiException:
    return ApiException("not_found", message, 404)


def invalid(message: str) -> ApiException:
    return ApiException("invalid_config", message, 400)


def conflict(message: str) -> ApiException:
    return ApiException("conflict", message, 409)


class ManagedSimulation:
    """One hosted simulation plus its control state and feedback stores."""

    def __init__(self, sim_id: str, sim: Simulation):
        self.id = sim_id
        self.sim = sim
        self.status = "configured"
        self.lock = threading.Lock()
        self.thread: Optional[threading.Thread] = None
        self.feedback = FeedbackStore()
        self.exports: dict[str, str] = {}  # kind -> last exported path

    def handle(self) -> dict:
        return {
            "id": self.id,
            "status": self.status,
            "current_round": self.sim.current_round,
        }

    def transition(self, new_status: str):
        if new_status not in LEGAL_TRANSITIONS.get(self.status, set()):
            raise conflict(f"cannot go from {self.status} to {new_status}")
        self.status = new_status

    def start(self, rounds: Optional[int]):
        with self.lock:
            self.transition("running")
            total = rounds if rounds is not None else self.sim.config.rounds

            def loop():
                try:
                    self.sim.run(rounds=total)
                except RoundAborted:
                    pass
                with self.lock:
                    if self.sim._stop.is_set():
                        self.status = "stopped"
                    elif self.status == "running":
                        self.status = "finished"
                self.sim.log.notify_waiters()

            self.thread = threading.Thread(target=loop, daemon=True)
            self.thread.start()

    def stop(self):
        with self.lock:
            if self.status not in ("running", "paused"):
                raise conflict(f"cannot stop a {self.status} simulation")
        self.sim.request_stop()
        if self.thread is not None:
            self.thread.join()
        with self.lock:
            self.status = "stopped"

    def find_event(self, seq: int):
        for ev in self.sim.log.events:
            if ev.seq == seq:
                return ev
        return None


def create_app() -> FastAPI:
    app = FastAPI(title="gensim")
    sims: dict[str, ManagedSimulation] = {}
    sims_lock = threading.Lock()
    idempotency: dict[tuple[str, str], tuple[int, dict]] = {}
    idempotency_lock = threading.Lock()

    @app.exception_handler(ApiException)
    async def handle_api_exception(_request, exc: ApiException):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    def get_sim(sim_id: str) -> ManagedSimulation:
        managed = sims.get(sim_id)
        if managed is None:
            raise not_found(f"no simulation {sim_id}")
        return managed

    def resolve_sim(explicit_id: Optional[str]) -> ManagedSimulation:
        """Top-level feedback/export routes: explicit id, else the only sim."""
        if explicit_id:
            return get_sim(explicit_id)
        with sims_lock:
            if len(sims) == 1:
                return next(iter(sims.values()))
        raise invalid("simulation_id required when hosting multiple simulations")

    def find_agent(agent_id: int):
        with sims_lock:
            for managed in sims.values():
                if agent_id in managed.sim.agents:
                    return managed, managed.sim.agents[agent_id]
        raise not_found(f"no agent {agent_id}")

    def idempotent(request: Request, produce):
        """Run `produce` once per Idempotency-Key, replaying the stored
        response for duplicates."""
        key = request.headers.get("Idempotency-Key")
        if key is None:
            status, body = produce()
            return JSONResponse(status_code=status, content=body)
        cache_key = (request.url.path, key)
        with idempotency_lock:
            if cache_key in idempotency:
                status, body = idempotency[cache_key]
                return JSONResponse(status_code=status, content=body)
        status, body = produce()
        with idempotency_lock:
            idempotency.setdefault(cache_key, (status, body))
        return JSONResponse(status_code=status, content=body)

    # -- lifecycle ---------------------------------------------------------

    @app.post("/simulations", status_code=201)
    async def create_simulation(request: Request):
        body = await request.json()

        def produce():
            try:
                config = SimulationConfig.from_json(body)
                sim = Simulation(config)
            except ConfigError as exc:
                field = f" (field: {exc.field_name})" if getattr(exc, "field_name", None) else ""
                raise invalid(f"{exc}{field}")
            except (ValueError, TypeError) as exc:
                raise invalid(str(exc))
            sim_id = uuid.uuid4().hex[:12]
            managed = ManagedSimulation(sim_id, sim)
            with sims_lock:
                sims[sim_id] = managed
            return 201, managed.handle()

        return idempotent(request, produce)

    @app.get("/simulations/{sim_id}")
    def get_handle(sim_id: str):
        return get_sim(sim_id).handle()

    @app.post("/simulations/{sim_id}/run")
    async def run_simulation(sim_id: str, request: Request):
        try:
            body = await request.json()
        except Exception:
            body = {}

        def produce():
            managed = get_sim(sim_id)
            managed.start(body.get("rounds"))
            return 200, managed.handle()

        return idempotent(request, produce)

    @app.post("/simulations/{sim_id}/stop")
    def stop_simulation(sim_id: str, request: Request):
        def produce():
            managed = get_sim(sim_id)
            managed.stop()
            return 200, managed.handle()

        return idempotent(request, produce)

    # -- observation -------------------------------------------------------

    @app.get("/simulations/{sim_id}/agents")
    def search_simulation_agents(sim_id: str, q: str = "", offset: int = 0, limit: int = 50):
        managed = get_sim(sim_id)
        profiles = [a.profile for a in managed.sim.agents.values()]
        hits = env_search_agents(profiles, q)
        page = hits[offset : offset + limit]
        return {
            "total": len(hits),
            "offset": offset,
            "agents": [p.to_json() for p in page],
        }

    def agent_detail(managed: ManagedSimulation, agent_id: int) -> dict:
        agent = managed.sim.agents.get(agent_id)
        if agent is None:
            raise not_found(f"no agent {agent_id}")
        recent = [
            ev.to_json() for ev in managed.sim.log.events if ev.agent_id == agent_id
        ][-20:]
        return {
            "profile": agent.profile.to_json(),
            "simulation_id": managed.id,
            "recent_events": recent,
        }

    @app.get("/simulations/{sim_id}/agents/{agent_id}")
    def get_simulation_agent(sim_id: str, agent_id: int):
        return agent_detail(get_sim(sim_id), agent_id)

    @app.get("/agents/{agent_id}")
    def get_agent(agent_id: int):
        managed, _agent = find_agent(agent_id)
        return agent_detail(managed, agent_id)

    @app.get("/simulations/{sim_id}/events")
    def stream_events(sim_id: str, from_seq: int = -1):
        managed = get_sim(sim_id)

        def gen():
            last = from_seq
            while True:
                batch = managed.sim.log.wait_for_more(last, timeout=0.1)
                for ev in batch:
                    last = ev.seq
                    payload = json.dumps(ev.to_json(), ensure_ascii=False)
                    yield f"id: {ev.seq}\ndata: {payload}\n\n"
                if not batch and managed.status != "running":
                    return  # replay done, simulation not producing: clean close

        return StreamingResponse(gen(), media_type="text/event-stream")

    # -- intervention and interview ----------------------------------------

    @app.post("/simulations/{sim_id}/interventions", status_code=202)
    async def submit_intervention(sim_id: str, request: Request):
        body = await request.json()

        def produce():
            managed = get_sim(sim_id)
            try:
                intervention = Intervention.from_json(body)
                managed.sim.env.submit_intervention(intervention)
            except (InterventionError, KeyError, TypeError, ValueError) as exc:
                raise invalid(str(exc))
            return 202, {"accepted": True, "apply_at_round": intervention.apply_at_round}

        return idempotent(request, produce)

    async def do_interview(managed: ManagedSimulation, agent_id: int, request: Request):
        body = await request.json()
        question = body.get("question", "")
        if not question:
            raise invalid("question required")

        def produce():
            try:
                exchange = interview(
                    managed.sim.agents, managed.sim.env, agent_id, question,
                    managed.sim.backend,
                )
            except NotFoundError as exc:
                raise not_found(str(exc))
            except Exception as exc:
                raise ApiException("backend_error", str(exc), 502)
            return 200, exchange.to_json()

        return idempotent(request, produce)

    @app.post("/simulations/{sim_id}/agents/{agent_id}/interview")
    async def interview_simulation_agent(sim_id: str, agent_id: int, request: Request):
        return await do_interview(get_sim(sim_id), agent_id, request)

    @app.post("/agents/{agent_id}/interview")
    async def interview_agent(agent_id: int, request: Request):
        managed, _agent = find_agent(agent_id)
        return await do_interview(managed, agent_id, request)

    # -- feedback, export, fine-tune ----------------------------------------

    @app.post("/feedback/score", status_code=201)
    async def post_score(request: Request):
        body = await request.json()

        def produce():
            managed = resolve_sim(body.get("simulation_id"))
            event = managed.find_event(int(body.get("event_seq", -1)))
            if event is None:
                raise not_found(f"no event with seq {body.get('event_seq')}")
            try:
                fb = ScoreFeedback(
                    event_seq=event.seq,
                    q=event.q,
                    a=event.a,
                    s=float(body["s"]),
                    source=body.get("source", "human"),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise invalid(str(exc))
            managed.feedback.add_score(fb)
            return 201, {"stored": True, "event_seq": fb.event_seq, "s": fb.s}

        return idempotent(request, produce)

    @app.post("/feedback/revision", status_code=201)
    async def post_revision(request: Request):
        body = await request.json()

        def produce():
            managed = resolve_sim(body.get("simulation_id"))
            event = managed.find_event(int(body.get("event_seq", -1)))
            if event is None:
                raise not_found(f"no event with seq {body.get('event_seq')}")
            a_prime = body.get("a_prime", "")
            if not a_prime:
                raise invalid("a_prime required")
            if a_prime == event.a:
                raise invalid("revision is identical to the original action")
            fb = RevisionFeedback(
                event_seq=event.seq, q=event.q, a_prime=a_prime,
                source=body.get("source", "human"),
            )
            managed.feedback.add_revision(fb)
            return 201, {"stored": True, "event_seq": fb.event_seq}

        return idempotent(request, produce)

    @app.post("/export/{kind}")
    async def export_dataset(kind: str, request: Request):
        from .correction import export_reward_dataset, export_sft_dataset

        body = await request.json()

        def produce():
            if kind not in ("sft", "reward"):
                raise invalid(f"unknown export kind {kind!r}")
            managed = resolve_sim(body.get("simulation_id"))
            path = body.get("path") or f"{managed.id}-{kind}.jsonl"
            try:
                if kind == "sft":
                    count = export_sft_dataset(managed.feedback.revisions, path)
                else:
                    count = export_reward_dataset(managed.feedback.scores, path)
            except ExportError as exc:
                raise invalid(str(exc))
            managed.exports[kind] = path
            return 200, {"path": path, "count": count}

        return idempotent(request, produce)

    @app.post("/finetune")
    async def finetune(request: Request):
        body = await request.json()

        def produce():
            method = body.get("method", "sft")
            endpoint = body.get("endpoint")
            if method not in ("sft", "ppo"):
                raise invalid("method must be 'sft' or 'ppo'")
            if not endpoint:
                raise invalid("endpoint required")
            managed = resolve_sim(body.get("simulation_id"))
            kind = "sft" if method == "sft" else "reward"
            dataset = body.get("dataset_path") or managed.exports.get(kind)
            if not dataset:
                raise invalid("no dataset exported yet; pass dataset_path")
            try:
                job_id = trigger_external_finetune(dataset, endpoint, method)
            except Exception as exc:
                raise ApiException("backend_error", str(exc), 502)
            return 200, {"job_id": job_id}

        return idempotent(request, produce)

    app.state.sims = sims
    return app
