"""Backend-agnostic chat-completion layer.

Provides deterministic and stochastic mock backends for testing and
experiments, an OpenAI-compatible HTTP client with a multi-endpoint pool,
bounded-concurrency batch dispatch, retries with exponential backoff, and
per-call latency metrics.

All mock randomness is counter-based (keyed hashing), never a shared
stream, so parallel dispatch cannot perturb draws and repeated runs with
the same seed reproduce byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

ALLOWED_ROLES = ("system", "user", "assistant")

# The rating grid used by the recommender scenario and the stochastic mock.
RATING_GRID = tuple(0.5 * i for i in range(1, 11))  # 0.5, 1.0, ..., 5.0


class GatewayError(Exception):
    """Base class for backend call failures."""


class RetryableError(GatewayError):
    """Transient failure: timeout or retryable HTTP status."""


class TerminalError(GatewayError):
    """Non-recoverable failure; carries the last underlying cause."""

    def __init__(self, message: str, endpoint_id: Optional[str] = None):
        super().__init__(message)
        self.endpoint_id = endpoint_id


@dataclass(frozen=True)
class ChatRequest:
    """One chat-completion call: ordered messages plus sampling params."""

    messages: tuple  # of (role, content) pairs
    temperature: float = 0.0
    max_tokens: int = 512
    seed: Optional[int] = None

    def __post_init__(self):
        if not self.messages:
            raise ValueError("ChatRequest needs at least one message")
        for role, _content in self.messages:
            if role not in ALLOWED_ROLES:
                raise ValueError(f"invalid role {role!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        object.__setattr__(self, "messages", tuple(tuple(m) for m in self.messages))

    @classmethod
    def user(cls, content: str, **kw) -> "ChatRequest":
        return cls(messages=(("user", content),), **kw)

    def full_text(self) -> str:
        return "\n".join(content for _role, content in self.messages)


@dataclass
class ChatResponse:
    content: str
    latency: float = 0.0  # seconds; modeled for mocks, measured for HTTP
    backend_id: str = "mock"
    token_estimate: int = 0

    def __post_init__(self):
        if self.latency < 0:
            raise ValueError("latency must be >= 0")


@dataclass
class EndpointSpec:
    base_url: str
    model: str
    max_concurrent: int = 1
    timeout: float = 60.0

    def __post_init__(self):
        if self.max_concurrent < 1:
            raise ValueError("max_concurrent must be >= 1")


def stable_hash(*parts, digest_size: int = 8) -> int:
    """Order-sensitive keyed hash of strings/ints, as an unsigned int."""
    h = hashlib.blake2b(digest_size=digest_size)
    for p in parts:
        h.update(str(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


def counter_uniform(*key) -> float:
    """Deterministic uniform draw in [0, 1) keyed by the arguments."""
    return stable_hash(*key) / float(1 << 64)


class LatencyMetrics:
    """Thread-safe per-call latency accumulator."""

    def __init__(self):
        self._lock = threading.Lock()
        self.count = 0
        self.total = 0.0

    def record(self, seconds: float):
        with self._lock:
            self.count += 1
            self.total += seconds


# Prompt markers the mocks understand, matching the scenario task builders.
_ITEM_RE = re.compile(r"^- item (\d+)", re.MULTILINE)
_POSTING_RE = re.compile(r"^- posting (\d+)", re.MULTILINE)
_ROLES_RE = re.compile(r"^Roles: (.+)$", re.MULTILINE)


class DeterministicMockBackend:
    """Pure function of (messages, seed): a stable hash selects replies.

    Understands the scenario prompt markers so simulations driven by it
    produce parseable actions:
      - lines "- item <id>: ..."    -> one "<id>=<rating>" line per item
      - lines "- posting <id>: ..." -> "apply to posting <id>"
      - a "Roles: A, B" header      -> a scripted dialogue over those roles
    Anything else gets a templated reply derived from the request hash.
    """

    backend_id = "mock_deterministic"

    def __init__(self, seed: int = 0, latency: float = 0.0):
        self.seed = seed
        self.latency = latency
        self.metrics = LatencyMetrics()
        self.total_concurrency: Optional[int] = None

    def _hash(self, request: ChatRequest, *extra) -> int:
        return stable_hash("det", self.seed, request.seed, *request.messages, *extra)

    def complete(self, request: ChatRequest) -> ChatResponse:
        start = time.monotonic()
        if self.latency > 0:
            time.sleep(self.latency)
        text = request.full_text()
        content = self._respond(request, text)
        self.metrics.record(time.monotonic() - start)
        return ChatResponse(
            content=content,
            latency=self.latency,
            backend_id=self.backend_id,
            token_estimate=len(content.split()),
        )

    def _respond(self, request: ChatRequest, text: str) -> str:
        items = _ITEM_RE.findall(text)
        if items:
            lines = []
            for i, item_id in enumerate(items):
                r = RATING_GRID[self._hash(request, "item", item_id, i) % 10]
                lines.append(f"{item_id}={r}")
            return "\n".join(lines)
        postings = _POSTING_RE.findall(text)
        if postings:
            pick = postings[self._hash(request, "posting") % len(postings)]
            return f"apply to posting {pick}"
        roles_m = _ROLES_RE.search(text)
        if roles_m:
            roles = [r.strip() for r in roles_m.group(1).split(",") if r.strip()]
            lines = []
            for cycle in range(2):
                for role in roles:
                    tag = self._hash(request, "turn", role, cycle) % 10000
                    lines.append(f"{role}: remark {tag} from {role}")
            return "\n".join(lines)
        return f"response-{self._hash(request):016x}"


class StochasticMockBackend:
    """Draws ratings from a configured distribution over the rating grid.

    Draws are keyed by (seed, request hash, draw index), so the response
    sequence is reproducible regardless of thread interleaving.
    """

    backend_id = "mock_stochastic"

    def __init__(
        self,
        seed: int = 0,
        rating_weights: Optional[Sequence[float]] = None,
        latency: float = 0.0,
    ):
        if rating_weights is None:
            rating_weights = [0.1] * 10
        weights = [float(w) for w in rating_weights]
        if len(weights) != 10:
            raise ValueError("rating_weights must have length 10")
        if any(w < 0 for w in weights):
            raise ValueError("rating_weights must be non-negative")
        total = sum(weights)
        if abs(total - 1.0) > 1e-9:
            raise ValueError("rating_weights must sum to 1")
        self.seed = seed
        self.weights = weights
        self.latency = latency
        self.metrics = LatencyMetrics()
        self.total_concurrency: Optional[int] = None
        # cumulative weights for inverse-CDF sampling
        acc, self._cdf = 0.0, []
        for w in weights:
            acc += w
            self._cdf.append(acc)
        self._cdf[-1] = 1.0

    def _draw(self, request_key: int, index: int) -> float:
        u = counter_uniform("stoch", self.seed, request_key, index)
        for rating, edge in zip(RATING_GRID, self._cdf):
            if u < edge:
                return rating
        return RATING_GRID[-1]

    def complete(self, request: ChatRequest) -> ChatResponse:
        start = time.monotonic()
        if self.latency > 0:
            time.sleep(self.latency)
        text = request.full_text()
        key = stable_hash(request.seed, *request.messages)
        items = _ITEM_RE.findall(text)
        if items:
            content = "\n".join(
                f"{item_id}={self._draw(key, i)}" for i, item_id in enumerate(items)
            )
        else:
            content = str(self._draw(key, 0))
        self.metrics.record(time.monotonic() - start)
        return ChatResponse(
            content=content,
            latency=self.latency,
            backend_id=self.backend_id,
            token_estimate=len(content.split()),
        )


class HttpBackend:
    """OpenAI-compatible chat-completions client over an endpoint pool.

    Each call goes to the endpoint with the fewest in-flight requests
    (ties broken by endpoint index); per-endpoint concurrency is bounded
    by max_concurrent. GENSIM_API_KEY supplies the bearer token when set.
    """

    backend_id = "http"

    def __init__(
        self,
        endpoints: Sequence[EndpointSpec],
        retry_budget: int = 2,
        base_delay: float = 0.5,
    ):
        if not endpoints:
            raise ValueError("need at least one endpoint")
        self.endpoints = list(endpoints)
        self.retry_budget = retry_budget
        self.base_delay = base_delay
        self.metrics = LatencyMetrics()
        self._lock = threading.Lock()
        self._in_flight = [0] * len(self.endpoints)
        self._sems = [threading.Semaphore(e.max_concurrent) for e in self.endpoints]
        self.total_concurrency = sum(e.max_concurrent for e in self.endpoints)

    def _pick(self) -> int:
        with self._lock:
            idx = min(range(len(self.endpoints)), key=lambda i: (self._in_flight[i], i))
            self._in_flight[idx] += 1
            return idx

    def _release(self, idx: int):
        with self._lock:
            self._in_flight[idx] -= 1

    def _call_once(self, request: ChatRequest) -> ChatResponse:
        import httpx

        idx = self._pick()
        ep = self.endpoints[idx]
        self._sems[idx].acquire()
        start = time.monotonic()
        try:
            headers = {}
            api_key = os.environ.get("GENSIM_API_KEY")
            if api_key:
                headers["Authorization"] = f"Bearer {api_key}"
            body = {
                "model": ep.model,
                "messages": [
                    {"role": role, "content": content}
                    for role, content in request.messages
                ],
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
            }
            if request.seed is not None:
                body["seed"] = request.seed
            try:
                resp = httpx.post(
                    f"{ep.base_url.rstrip('/')}/v1/chat/completions",
                    json=body,
                    headers=headers,
                    timeout=ep.timeout,
                )
            except httpx.TimeoutException as exc:
                raise RetryableError(f"timeout on {ep.base_url}: {exc}") from exc
            except httpx.HTTPError as exc:
                raise RetryableError(f"transport error on {ep.base_url}: {exc}") from exc
            if resp.status_code != 200:
                raise RetryableError(
                    f"endpoint {ep.base_url} returned {resp.status_code}"
                )
            data = resp.json()
            content = data["choices"][0]["message"]["content"]
            latency = time.monotonic() - start
            return ChatResponse(
                content=content,
                latency=latency,
                backend_id=f"{self.backend_id}:{idx}",
                token_estimate=len(content.split()),
            )
        finally:
            self.metrics.record(time.monotonic() - start)
            self._sems[idx].release()
            self._release(idx)

    def complete(self, request: ChatRequest) -> ChatResponse:
        return retry_with_backoff(
            lambda: self._call_once(request), self.retry_budget, self.base_delay
        )


def retry_with_backoff(
    call: Callable[[], ChatResponse], budget: int, base_delay: float
) -> ChatResponse:
    """Retry transient failures up to `budget` times with exponential backoff."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    last: Optional[Exception] = None
    for attempt in range(budget + 1):
        try:
            return call()
        except RetryableError as exc:
            last = exc
            if attempt < budget:
                time.sleep(base_delay * (2**attempt))
        except TerminalError:
            raise
    raise TerminalError(f"retry budget exhausted: {last}") from last


def pool_dispatch(backend, requests, max_workers=None):
    """Dispatch a batch of requests with bounded concurrency.

    Results come back in request order regardless of completion order.
    Per-request terminal failures are reported positionally as the
    exception instance, without aborting the batch.
    """
    requests = list(requests)
    if not requests:
        return []
    cap = backend_concurrency(backend, max_workers)
    results: list = [None] * len(requests)

    def one(i_req):
        i, req = i_req
        try:
            return i, backend.complete(req)
        except GatewayError as exc:
            return i, exc

    if cap == 1:
        for i, req in enumerate(requests):
            results[i] = one((i, req))[1]
        return results
    with ThreadPoolExecutor(max_workers=cap) as pool:
        for i, out in pool.map(one, enumerate(requests)):
            results[i] = out
    return results


def backend_concurrency(backend, max_workers=None) -> int:
    """Effective parallelism: min of the caller's cap and the backend's."""
    limit = getattr(backend, "total_concurrency", None)
    caps = [c for c in (limit, max_workers) if c is not None]
    return max(1, min(caps)) if caps else 32


def build_backend(spec: dict):
    """Construct a backend from its JSON config form (see SimulationConfig)."""
    kind = spec.get("kind")
    if kind == "mock_deterministic":
        return DeterministicMockBackend(
            seed=spec.get("seed", 0), latency=spec.get("latency_ms", 0.0) / 1000.0
        )
    if kind == "mock_stochastic":
        return StochasticMockBackend(
            seed=spec.get("seed", 0),
            rating_weights=spec.get("rating_weights"),
            latency=spec.get("latency_ms", 0.0) / 1000.0,
        )
    if kind == "http_openai_compatible":
        endpoints = [
            EndpointSpec(
                base_url=e["base_url"],
                model=e.get("model", "default"),
                max_concurrent=e.get("max_concurrent", 1),
                timeout=e.get("timeout", 60.0),
            )
            for e in spec.get("endpoints", [])
        ]
        return HttpBackend(endpoints)
    raise ValueError(f"unknown backend kind {kind!r}")


def backend_to_spec(backend) -> dict:
    """Inverse of build_backend for checkpointing (mocks only)."""
    if isinstance(backend, DeterministicMockBackend):
        return {
            "kind": "mock_deterministic",
            "seed": backend.seed,
            "latency_ms": backend.latency * 1000.0,
        }
    if isinstance(backend, StochasticMockBackend):
        return {
            "kind": "mock_stochastic",
            "seed": backend.seed,
            "rating_weights": backend.weights,
            "latency_ms": backend.latency * 1000.0,
        }
    if isinstance(backend, HttpBackend):
        return {
            "kind": "http_openai_compatible",
            "endpoints": [
                {
                    "base_url": e.base_url,
                    "model": e.model,
                    "max_concurrent": e.max_concurrent,
                    "timeout": e.timeout,
                }
                for e in backend.endpoints
            ],
        }
    raise ValueError(f"cannot serialize backend {type(backend).__name__}")
