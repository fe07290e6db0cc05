import re
import threading

import pytest

from gensim.gateway import (
    ChatRequest,
    ChatResponse,
    RetryableError,
    TerminalError,
    stable_hash,
)

APPLY_RE = re.compile(r"apply to posting (\d+)")


class EchoBackend:
    """Replies with the prompt itself; useful for inspecting what was sent."""

    backend_id = "echo"
    total_concurrency = None

    def __init__(self):
        self.calls = []

    def complete(self, request: ChatRequest) -> ChatResponse:
        self.calls.append(request)
        return ChatResponse(content=request.full_text(), backend_id=self.backend_id)


class FixedBackend:
    """Always replies with the same text."""

    backend_id = "fixed"
    total_concurrency = None

    def __init__(self, content: str):
        self.content = content
        self.calls = 0

    def complete(self, request: ChatRequest) -> ChatResponse:
        self.calls += 1
        return ChatResponse(content=self.content, backend_id=self.backend_id)


class ScriptedFaultBackend:
    """Fails according to a script of booleans, then succeeds."""

    backend_id = "scripted"
    total_concurrency = None

    def __init__(self, failures, content="ok", terminal=False):
        self.failures = list(failures)
        self.content = content
        self.terminal = terminal
        self.calls = 0

    def complete(self, request: ChatRequest) -> ChatResponse:
        self.calls += 1
        if self.failures and self.failures.pop(0):
            if self.terminal:
                raise TerminalError("scripted terminal failure")
            raise RetryableError("scripted transient failure")
        return ChatResponse(content=self.content, backend_id=self.backend_id)


class ConcurrencyProbeBackend:
    """Counts concurrent entries to assert in-flight bounds."""

    backend_id = "probe"

    def __init__(self, latency=0.02, total_concurrency=None):
        import time

        self._time = time
        self.latency = latency
        self.total_concurrency = total_concurrency
        self._lock = threading.Lock()
        self.in_flight = 0
        self.max_in_flight = 0
        self.calls = 0

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.in_flight += 1
            self.calls += 1
            self.max_in_flight = max(self.max_in_flight, self.in_flight)
        self._time.sleep(self.latency)
        with self._lock:
            self.in_flight -= 1
        return ChatResponse(content=request.full_text(), backend_id=self.backend_id)


class NoisyJobBackend:
    """Valid job application with probability p, keyed per agent name so the
    same agent behaves the same way in every round (counter-based, no shared
    stream)."""

    backend_id = "noisy_job"
    total_concurrency = None
    _NAME_RE = re.compile(r"^name: (\S+)$", re.MULTILINE)
    _POSTING_RE = re.compile(r"^- posting (\d+)", re.MULTILINE)

    def __init__(self, seed=0, valid_probability=0.5):
        self.seed = seed
        self.p = valid_probability

    def complete(self, request: ChatRequest) -> ChatResponse:
        text = request.full_text()
        name_m = self._NAME_RE.search(text)
        key = name_m.group(1) if name_m else text
        postings = self._POSTING_RE.findall(text)
        u = stable_hash("noisy", self.seed, key) / float(1 << 64)
        if u < self.p and postings:
            pick = postings[stable_hash("pick", self.seed, key) % len(postings)]
            content = f"apply to posting {pick}"
        else:
            content = "I am not sure what to do."
        return ChatResponse(content=content, backend_id=self.backend_id)


class OracleJudgeBackend:
    """Rule-based judge: 10 when the judged behavior is a well-formed job
    application, 0 otherwise. Judges the "Behavior:" section of the rubric."""

    backend_id = "oracle_judge"
    total_concurrency = None

    def complete(self, request: ChatRequest) -> ChatResponse:
        text = request.full_text()
        behavior = text.split("Behavior:\n", 1)[-1]
        score = 10 if APPLY_RE.search(behavior) else 0
        return ChatResponse(content=f"Score: {score}", backend_id=self.backend_id)


class OracleReviserBackend:
    """Rule-based reviser: always produces a valid application."""

    backend_id = "oracle_reviser"
    total_concurrency = None

    def complete(self, request: ChatRequest) -> ChatResponse:
        text = request.full_text()
        postings = re.findall(r"- posting (\d+)", text)
        pick = postings[0] if postings else "1"
        return ChatResponse(content=f"apply to posting {pick}", backend_id=self.backend_id)


@pytest.fixture
def echo_backend():
    return EchoBackend()
