"""Interaction generation: script mode and agent mode.

Script mode asks one meta-agent call for the whole dialogue, third-person;
agent mode alternates first-person calls, each conditioned on every prior
turn, and writes each turn into the speaker's memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .agent import Agent, MemoryRecord
from .gateway import ChatRequest, GatewayError


class FormatError(ValueError):
    """Meta-agent output contained no parseable turns."""

    def __init__(self, message: str, raw_output: str = ""):
        super().__init__(message)
        self.raw_output = raw_output


@dataclass(frozen=True)
class Role:
    name: str
    persona: str = ""


@dataclass(frozen=True)
class Turn:
    speaker: str
    content: str
    index: int

    def __post_init__(self):
        if not self.content:
            raise ValueError("turn content must be non-empty")


@dataclass
class Transcript:
    mode: str  # script | agent
    turns: list[Turn] = field(default_factory=list)
    llm_calls: int = 0
    error: Optional[str] = None
    # prompt used for each turn (agent mode only; same order as turns)
    prompts: list[str] = field(default_factory=list)

    def validate(self, role_names: Sequence[str]):
        allowed = set(role_names)
        for i, turn in enumerate(self.turns):
            assert turn.index == i, "turn indices must be consecutive from 0"
            assert turn.speaker in allowed, f"unknown speaker {turn.speaker}"
        if self.mode == "script":
            assert self.llm_calls == 1
        elif self.mode == "agent":
            assert self.llm_calls == len(self.turns) or self.error is not None

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "turns": [
                {"speaker": t.speaker, "content": t.content, "index": t.index}
                for t in self.turns
            ],
            "llm_calls": self.llm_calls,
            "error": self.error,
        }


def parse_script_output(raw: str, role_names: Sequence[str], max_turns: int) -> list[Turn]:
    """Parse "<RoleName>: <content>" lines; unparseable lines are dropped."""
    allowed = set(role_names)
    turns: list[Turn] = []
    for line in raw.splitlines():
        if ":" not in line:
            continue
        name, _, content = line.partition(":")
        name, content = name.strip(), content.strip()
        if name in allowed and content:
            turns.append(Turn(speaker=name, content=content, index=len(turns)))
            if len(turns) >= max_turns:
                break
    return turns


def run_script_mode(roles: Sequence[Role], topic: str, max_turns: int, backend) -> Transcript:
    """Generate the whole dialogue in a single meta-agent call."""
    if len(roles) < 2:
        raise ValueError("script mode needs at least 2 roles")
    if max_turns < 1:
        raise ValueError("max_turns must be >= 1")
    names = [r.name for r in roles]
    if len(set(names)) != len(names):
        raise ValueError("role names must be unique")
    persona_block = "\n".join(
        f"{r.name}: {r.persona}" for r in roles if r.persona
    )
    prompt = (
        f"Write a dialogue about: {topic}\n"
        f"Roles: {', '.join(names)}\n"
        + (f"Personas:\n{persona_block}\n" if persona_block else "")
        + f"Write at most {max_turns} turns, one per line, "
        'formatted exactly as "<RoleName>: <content>".'
    )
    response = backend.complete(ChatRequest.user(prompt))
    turns = parse_script_output(response.content, names, max_turns)
    if not turns:
        raise FormatError("no parseable turns in meta-agent output", response.content)
    return Transcript(mode="script", turns=turns, llm_calls=1)


def agent_turn_prompt(agent: Agent, topic: str, prior_turns: Sequence[Turn], current_round: int) -> str:
    memories = agent.retrieve_memories(topic, agent.memory_config.retrieval_k, current_round)
    history = "\n".join(f"{t.speaker}: {t.content}" for t in prior_turns)
    memory_block = "\n".join(m.content for m in memories)
    return (
        f"You are {agent.profile.name}.\n"
        f"Your persona:\n{agent.persona()}\n"
        + (f"Your memories:\n{memory_block}\n" if memory_block else "")
        + f"You are in a conversation about: {topic}\n"
        + (f"Conversation so far:\n{history}\n" if history else "")
        + "Reply with your next line only, speaking in first person."
    )


def run_agent_mode(
    agents: Sequence[Agent], topic: str, max_turns: int, backend, current_round: int = 0
) -> Transcript:
    """Round-robin first-person generation conditioned on full history.

    Each turn is one backend call and is appended to the speaking agent's
    memory as an observation. A terminal backend failure at turn t returns
    the partial transcript of t-1 turns with the error flagged.
    """
    if len(agents) < 2:
        raise ValueError("agent mode needs at least 2 agents")
    if max_turns < 1:
        raise ValueError("max_turns must be >= 1")
    transcript = Transcript(mode="agent")
    for index in range(max_turns):
        agent = agents[index % len(agents)]
        prompt = agent_turn_prompt(agent, topic, transcript.turns, current_round)
        try:
            response = backend.complete(ChatRequest.user(prompt))
        except GatewayError as exc:
            transcript.error = str(exc)
            return transcript
        transcript.llm_calls += 1
        content = response.content.strip() or "..."
        turn = Turn(speaker=agent.profile.name, content=content, index=index)
        transcript.turns.append(turn)
        transcript.prompts.append(prompt)
        agent.append_memory(
            MemoryRecord(
                content=f"{agent.profile.name} said: {content}",
                round=current_round,
                importance=0.5,
            ),
            current_round,
        )
    return transcript
