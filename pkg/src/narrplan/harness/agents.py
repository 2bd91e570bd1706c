"""Plan-producing agents: a remote chat endpoint plus offline stand-ins."""

from __future__ import annotations

import os
import random
import re
from dataclasses import dataclass

import httpx

from ..model import TaskInstance
from ..oracle import SearchBudget, Solved, solve
from ..prompts import CALIBRATED, render_step

DEFAULT_KEY_ENV = "NARRPLAN_API_KEY"


@dataclass(frozen=True)
class AgentReply:
    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None


class AgentTransportError(RuntimeError):
    """The endpoint could not be reached or answered with an error."""


class PlannerAgent:
    """Base class. ``reply`` sees the task and the whole conversation so far."""

    name = "agent"

    def fresh(self) -> "PlannerAgent":
        """Agent state for a new, independent attempt."""
        return self

    def reply(self, task: TaskInstance, messages: list[dict], prompt_mode: str) -> AgentReply:
        raise NotImplementedError


class RemoteAgent(PlannerAgent):
    """Chat-completions style HTTP endpoint with bearer auth from the environment."""

    def __init__(self, base_url: str, model: str, key_env: str = DEFAULT_KEY_ENV,
                 temperature: float = 0.0, timeout: float = 600.0, transport: httpx.BaseTransport | None = None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.key_env = key_env
        self.temperature = temperature
        self.timeout = timeout
        self.transport = transport
        self.name = f"remote:{model}"

    def reply(self, task, messages, prompt_mode):
        headers = {}
        key = os.environ.get(self.key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {"model": self.model, "messages": messages, "temperature": self.temperature}
        try:
            with httpx.Client(transport=self.transport, timeout=self.timeout) as client:
                resp = client.post(f"{self.base_url}/chat/completions", json=body, headers=headers)
                resp.raise_for_status()
                data = resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise AgentTransportError(str(exc)) from exc
        try:
            text = data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise AgentTransportError(f"malformed response: {exc}") from exc
        usage = data.get("usage") or {}
        return AgentReply(text, usage.get("prompt_tokens"), usage.get("completion_tokens"))


class ReplayAgent(PlannerAgent):
    """Returns scripted replies in order, then empty replies."""

    def __init__(self, replies: list[str], name: str = "replay"):
        self.replies = list(replies)
        self.cursor = 0
        self.name = name

    def fresh(self):
        return ReplayAgent(self.replies, self.name)

    def reply(self, task, messages, prompt_mode):
        if self.cursor >= len(self.replies):
            return AgentReply("")
        text = self.replies[self.cursor]
        self.cursor += 1
        return AgentReply(text)


class OracleAgent(PlannerAgent):
    """Answers with the oracle's minimal plan, whole or one step at a time."""

    name = "oracle"

    def __init__(self, budget: SearchBudget | None = None):
        self.budget = budget
        self._plan = None
        self._next = 0

    def fresh(self):
        return OracleAgent(self.budget)

    def plan_for(self, task):
        if self._plan is None:
            outcome = solve(task, self.budget)
            self._plan = outcome.plan if isinstance(outcome, Solved) else ()
        return self._plan

    def reply(self, task, messages, prompt_mode):
        plan = self.plan_for(task)
        if prompt_mode == CALIBRATED:
            if self._next >= len(plan):
                return AgentReply("")
            step = plan[self._next]
            self._next += 1
            return AgentReply(render_step(step))
        return AgentReply("\n".join(f"{i + 1}. {render_step(s)}" for i, s in enumerate(plan)))


_STEP_LINE = re.compile(r"^\s*(?:\d+\s*[.):]\s*)?[A-Za-z_]\w*\s*\(")

MUTATIONS = ("drop-step", "drop-first", "drop-last", "swap-adjacent")


def mutate_lines(lines: list[str], mutation: str, rng: random.Random) -> list[str]:
    idx = [i for i, line in enumerate(lines) if _STEP_LINE.match(line)]
    if not idx:
        return lines
    out = list(lines)
    if mutation == "drop-step":
        del out[rng.choice(idx)]
    elif mutation == "drop-first":
        del out[idx[0]]
    elif mutation == "drop-last":
        del out[idx[-1]]
    elif mutation == "swap-adjacent":
        if len(idx) >= 2:
            k = rng.randrange(len(idx) - 1)
            a, b = idx[k], idx[k + 1]
            out[a], out[b] = out[b], out[a]
    else:
        raise ValueError(f"unknown mutation {mutation!r}; expected one of {MUTATIONS}")
    return out


class CorruptingAgent(PlannerAgent):
    """Wraps another agent and applies a plan mutation to its one-off replies."""

    def __init__(self, inner: PlannerAgent, mutation: str = "drop-step", seed: int = 0):
        if mutation not in MUTATIONS:
            raise ValueError(f"unknown mutation {mutation!r}; expected one of {MUTATIONS}")
        self.inner = inner
        self.mutation = mutation
        self.seed = seed
        self.rng = random.Random(seed)
        self.name = f"corrupt:{mutation}"

    def fresh(self):
        return CorruptingAgent(self.inner.fresh(), self.mutation, self.seed)

    def reseed(self, seed: int) -> "CorruptingAgent":
        return CorruptingAgent(self.inner.fresh(), self.mutation, seed)

    def reply(self, task, messages, prompt_mode):
        r = self.inner.reply(task, messages, prompt_mode)
        if prompt_mode == CALIBRATED:
            return r
        lines = mutate_lines(r.text.splitlines(), self.mutation, self.rng)
        return AgentReply("\n".join(lines), r.prompt_tokens, r.completion_tokens)


def agent_from_spec(spec: str, base_url: str | None = None, model: str | None = None,
                    key_env: str = DEFAULT_KEY_ENV, replies: list[str] | None = None) -> PlannerAgent:
    """``remote``, ``replay``, ``oracle`` or ``corrupt:<mutation>`` (wrapping the oracle)."""
    if spec == "oracle":
        return OracleAgent()
    if spec.startswith("corrupt"):
        _, _, mutation = spec.partition(":")
        return CorruptingAgent(OracleAgent(), mutation or "drop-step")
    if spec == "replay":
        return ReplayAgent(replies or [])
    if spec == "remote":
        if not base_url or not model:
            raise ValueError("remote agents need a base URL and a model name")
        return RemoteAgent(base_url, model, key_env)
    raise ValueError(f"unknown agent spec {spec!r}")
