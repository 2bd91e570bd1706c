"""One-off and externally calibrated attempts, recorded as JSONL."""

from __future__ import annotations

import json
import threading
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..model import CAUSAL, TaskInstance
from ..oracle import BudgetExceededError, SearchBudget, shortest_plan_length
from ..prompts import CALIBRATED, ONE_OFF, ParseError, parse_action, parse_plan, render_observation, render_task_prompt
from ..serialize import step_from_dict, step_to_dict, task_from_dict, task_to_dict
from ..simulator import StepFailure, applicable, apply, feedback_message, grounded_for, trajectory_diffs, Trajectory
from ..validators import validate
from .agents import AgentTransportError, CorruptingAgent, PlannerAgent

SUCCESS = "success"
INVALID_PLAN = "invalid-plan"
PARSE_FAILURE = "parse-failure"
BUDGET_EXHAUSTED = "budget-exhausted"
OUTCOMES = (SUCCESS, INVALID_PLAN, PARSE_FAILURE, BUDGET_EXHAUSTED)


@dataclass
class RunConfig:
    agent: str = "oracle"
    prompt_mode: str = ONE_OFF
    attempts: int = 1
    parallel: int = 1
    out: str | None = None
    max_steps: int | None = None  # default: 4x the oracle-minimal length
    step_factor: int = 4
    max_consecutive_rejections: int = 3
    max_invalid: int = 10
    retries: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.prompt_mode not in (ONE_OFF, CALIBRATED):
            raise ValueError(f"unknown prompt mode {self.prompt_mode!r}")
        for name in ("attempts", "parallel", "step_factor", "max_consecutive_rejections", "max_invalid"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps is not None and self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if self.retries < 0:
            raise ValueError("retries must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(**d)

    def budgets(self) -> dict:
        return {
            "max_steps": self.max_steps,
            "step_factor": self.step_factor,
            "max_consecutive_rejections": self.max_consecutive_rejections,
            "max_invalid": self.max_invalid,
            "retries": self.retries,
        }


@dataclass
class AttemptRecord:
    task_id: str
    domain: str
    params: dict | None
    mode: str
    prompt_mode: str
    agent: str
    attempt: int
    outcome: str
    transcript: list[dict] = field(default_factory=list)
    plan: list[dict] | None = None
    report: dict | None = None
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    wall_time: float = 0.0
    budgets: dict = field(default_factory=dict)
    task: dict | None = None

    @property
    def feedback_events(self) -> list[dict]:
        return [e for e in self.transcript if e.get("kind") == "feedback"]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "AttemptRecord":
        return cls(**d)

    def reverify(self) -> bool:
        """Re-validate the recorded plan against the recorded task."""
        if self.plan is None or self.task is None:
            return False
        task = task_from_dict(self.task)
        return validate(task, [step_from_dict(s) for s in self.plan]).accepted


class _Tokens:
    def __init__(self):
        self.prompt = None
        self.completion = None

    def add(self, reply):
        if reply.prompt_tokens is not None:
            self.prompt = (self.prompt or 0) + reply.prompt_tokens
        if reply.completion_tokens is not None:
            self.completion = (self.completion or 0) + reply.completion_tokens


def _ask(agent, task, messages, prompt_mode, retries, tokens):
    last = None
    for _ in range(retries + 1):
        try:
            reply = agent.reply(task, messages, prompt_mode)
        except AgentTransportError as exc:
            last = exc
            continue
        tokens.add(reply)
        return reply
    raise last


def _base_record(task, agent, config, prompt_mode, attempt) -> AttemptRecord:
    meta = task.metadata
    return AttemptRecord(
        task_id=task.task_id,
        domain=meta.get("domain", task.domain.name),
        params=meta.get("params"),
        mode=task.mode,
        prompt_mode=prompt_mode,
        agent=agent.name,
        attempt=attempt,
        outcome=BUDGET_EXHAUSTED,
        budgets=config.budgets(),
        task=task_to_dict(task),
    )


def run_one_off(task: TaskInstance, agent: PlannerAgent, config: RunConfig | None = None,
                attempt: int = 0) -> AttemptRecord:
    config = config or RunConfig()
    start = time.perf_counter()
    rec = _base_record(task, agent, config, ONE_OFF, attempt)
    bundle = render_task_prompt(task, ONE_OFF)
    messages = [{"role": "system", "content": bundle.system},
                {"role": "user", "content": f"{bundle.task}\n\n{bundle.grammar}"}]
    rec.transcript = [{"kind": "prompt", **m} for m in messages]
    tokens = _Tokens()
    try:
        reply = _ask(agent, task, messages, ONE_OFF, config.retries, tokens)
    except AgentTransportError as exc:
        rec.transcript.append({"kind": "error", "role": "system", "content": str(exc)})
        return _finish(rec, tokens, start)
    rec.transcript.append({"kind": "reply", "role": "assistant", "content": reply.text})
    try:
        plan = parse_plan(reply.text, grounded_for(task), task.mode)
    except ParseError as exc:
        rec.outcome = PARSE_FAILURE
        rec.transcript.append({"kind": "parse-error", "role": "system", "content": str(exc), "code": exc.code})
        return _finish(rec, tokens, start)
    report = validate(task, plan)
    rec.plan = [step_to_dict(s) for s in plan]
    rec.report = report.to_dict()
    rec.outcome = SUCCESS if report.accepted else INVALID_PLAN
    return _finish(rec, tokens, start)


def _finish(rec, tokens, start):
    rec.prompt_tokens = tokens.prompt
    rec.completion_tokens = tokens.completion
    rec.wall_time = time.perf_counter() - start
    return rec


def step_budget(task: TaskInstance, config: RunConfig) -> int:
    if config.max_steps is not None:
        return config.max_steps
    try:
        n = shortest_plan_length(task, SearchBudget(time_limit=30.0))
    except BudgetExceededError:
        n = None
    return config.step_factor * max(n or 25, 1)


def run_calibrated(task: TaskInstance, agent: PlannerAgent, config: RunConfig | None = None,
                   attempt: int = 0) -> AttemptRecord:
    """Step-by-step loop: each proposed action is simulated before the next is requested."""
    if task.mode != CAUSAL:
        raise ValueError("external calibration is defined for causal tasks")
    config = config or RunConfig(prompt_mode=CALIBRATED)
    start = time.perf_counter()
    rec = _base_record(task, agent, config, CALIBRATED, attempt)
    max_steps = step_budget(task, config)
    rec.budgets["max_steps"] = max_steps
    g = grounded_for(task)
    goal = g.compile_condition(task.goal.condition)
    state = g.state(task.initial)
    bundle = render_task_prompt(task, CALIBRATED)
    messages = [{"role": "system", "content": bundle.system},
                {"role": "user", "content": f"{bundle.task}\n\n{bundle.grammar}"}]
    rec.transcript = [{"kind": "prompt", **m} for m in messages]
    tokens = _Tokens()
    plan = []
    consecutive = invalid = 0
    while not goal.holds(state.values):
        if len(plan) >= max_steps or consecutive >= config.max_consecutive_rejections or invalid >= config.max_invalid:
            rec.plan = [step_to_dict(s) for s in plan]
            return _finish(rec, tokens, start)
        try:
            reply = _ask(agent, task, messages, CALIBRATED, config.retries, tokens)
        except AgentTransportError as exc:
            rec.transcript.append({"kind": "error", "role": "system", "content": str(exc)})
            rec.plan = [step_to_dict(s) for s in plan]
            return _finish(rec, tokens, start)
        messages.append({"role": "assistant", "content": reply.text})
        rec.transcript.append({"kind": "reply", "role": "assistant", "content": reply.text})
        try:
            step = parse_action(reply.text, g, task.mode)
        except ParseError as exc:
            message = f"Could not read an action: {exc}"
            ok = False
        else:
            ok, failed = applicable(state, step.action)
            if not ok:
                message = feedback_message(StepFailure(len(plan), step.action, tuple(failed)))
        if not ok:
            consecutive += 1
            invalid += 1
            observation = render_observation(None, message, state)
            rec.transcript.append({"kind": "feedback", "role": "user", "content": observation, "message": message})
            messages.append({"role": "user", "content": observation})
            continue
        consecutive = 0
        after = apply(state, step.action)
        diff = trajectory_diffs(g, Trajectory((state.values, after.values), (True,)))[0]
        state = after
        plan.append(step)
        observation = render_observation(step.action, diff, state)
        rec.transcript.append({"kind": "observation", "role": "user", "content": observation})
        messages.append({"role": "user", "content": observation})
    report = validate(task, plan)
    rec.plan = [step_to_dict(s) for s in plan]
    rec.report = report.to_dict()
    rec.outcome = SUCCESS if report.accepted else INVALID_PLAN
    return _finish(rec, tokens, start)


def run_attempt(task, agent, config: RunConfig, attempt: int = 0) -> AttemptRecord:
    a = agent.fresh()
    if isinstance(a, CorruptingAgent):
        a = a.reseed(zlib.crc32(f"{config.seed}:{task.task_id}:{attempt}".encode()))
    if config.prompt_mode == CALIBRATED:
        return run_calibrated(task, a, config, attempt)
    return run_one_off(task, a, config, attempt)


def load_records(path) -> list[AttemptRecord]:
    p = Path(path)
    if not p.exists():
        return []
    out = []
    for line in p.read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(AttemptRecord.from_dict(json.loads(line)))
    return out


def run_many(tasks: list[TaskInstance], agent: PlannerAgent, config: RunConfig) -> list[AttemptRecord]:
    """All (task, attempt) pairs on a worker pool.

    With ``config.out`` set, records are appended to that JSONL file and pairs
    already present there are skipped, so interrupted runs resume.
    """
    done = {}
    if config.out:
        for r in load_records(config.out):
            done[(r.task_id, r.attempt)] = r
    pending = [(t, k) for t in tasks for k in range(config.attempts) if (t.task_id, k) not in done]
    lock = threading.Lock()
    sink = open(config.out, "a", encoding="utf-8") if config.out else None

    def work(item):
        task, k = item
        rec = run_attempt(task, agent, config, k)
        if sink is not None:
            with lock:
                sink.write(rec.to_json() + "\n")
                sink.flush()
        return rec

    try:
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            new = list(pool.map(work, pending))
    finally:
        if sink is not None:
            sink.close()
    records = list(done.values()) + new
    records.sort(key=lambda r: (r.task_id, r.attempt))
    return records
