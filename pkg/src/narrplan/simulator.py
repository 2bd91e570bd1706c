"""Executes ground actions against world states and explains failures."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

from .grounding import GroundedDomain, WorldState, lit_true
from .model import DomainError, GroundAction, PlanStep, TaskInstance, parse_term

_CACHE: dict[int, GroundedDomain] = {}


def grounded_for(task_or_domain) -> GroundedDomain:
    """Grounded view of a domain, memoized per domain object."""
    domain = getattr(task_or_domain, "domain", task_or_domain)
    g = _CACHE.get(id(domain))
    if g is None or g.domain is not domain:
        if len(_CACHE) > 64:
            _CACHE.clear()
        g = GroundedDomain(domain)
        _CACHE[id(domain)] = g
    return g


def initial_state(task: TaskInstance) -> WorldState:
    return grounded_for(task).state(task.initial)


class FailedConjunct(NamedTuple):
    text: str
    tag: str | None
    args: tuple[str, ...]


@dataclass(frozen=True)
class StepFailure:
    index: int
    action: GroundAction
    failed: tuple[FailedConjunct, ...]

    @property
    def message(self) -> str:
        return feedback_message(self, self.action)


@dataclass(frozen=True)
class Trajectory:
    states: tuple[tuple[int, ...], ...]
    executed: tuple[bool, ...]

    @property
    def final(self) -> tuple[int, ...]:
        return self.states[-1]


class NotApplicableError(Exception):
    def __init__(self, failure: StepFailure):
        super().__init__(failure.message)
        self.failure = failure


class EffectBoundError(Exception):
    pass


def failed_conjuncts(grounded: GroundedDomain, values, action: GroundAction) -> list[FailedConjunct]:
    ca = grounded.compile(action)
    out = []
    for text, tag in ca.pre.failed_statics:
        name, args = parse_term(text.removeprefix("not "))
        out.append(FailedConjunct(text, tag, args))
    for key in ca.pre.world:
        if not lit_true(key, values):
            out.append(FailedConjunct(grounded.literal_text(key), ca.pre.tags.get(key), grounded.fluents[key[1]][1]))
    return out


def applicable(state: WorldState, action: GroundAction) -> tuple[bool, list[FailedConjunct]]:
    """Whether ``action`` can execute in ``state``, with the failed conjuncts."""
    failed = failed_conjuncts(state.grounded, state.values, action)
    return not failed, failed


def apply_values(grounded: GroundedDomain, values, action: GroundAction, index: int = 0) -> tuple[int, ...]:
    ca = grounded.compile(action)
    if not ca.pre.holds(values):
        raise NotApplicableError(StepFailure(index, action, tuple(failed_conjuncts(grounded, values, action))))
    out = ca.post(values)
    for idx, _, _ in ca.effects:
        up = grounded.upper[idx]
        if out[idx] < grounded.lower[idx] or (up is not None and out[idx] > up):
            raise EffectBoundError(
                f"{action} drives {grounded.fluent_names[idx]} to {out[idx]}, outside its bounds"
            )
    return out


def apply(state: WorldState, action: GroundAction) -> WorldState:
    """Successor state; raises on inapplicable actions or bound violations."""
    return state.grounded.wrap(apply_values(state.grounded, state.values, action))


def simulate(task: TaskInstance, plan) -> Trajectory | StepFailure:
    """Run ``plan`` from the initial state.

    Nonexecuted steps leave the state untouched and their preconditions are
    not checked. Returns the first failing executed step as a value.
    """
    g = grounded_for(task)
    values = g.state(task.initial).values
    states, flags = [values], []
    for i, step in enumerate(plan):
        try:
            g.compile(step.action)
        except DomainError as exc:
            return StepFailure(i, step.action, (FailedConjunct(str(exc), "structure", ()),))
        if step.executed:
            try:
                values = apply_values(g, values, step.action, i)
            except NotApplicableError as exc:
                return exc.failure
            except EffectBoundError as exc:
                return StepFailure(i, step.action, (FailedConjunct(str(exc), "bound", ()),))
        states.append(values)
        flags.append(step.executed)
    return Trajectory(tuple(states), tuple(flags))


_TEMPLATES = {
    "connectivity": lambda a: "Destination isn't connected to starting location",
    "item": lambda a: f"Required item is not in inventory: {a[-1]}",
    "stock": lambda a: f"No {a[-1]} remains in stock",
    "location": lambda a: f"{a[0]} is not at {a[-1]}",
    "alive": lambda a: f"{a[0]} is dead",
    "dead": lambda a: f"{a[0]} is not dead",
    "locked": lambda a: "Destination is locked; the key is required",
    "once": lambda a: f"{a[0]} cannot do that again",
    "holder": lambda a: f"{a[0]} does not have {a[-1]}",
}


def conjunct_message(fc: FailedConjunct) -> str:
    template = _TEMPLATES.get(fc.tag)
    if template is None or not fc.args:
        return f"Precondition not satisfied: {fc.text}"
    return template(fc.args)


def feedback_message(failure: StepFailure, action: GroundAction | None = None) -> str:
    """Deterministic English feedback for a rejected action.

    The first failed conjunct determines the message; the action and
    timestep are appended.
    """
    action = failure.action if action is None else action
    text = conjunct_message(failure.failed[0]) if failure.failed else "Action is not executable"
    return f"{text} (action: {action}, timestep: {failure.index})"


def trajectory_diffs(grounded: GroundedDomain, traj: Trajectory) -> list[dict[str, int]]:
    """Per-step changed fluents, the compact trajectory dump format."""
    out = []
    for before, after in zip(traj.states, traj.states[1:]):
        out.append({grounded.fluent_names[i]: a for i, (b, a) in enumerate(zip(before, after)) if a != b})
    return out


def dump_trajectory(grounded: GroundedDomain, traj: Trajectory) -> str:
    return json.dumps(trajectory_diffs(grounded, traj), sort_keys=True)


def step_actor_ok(grounded: GroundedDomain, step: PlanStep) -> bool:
    return step.actor == grounded.compile(step.action).actor
