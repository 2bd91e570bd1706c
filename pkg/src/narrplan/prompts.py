"""Prompt rendering and reply parsing.

Plan grammar, one step per line::

    name(arg1, ..., argN) [intention: goal(args)] [nonexecuted]

Both suffixes are optional. Lines may carry a numbering prefix such as
``3.``, ``3)`` or ``- ``; any other line is treated as prose and skipped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .grounding import GroundedDomain, WorldState
from .model import (
    CAUSAL,
    CONFLICT,
    Atom,
    Compare,
    DomainError,
    Effect,
    GroundAction,
    IntendEffect,
    Intends,
    Intention,
    PlanStep,
    Static,
    TaskInstance,
    format_term,
    normalize_term,
    parse_term,
)
from .simulator import grounded_for

ONE_OFF = "one_off"
CALIBRATED = "calibrated"

SYSTEM_TEXT = (
    "You are a narrative planner. You write stories as sequences of character "
    "actions in a symbolic story world. Use only the actions listed in the task, "
    "with constants exactly as given."
)


@dataclass(frozen=True)
class PromptBundle:
    system: str
    blocks: tuple[str, ...]
    grammar: str

    @property
    def task(self) -> str:
        return "\n\n".join(self.blocks)

    def text(self) -> str:
        return f"{self.system}\n\n{self.task}\n\n{self.grammar}\n"


# ------------------------------------------------------------------ English


def _lit_text(lit) -> str:
    if isinstance(lit, Atom):
        term = format_term(lit.fluent, lit.args, ", ")
        return f"{term} is {'true' if lit.value else 'false'}"
    if isinstance(lit, Compare):
        return f"{format_term(lit.fluent, lit.args, ', ')} {lit.op} {lit.const}"
    if isinstance(lit, Static):
        term = format_term(lit.relation, lit.args, ", ")
        return f"{term} holds" if lit.value else f"{term} does not hold"
    if isinstance(lit, Intends):
        return f"{lit.character} intends {lit.goal}"
    raise TypeError(lit)


def _effect_text(eff, domain) -> str:
    if isinstance(eff, IntendEffect):
        return f"{eff.character} comes to intend {eff.goal}"
    term = format_term(eff.fluent, eff.args, ", ")
    if eff.kind == "delta":
        verb = "increases" if eff.value > 0 else "decreases"
        return f"{term} {verb} by {abs(eff.value)}"
    if domain.fluent(eff.fluent).is_int:
        return f"{term} becomes {eff.value}"
    return f"{term} becomes {'true' if eff.value else 'false'}"


def action_paragraph(schema, domain) -> str:
    params = ", ".join(f"{v} ({s})" for v, s in schema.params)
    head = format_term(schema.name, schema.variables, ", ")
    who = f"Performed by {schema.actor}." if schema.actor else "Happens without any character performing it."
    kind = "Intentional action." if schema.intentional else "Unintentional action."
    pre = "; ".join(_lit_text(l) for l in schema.precondition) or "none"
    eff = "; ".join(_effect_text(e, domain) for e in schema.effects) or "none"
    return f"{head} with parameters {params}. {who} {kind}\n  Preconditions: {pre}.\n  Effects: {eff}."


def state_lines(state: WorldState, intentions=()) -> list[str]:
    g = state.grounded
    lines = []
    for i, v in enumerate(state.values):
        if not v:
            continue
        lines.append(f"{g.fluent_names[i]} = {v}" if g.is_int[i] else g.fluent_names[i])
    lines.extend(f"intends({i.character}, {i.goal})" for i in intentions)
    return lines


# ------------------------------------------------------------------ blocks


def _entities_block(task, grounded) -> str:
    d = task.domain
    lines = ["## World"]
    for name, members in d.sorts:
        lines.append(f"{name.capitalize()} constants: {', '.join(members)}.")
    for rel in d.statics:
        if not rel.tuples:
            continue
        facts = ", ".join(format_term(rel.name, t, ", ") for t in sorted(rel.tuples))
        lines.append(f"Fixed relation {rel.name}: {facts}.")
    if d.delegable:
        lines.append(f"Goals that can be passed on by orders: {', '.join(d.delegable)}.")
    return "\n".join(lines)


def _goal_block(task) -> str:
    conds = [_lit_text(l) for l in task.goal.condition]
    if conds:
        text = "## Narrative goal\nAt the end of the story: " + "; ".join(conds) + "."
    else:
        text = "## Narrative goal\nNo world condition is required."
    if task.goal.min_conflicts:
        text += f"\nThe story must contain at least {task.goal.min_conflicts} conflict(s)."
    return text


def _state_block(state, intentions, title) -> str:
    lines = state_lines(state, intentions)
    body = "\n".join(f"- {l}" for l in lines) or "- (nothing is true)"
    return f"## {title}\nEverything not listed is false (or 0).\n{body}"


def _actions_block(task) -> str:
    paras = [action_paragraph(a, task.domain) for a in task.domain.actions]
    return "## Actions\n" + "\n\n".join(paras)


INTENTIONAL_TEXT = """## Intentional plans
Characters hold intentions of the form intends(character, goal). An intention
is gained through an action effect and is dropped once its goal is true.
Each intentional action must be annotated with one intention held by its
performer at that moment. The steps a character takes for one intention form
a frame: the last step of the frame must make the goal true, and every earlier
step of the frame must be connected to that last step through a chain of
steps, each of which supplies a precondition of the next. Unintentional
actions need no annotation."""

CONFLICT_TEXT = """## Conflict
Intentional actions may be marked [nonexecuted]: the character intends and
attempts the step, but it does not happen and changes nothing. Preconditions of
nonexecuted steps are not checked. A step A supplies a precondition p to a later
step B when A made p true (or p held from the start) and p stayed true until B.
A third step C between A and B threatens this when C would make p false. A
conflict is such a threat where B belongs to a frame of character c1, C belongs
to a frame of character c2 (possibly the same character), and at least one of B
and C is nonexecuted."""


def grammar_text(mode: str, prompt_mode: str) -> str:
    lines = ["## Answer format"]
    if prompt_mode == CALIBRATED:
        lines.append("Reply with a singular next action, on its own line.")
    else:
        lines.append("Reply with the whole plan, one action per line, in order.")
    lines.append("Write each action as name(arg1, arg2, ...) using the constants above.")
    if mode != CAUSAL:
        lines.append("Append [intention: goal] to every intentional action, e.g. [intention: dead(spirit)].")
    if mode == CONFLICT:
        lines.append("Append [nonexecuted] to intentional actions that are attempted but do not happen.")
    return "\n".join(lines)


def render_task_prompt(task: TaskInstance, mode: str = ONE_OFF, state: WorldState | None = None,
                       intentions=None) -> PromptBundle:
    """Six content blocks; the last two only for intentional/conflict tasks."""
    if mode not in (ONE_OFF, CALIBRATED):
        raise ValueError(f"unknown prompt mode {mode!r}")
    g = grounded_for(task)
    current = state is not None
    state = state if current else g.state(task.initial)
    intentions = task.initial_intentions if intentions is None else intentions
    blocks = [
        _entities_block(task, g),
        _goal_block(task),
        _state_block(state, intentions, "Current state" if current else "Initial state"),
        _actions_block(task),
    ]
    if task.mode != CAUSAL:
        blocks.append(INTENTIONAL_TEXT)
    if task.mode == CONFLICT:
        blocks.append(CONFLICT_TEXT)
    return PromptBundle(SYSTEM_TEXT, tuple(blocks), grammar_text(task.mode, mode))


def render_observation(prev_action, result, state: WorldState) -> str:
    """Observation after one calibrated step.

    ``result`` is either a dict of changed fluents (success) or the feedback
    message of a rejected action.
    """
    summary = "\n".join(f"- {l}" for l in state_lines(state)) or "- (nothing is true)"
    if isinstance(result, str):
        return f"Action rejected: {result}\nThe state is unchanged:\n{summary}"
    changes = []
    for name, v in sorted(result.items()):
        i = state.grounded.fluent_id(name)
        if state.grounded.is_int[i]:
            changes.append(f"{name} is now {v}")
        else:
            changes.append(f"{name} is now {'true' if v else 'false'}")
    changed = "; ".join(changes) if changes else "nothing changed"
    return f"Executed {prev_action}. Changes: {changed}.\nCurrent state:\n{summary}"


# ------------------------------------------------------------------ grammar


def render_step(step: PlanStep) -> str:
    text = str(step.action)
    if step.intention is not None:
        name, args = parse_term(step.intention.goal)
        text += f" [intention: {format_term(name, args, ', ')}]"
    if not step.executed:
        text += " [nonexecuted]"
    return text


def render_plan(plan) -> str:
    return "\n".join(f"{i + 1}. {render_step(s)}" for i, s in enumerate(plan))


class ParseError(ValueError):
    UNKNOWN_ACTION = "unknown-action"
    BAD_ARITY = "bad-arity"
    UNKNOWN_CONSTANT = "unknown-constant"
    WRONG_SORT = "wrong-sort"
    MISSING_INTENTION = "missing-intention"
    BAD_SUFFIX = "bad-suffix"
    EMPTY_PLAN = "empty-plan"
    AMBIGUOUS = "ambiguous-reply"

    def __init__(self, code: str, line: int | None, message: str):
        super().__init__(f"{code} (line {line}): {message}" if line else f"{code}: {message}")
        self.code = code
        self.line = line


_PREFIX = re.compile(r"^\s*(?:(?:step\s*)?\d+\s*[.):]\s*|[-*]\s+)?", re.IGNORECASE)
_HEAD = re.compile(r"^([A-Za-z_]\w*)\s*\(")
_SUFFIX = re.compile(r"^\[\s*(intention\s*:\s*(?P<goal>[^\]]+?)|(?P<nx>nonexecuted))\s*\]", re.IGNORECASE)


def _split_line(line: str):
    """Return (body, suffix) when the line looks like a step, else None."""
    rest = _PREFIX.sub("", line, count=1).strip().strip("`")
    m = _HEAD.match(rest)
    if not m:
        return None
    depth = 0
    for pos in range(m.end() - 1, len(rest)):
        ch = rest[pos]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                body, tail = rest[: pos + 1], rest[pos + 1:].strip()
                tail = tail.rstrip(".;,").strip()
                if tail and not tail.startswith("["):
                    return None
                return body, tail
    return None


def _parse_suffix(tail: str, lineno: int):
    goal, executed = None, True
    while tail:
        m = _SUFFIX.match(tail)
        if not m:
            raise ParseError(ParseError.BAD_SUFFIX, lineno, f"cannot read {tail!r}")
        if m.group("nx"):
            executed = False
        else:
            goal = normalize_term(m.group("goal"))
        tail = tail[m.end():].strip()
    return goal, executed


def _resolve(body: str, suffix: str, lineno: int, grounded: GroundedDomain, mode: str) -> PlanStep:
    name, args = parse_term(body)
    domain = grounded.domain
    try:
        schema = domain.action(name)
    except DomainError:
        raise ParseError(ParseError.UNKNOWN_ACTION, lineno, f"no action named {name!r}") from None
    if len(args) != len(schema.params):
        raise ParseError(ParseError.BAD_ARITY, lineno,
                         f"{name} takes {len(schema.params)} arguments, got {len(args)}")
    known = {c for members in grounded.sorts.values() for c in members}
    for arg, (_, sort) in zip(args, schema.params):
        if arg not in known:
            raise ParseError(ParseError.UNKNOWN_CONSTANT, lineno, f"unknown constant {arg!r}")
        if arg not in grounded.sorts[sort]:
            raise ParseError(ParseError.WRONG_SORT, lineno, f"{arg} is not a {sort}")
    goal, executed = _parse_suffix(suffix, lineno)
    actor = args[schema.variables.index(schema.actor)] if schema.actor else None
    if schema.intentional and mode != CAUSAL and goal is None:
        raise ParseError(ParseError.MISSING_INTENTION, lineno, f"{name} is intentional and needs [intention: ...]")
    intention = Intention(actor, goal) if goal is not None and actor is not None else None
    return PlanStep(GroundAction(name, args), actor, intention, executed)


def _step_lines(text: str):
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        split = _split_line(line)
        if split is not None:
            out.append((lineno, *split))
    return out


def parse_plan(text: str, grounded: GroundedDomain, mode: str, strict: bool = False) -> tuple[PlanStep, ...]:
    """Parse a planner reply; raises :class:`ParseError`.

    With ``strict`` every non-blank line must be a step.
    """
    if strict:
        for lineno, line in enumerate(text.splitlines(), start=1):
            if line.strip() and _split_line(line) is None:
                raise ParseError(ParseError.BAD_SUFFIX, lineno, f"not a step: {line.strip()!r}")
    lines = _step_lines(text)
    if not lines:
        raise ParseError(ParseError.EMPTY_PLAN, None, "no action lines found")
    return tuple(_resolve(body, tail, n, grounded, mode) for n, body, tail in lines)


def parse_action(text: str, grounded: GroundedDomain, mode: str) -> PlanStep:
    lines = _step_lines(text)
    if not lines:
        raise ParseError(ParseError.EMPTY_PLAN, None, "no action line found")
    if len(lines) > 1:
        raise ParseError(ParseError.AMBIGUOUS, lines[1][0], f"expected one action, found {len(lines)}")
    n, body, tail = lines[0]
    return _resolve(body, tail, n, grounded, mode)
