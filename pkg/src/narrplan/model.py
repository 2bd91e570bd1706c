"""Symbolic vocabulary for story domains: schemas, literals, plans and tasks.

Schema-level arguments are plain strings. An argument starting with ``?`` is a
variable bound by the action (or intention template) parameters, anything else
is a constant.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import NamedTuple, Union

CAUSAL = "causal"
INTENTIONAL = "intentional"
CONFLICT = "conflict"
MODES = (CAUSAL, INTENTIONAL, CONFLICT)

# Reserved sort whose members are the ground delegable goals of a domain.
GOAL_SORT = "goal"

COMPARISON_OPS = ("=", ">=", "<=", ">", "<")


class DomainError(ValueError):
    """Raised for ill-formed domains or references to unknown symbols."""


def is_var(arg: str) -> bool:
    return arg.startswith("?")


_TERM = re.compile(r"^\s*([A-Za-z_][\w\-]*)\s*(?:\((.*)\))?\s*$")


def parse_term(text: str) -> tuple[str, tuple[str, ...]]:
    """Split ``name(a, b)`` into ``("name", ("a", "b"))``.

    Arguments may themselves be terms (``order(jafar, aladdin, dead(spirit))``),
    so splitting respects parenthesis depth.
    """
    m = _TERM.match(text)
    if not m:
        raise ValueError(f"not a term: {text!r}")
    name, inner = m.group(1), m.group(2)
    if inner is None or not inner.strip():
        return name, ()
    args, depth, cur = [], 0, []
    for ch in inner:
        if ch == "," and depth == 0:
            args.append("".join(cur).strip())
            cur = []
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ValueError(f"unbalanced parentheses: {text!r}")
        cur.append(ch)
    if depth != 0:
        raise ValueError(f"unbalanced parentheses: {text!r}")
    args.append("".join(cur).strip())
    if any(not a for a in args):
        raise ValueError(f"empty argument in {text!r}")
    return name, tuple(normalize_term(a) if "(" in a else a for a in args)


def format_term(name: str, args: tuple[str, ...] = (), sep: str = ",") -> str:
    if not args:
        return name
    return f"{name}({sep.join(args)})"


def normalize_term(text: str) -> str:
    name, args = parse_term(text)
    return format_term(name, args)


def substitute(arg: str, binding: dict[str, str]) -> str:
    """Ground one argument; goal-shaped arguments are substituted recursively."""
    if is_var(arg):
        try:
            return binding[arg]
        except KeyError:
            raise DomainError(f"unbound variable {arg}") from None
    if "(" in arg:
        name, args = parse_term(arg)
        return format_term(name, tuple(substitute(a, binding) for a in args))
    return arg


# ---------------------------------------------------------------- literals


@dataclass(frozen=True)
class Atom:
    """Boolean fluent literal: ``fluent(args)`` is ``value``."""

    fluent: str
    args: tuple[str, ...] = ()
    value: bool = True
    tag: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Compare:
    """Numeric comparison ``fluent(args) op const`` on an integer fluent."""

    fluent: str
    args: tuple[str, ...]
    op: str
    const: int
    tag: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.op not in COMPARISON_OPS:
            raise DomainError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class Static:
    """Literal over a static relation (never an effect target)."""

    relation: str
    args: tuple[str, ...] = ()
    value: bool = True
    tag: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Intends:
    """``intends(character, goal)``; ``goal`` is a goal term, possibly with variables."""

    character: str
    goal: str
    tag: str | None = field(default=None, compare=False)


Literal = Union[Atom, Compare, Static, Intends]


@dataclass(frozen=True)
class Effect:
    """Change to one fluent: ``assign`` a value or add a signed ``delta``."""

    fluent: str
    args: tuple[str, ...]
    kind: str = "assign"
    value: int = 1

    def __post_init__(self):
        if self.kind not in ("assign", "delta"):
            raise DomainError(f"unknown effect kind {self.kind!r}")


@dataclass(frozen=True)
class IntendEffect:
    """Effect establishing ``intends(character, goal)`` (a motivating effect)."""

    character: str
    goal: str


# ---------------------------------------------------------------- schemas


@dataclass(frozen=True)
class FluentSchema:
    name: str
    params: tuple[str, ...] = ()
    kind: str = "bool"
    upper: int | None = None

    @property
    def is_int(self) -> bool:
        return self.kind == "int"


@dataclass(frozen=True)
class StaticRelation:
    name: str
    params: tuple[str, ...]
    tuples: frozenset[tuple[str, ...]] = frozenset()


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...]
    actor: str | None
    precondition: tuple[Literal, ...] = ()
    effects: tuple[Effect | IntendEffect, ...] = ()
    intentional: bool = False

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.params)


@dataclass(frozen=True)
class IntentionTemplate:
    """A goal shape characters may intend, e.g. ``dead(?ch)`` meaning ``dead(?ch)`` is true."""

    name: str
    params: tuple[tuple[str, str], ...]
    condition: tuple[Literal, ...]


@dataclass(frozen=True)
class StoryDomain:
    name: str
    sorts: tuple[tuple[str, tuple[str, ...]], ...]
    fluents: tuple[FluentSchema, ...] = ()
    statics: tuple[StaticRelation, ...] = ()
    actions: tuple[ActionSchema, ...] = ()
    intentions: tuple[IntentionTemplate, ...] = ()
    delegable: tuple[str, ...] = ()

    def sort_members(self, sort: str) -> tuple[str, ...]:
        for name, members in self.sorts:
            if name == sort:
                return members
        raise DomainError(f"unknown sort {sort!r}")

    @property
    def sort_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.sorts)

    def fluent(self, name: str) -> FluentSchema:
        for f in self.fluents:
            if f.name == name:
                return f
        raise DomainError(f"unknown fluent {name!r}")

    def action(self, name: str) -> ActionSchema:
        for a in self.actions:
            if a.name == name:
                return a
        raise DomainError(f"unknown action {name!r}")

    def static(self, name: str) -> StaticRelation:
        for s in self.statics:
            if s.name == name:
                return s
        raise DomainError(f"unknown static relation {name!r}")

    def intention(self, name: str) -> IntentionTemplate:
        for t in self.intentions:
            if t.name == name:
                return t
        raise DomainError(f"unknown intention template {name!r}")

    def ground_goals(self, delegable_only: bool = False) -> tuple[str, ...]:
        """All ground goal terms, in template then argument order."""
        import itertools

        out = []
        for t in self.intentions:
            if delegable_only and t.name not in self.delegable:
                continue
            ranges = [self.sort_members(s) for _, s in t.params]
            for combo in itertools.product(*ranges):
                out.append(format_term(t.name, combo))
        return tuple(out)


# ---------------------------------------------------------------- ground level


class GroundAction(NamedTuple):
    name: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return format_term(self.name, self.args, ", ")

    @classmethod
    def parse(cls, text: str) -> "GroundAction":
        return cls(*parse_term(text))


class Intention(NamedTuple):
    character: str
    goal: str

    def __str__(self) -> str:
        return f"intends({self.character}, {self.goal})"


@dataclass(frozen=True)
class PlanStep:
    action: GroundAction
    actor: str | None = None
    intention: Intention | None = None
    executed: bool = True


Plan = tuple[PlanStep, ...]


def make_step(
    domain: StoryDomain,
    action: GroundAction | str,
    intention: Intention | tuple[str, str] | None = None,
    executed: bool = True,
) -> PlanStep:
    """Build a step, deriving the actor from the schema's actor slot."""
    if isinstance(action, str):
        action = GroundAction.parse(action)
    schema = domain.action(action.name)
    if len(action.args) != len(schema.params):
        raise DomainError(f"{action}: expected {len(schema.params)} arguments")
    actor = None
    if schema.actor is not None:
        actor = action.args[schema.variables.index(schema.actor)]
    if intention is not None:
        intention = Intention(intention[0], normalize_term(intention[1]))
    if schema.intentional and intention is None:
        raise DomainError(f"intentional action {action} needs an intention annotation")
    return PlanStep(action=action, actor=actor, intention=intention, executed=executed)


@dataclass(frozen=True)
class GoalSpec:
    condition: tuple[Literal, ...] = ()
    min_conflicts: int = 0


@dataclass(frozen=True)
class TaskInstance:
    """``<domain, initial state, goal>`` plus validation mode.

    ``initial`` lists only non-default fluent values (booleans default to
    false, integers to 0); the full valuation is materialized by grounding.
    """

    domain: StoryDomain
    initial: dict[str, int]
    goal: GoalSpec
    mode: str = CAUSAL
    initial_intentions: tuple[Intention, ...] = ()
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.goal.min_conflicts > 0 and self.mode != CONFLICT:
            raise DomainError("min_conflicts > 0 requires conflict mode")

    @property
    def task_id(self) -> str:
        return self.metadata.get("id", self.domain.name)

    def with_initial(self, initial: dict[str, int], intentions=None) -> "TaskInstance":
        return TaskInstance(
            domain=self.domain,
            initial=dict(initial),
            goal=self.goal,
            mode=self.mode,
            initial_intentions=self.initial_intentions if intentions is None else tuple(intentions),
            metadata=dict(self.metadata),
        )


# ---------------------------------------------------------------- domain checks


def _literal_sort_defects(lit, var_sorts, domain: StoryDomain, where: str) -> list[str]:
    defects = []

    def check_args(args, param_sorts, symbol):
        if len(args) != len(param_sorts):
            defects.append(f"{where}: {symbol} expects {len(param_sorts)} arguments, got {len(args)}")
            return
        for a, s in zip(args, param_sorts):
            if is_var(a):
                if a not in var_sorts:
                    defects.append(f"{where}: unbound variable {a} in {symbol}")
                elif var_sorts[a] != s:
                    defects.append(f"{where}: {a} has sort {var_sorts[a]}, {symbol} expects {s}")
            else:
                try:
                    if a not in domain.sort_members(s):
                        defects.append(f"{where}: constant {a} is not a {s}")
                except DomainError:
                    defects.append(f"{where}: undeclared sort {s}")

    if isinstance(lit, (Atom, Compare, Effect)):
        try:
            fs = domain.fluent(lit.fluent)
        except DomainError:
            defects.append(f"{where}: undeclared fluent {lit.fluent}")
            return defects
        check_args(lit.args, fs.params, lit.fluent)
        if isinstance(lit, Compare) and not fs.is_int:
            defects.append(f"{where}: comparison on boolean fluent {lit.fluent}")
        if isinstance(lit, Effect) and lit.kind == "delta" and not fs.is_int:
            defects.append(f"{where}: delta effect on boolean fluent {lit.fluent}")
    elif isinstance(lit, Static):
        try:
            rel = domain.static(lit.relation)
        except DomainError:
            defects.append(f"{where}: undeclared static relation {lit.relation}")
            return defects
        check_args(lit.args, rel.params, lit.relation)
    elif isinstance(lit, (Intends, IntendEffect)):
        if is_var(lit.character):
            if var_sorts.get(lit.character) is None:
                defects.append(f"{where}: unbound variable {lit.character}")
        if is_var(lit.goal):
            if var_sorts.get(lit.goal) != GOAL_SORT:
                defects.append(f"{where}: goal variable {lit.goal} must have sort {GOAL_SORT}")
        else:
            try:
                name, args = parse_term(lit.goal)
                tmpl = domain.intention(name)
                check_args(args, tuple(s for _, s in tmpl.params), name)
            except (DomainError, ValueError):
                defects.append(f"{where}: goal {lit.goal} is outside the intention vocabulary")
    return defects


def validate_domain(domain: StoryDomain) -> list[str]:
    """Return a list of human-readable defects; empty means well-formed."""
    defects: list[str] = []
    declared = set(domain.sort_names)
    uses_goal_sort = any(s == GOAL_SORT for a in domain.actions for _, s in a.params)
    if uses_goal_sort:
        declared.add(GOAL_SORT)

    def dupes(names, kind):
        seen = set()
        for n in names:
            if n in seen:
                defects.append(f"duplicate {kind} name {n}")
            seen.add(n)

    dupes(domain.sort_names, "sort")
    dupes([f.name for f in domain.fluents], "fluent")
    dupes([s.name for s in domain.statics], "static relation")
    dupes([a.name for a in domain.actions], "action")
    dupes([t.name for t in domain.intentions], "intention template")

    for f in domain.fluents:
        for s in f.params:
            if s not in declared:
                defects.append(f"fluent {f.name}: undeclared sort {s}")
        if f.kind not in ("bool", "int"):
            defects.append(f"fluent {f.name}: unknown kind {f.kind}")
    for rel in domain.statics:
        for s in rel.params:
            if s not in declared:
                defects.append(f"static {rel.name}: undeclared sort {s}")
        for tup in rel.tuples:
            if len(tup) != len(rel.params):
                defects.append(f"static {rel.name}: tuple {tup} has wrong arity")
    for t in domain.intentions:
        var_sorts = dict(t.params)
        for s in var_sorts.values():
            if s not in declared:
                defects.append(f"intention {t.name}: undeclared sort {s}")
        for lit in t.condition:
            if isinstance(lit, Intends):
                defects.append(f"intention {t.name}: nested intends in goal condition")
            else:
                defects.extend(_literal_sort_defects(lit, var_sorts, domain, f"intention {t.name}"))
    for d in domain.delegable:
        if d not in {t.name for t in domain.intentions}:
            defects.append(f"delegable template {d} is not in the intention vocabulary")
    for a in domain.actions:
        var_sorts = {}
        for v, s in a.params:
            if not is_var(v):
                defects.append(f"action {a.name}: parameter {v} must start with '?'")
            if s not in declared:
                defects.append(f"action {a.name}: undeclared sort {s}")
            var_sorts[v] = s
        if a.actor is not None and a.actor not in var_sorts:
            defects.append(f"action {a.name}: actor {a.actor} is not a parameter")
        for lit in a.precondition:
            defects.extend(_literal_sort_defects(lit, var_sorts, domain, f"action {a.name}"))
        targets = set()
        for eff in a.effects:
            defects.extend(_literal_sort_defects(eff, var_sorts, domain, f"action {a.name}"))
            if isinstance(eff, Effect):
                key = (eff.fluent, eff.args)
                if key in targets:
                    defects.append(f"action {a.name}: several effects on {eff.fluent}{eff.args}")
                targets.add(key)
    return defects
