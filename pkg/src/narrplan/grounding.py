"""Grounding: enumerate ground fluents/actions and compile them to index form.

World states are tuples of ints indexed by ground fluent; booleans are 0/1.
Compiled literals are keyed as ``("b", idx, value)`` for boolean literals,
``("c", idx, op, const)`` for comparisons and ``("i", character, goal)`` for
intention literals.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .model import (
    GOAL_SORT,
    Atom,
    Compare,
    DomainError,
    Effect,
    GroundAction,
    IntendEffect,
    Intends,
    Intention,
    Static,
    StoryDomain,
    format_term,
    is_var,
    parse_term,
    substitute,
    validate_domain,
)

OPS = {
    "=": lambda a, b: a == b,
    ">=": lambda a, b: a >= b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    "<": lambda a, b: a < b,
}


def lit_true(key, values) -> bool:
    if key[0] == "b":
        return values[key[1]] == key[2]
    return OPS[key[2]](values[key[1]], key[3])


@dataclass(frozen=True)
class WorldState:
    """Total valuation of the ground fluents of one grounded domain."""

    values: tuple[int, ...]
    grounded: "GroundedDomain" = field(compare=False, repr=False, default=None)

    def __getitem__(self, fluent: str) -> int:
        return self.values[self.grounded.fluent_id(fluent)]

    def as_dict(self, nondefault: bool = True) -> dict[str, int]:
        names = self.grounded.fluent_names
        return {names[i]: v for i, v in enumerate(self.values) if v or not nondefault}


@dataclass
class CompiledCondition:
    statics_ok: bool
    failed_statics: tuple[tuple[str, str | None], ...]
    world: tuple[tuple, ...]  # literal keys
    intends: tuple[Intention, ...]
    tags: dict

    def holds(self, values) -> bool:
        if not self.statics_ok:
            return False
        for key in self.world:
            if not lit_true(key, values):
                return False
        return True


class CompiledAction:
    __slots__ = (
        "action", "schema", "actor", "intentional", "pre", "effects",
        "intend_effects", "writes", "reads",
    )

    def __init__(self, action, schema, actor, pre, effects, intend_effects):
        self.action = action
        self.schema = schema
        self.actor = actor
        self.intentional = schema.intentional
        self.pre: CompiledCondition = pre
        self.effects = effects  # ((idx, kind, value), ...)
        self.intend_effects = intend_effects
        self.writes = frozenset(i for i, _, _ in effects)
        self.reads = frozenset(k[1] for k in pre.world)

    def post(self, values: tuple[int, ...]) -> tuple[int, ...]:
        """Apply effects without checking preconditions or bounds."""
        out = list(values)
        for idx, kind, val in self.effects:
            out[idx] = out[idx] + val if kind == "delta" else val
        return tuple(out)


class GroundedDomain:
    """All ground fluents and actions of a domain, with compilation caches."""

    def __init__(self, domain: StoryDomain, check: bool = True):
        if check:
            defects = validate_domain(domain)
            if defects:
                raise DomainError("; ".join(defects))
        self.domain = domain
        self.sorts: dict[str, tuple[str, ...]] = dict(domain.sorts)
        self.sorts[GOAL_SORT] = domain.ground_goals(delegable_only=True)
        self.statics = {rel.name: frozenset(rel.tuples) for rel in domain.statics}
        self.schemas = {a.name: a for a in domain.actions}
        fluents, lower, upper, is_int = [], [], [], []
        for fs in domain.fluents:
            for combo in itertools.product(*(self.sorts[s] for s in fs.params)):
                fluents.append((fs.name, combo))
                lower.append(0)
                upper.append(fs.upper if fs.is_int else 1)
                is_int.append(fs.is_int)
        self.fluents: tuple[tuple[str, tuple[str, ...]], ...] = tuple(fluents)
        self.fluent_names = tuple(format_term(n, a) for n, a in fluents)
        self.index = {f: i for i, f in enumerate(fluents)}
        self.name_index = {n: i for i, n in enumerate(self.fluent_names)}
        self.lower = tuple(lower)
        self.upper = tuple(upper)
        self.is_int = tuple(is_int)
        self._compiled: dict[GroundAction, CompiledAction] = {}
        self._goal_cache: dict[str, CompiledCondition] = {}
        self._actions = None
        self._candidates = None

    # ------------------------------------------------------------ lookup

    def fluent_id(self, fluent) -> int:
        try:
            if isinstance(fluent, str):
                return self.name_index[fluent.replace(" ", "")]
            return self.index[fluent]
        except KeyError:
            raise DomainError(f"unknown ground fluent {fluent}") from None

    def state(self, assignment: dict[str, int] | None = None) -> WorldState:
        values = [0] * len(self.fluents)
        for name, v in (assignment or {}).items():
            i = self.fluent_id(name)
            v = int(v)
            up = self.upper[i]
            if v < 0 or (up is not None and v > up):
                raise DomainError(f"value {v} for {name} is out of bounds")
            values[i] = v
        return WorldState(tuple(values), self)

    def wrap(self, values) -> WorldState:
        return WorldState(tuple(values), self)

    # ------------------------------------------------------------ counts

    def action_count(self) -> int:
        return sum(math.prod(len(self.sorts[s]) for _, s in a.params) for a in self.domain.actions)

    @property
    def actions(self) -> tuple[GroundAction, ...]:
        """Every substitution of every action schema, in lexicographic order."""
        if self._actions is None:
            out = []
            for schema in sorted(self.domain.actions, key=lambda a: a.name):
                ranges = [sorted(self.sorts[s]) for _, s in schema.params]
                name = schema.name
                out.extend(GroundAction(name, combo) for combo in itertools.product(*ranges))
            self._actions = tuple(out)
        return self._actions

    def candidates(self) -> tuple[GroundAction, ...]:
        """Ground actions whose static preconditions hold, in lexicographic order."""
        if self._candidates is None:
            out = []
            for schema in sorted(self.domain.actions, key=lambda a: a.name):
                out.extend(self._bind(schema))
            self._candidates = tuple(out)
        return self._candidates

    def _bind(self, schema):
        variables = schema.variables
        pos = {v: i for i, v in enumerate(variables)}
        checks = [[] for _ in variables]
        for lit in schema.precondition:
            if isinstance(lit, Static):
                vs = [pos[a] for a in lit.args if is_var(a)]
                checks[max(vs) if vs else 0].append(lit)
        ranges = [sorted(self.sorts[s]) for _, s in schema.params]
        binding: dict[str, str] = {}
        name = schema.name

        def rec(i):
            if i == len(variables):
                yield GroundAction(name, tuple(binding[v] for v in variables))
                return
            var = variables[i]
            for c in ranges[i]:
                binding[var] = c
                if all(self._static_true(lit, binding) for lit in checks[i]):
                    yield from rec(i + 1)
            binding.pop(var, None)

        if not variables:
            if all(self._static_true(lit, {}) for lit in schema.precondition if isinstance(lit, Static)):
                yield GroundAction(name, ())
            return
        yield from rec(0)

    def _static_true(self, lit: Static, binding) -> bool:
        tup = tuple(substitute(a, binding) for a in lit.args)
        try:
            rel = self.statics[lit.relation]
        except KeyError:
            raise DomainError(f"unknown static relation {lit.relation}") from None
        return (tup in rel) == lit.value

    # ------------------------------------------------------------ compile

    def compile_condition(self, literals, binding=None) -> CompiledCondition:
        binding = binding or {}
        statics_ok, failed, world, intends, tags = True, [], [], [], {}
        for lit in literals:
            if isinstance(lit, Static):
                if not self._static_true(lit, binding):
                    statics_ok = False
                    args = tuple(substitute(a, binding) for a in lit.args)
                    text = format_term(lit.relation, args)
                    failed.append((text if lit.value else f"not {text}", lit.tag))
            elif isinstance(lit, Atom):
                idx = self.fluent_id((lit.fluent, tuple(substitute(a, binding) for a in lit.args)))
                key = ("b", idx, int(lit.value))
                world.append(key)
                tags.setdefault(key, lit.tag)
            elif isinstance(lit, Compare):
                idx = self.fluent_id((lit.fluent, tuple(substitute(a, binding) for a in lit.args)))
                key = ("c", idx, lit.op, lit.const)
                world.append(key)
                tags.setdefault(key, lit.tag)
            elif isinstance(lit, Intends):
                intends.append(Intention(substitute(lit.character, binding), substitute(lit.goal, binding)))
            else:
                raise DomainError(f"unsupported literal {lit!r}")
        # duplicate conjuncts collapse
        world = tuple(dict.fromkeys(world))
        return CompiledCondition(statics_ok, tuple(failed), world, tuple(dict.fromkeys(intends)), tags)

    def compile(self, action: GroundAction) -> CompiledAction:
        ca = self._compiled.get(action)
        if ca is not None:
            return ca
        schema = self.schemas.get(action.name)
        if schema is None:
            raise DomainError(f"unknown action {action.name}")
        if len(action.args) != len(schema.params):
            raise DomainError(f"{action}: expected {len(schema.params)} arguments")
        binding = {}
        for (var, sort), c in zip(schema.params, action.args):
            if c not in self.sorts[sort]:
                raise DomainError(f"{action}: {c} is not a {sort}")
            binding[var] = c
        pre = self.compile_condition(schema.precondition, binding)
        effects, intend_effects = {}, []
        for eff in schema.effects:
            if isinstance(eff, IntendEffect):
                intend_effects.append(Intention(substitute(eff.character, binding), substitute(eff.goal, binding)))
                continue
            idx = self.fluent_id((eff.fluent, tuple(substitute(a, binding) for a in eff.args)))
            # at ground level two slots may coincide; the later effect wins
            effects[idx] = (idx, eff.kind, int(eff.value))
        actor = binding[schema.actor] if schema.actor is not None else None
        ca = CompiledAction(action, schema, actor, pre, tuple(effects.values()), tuple(intend_effects))
        self._compiled[action] = ca
        return ca

    def goal(self, goal: str) -> CompiledCondition:
        """World condition of a ground goal term such as ``dead(spirit)``."""
        cond = self._goal_cache.get(goal)
        if cond is None:
            name, args = parse_term(goal)
            tmpl = self.domain.intention(name)
            if len(args) != len(tmpl.params):
                raise DomainError(f"goal {goal}: wrong arity")
            binding = dict(zip((v for v, _ in tmpl.params), args))
            cond = self.compile_condition(tmpl.condition, binding)
            self._goal_cache[goal] = cond
        return cond

    # ------------------------------------------------------------ text

    def literal_text(self, key) -> str:
        if key[0] == "b":
            name = self.fluent_names[key[1]]
            return name if key[2] else f"not {name}"
        if key[0] == "c":
            return f"{self.fluent_names[key[1]]}{key[2]}{key[3]}"
        return f"intends({key[1]},{key[2]})"


def ground(domain: StoryDomain) -> GroundedDomain:
    return GroundedDomain(domain)


def holds(state: WorldState, condition, binding=None) -> bool:
    """True iff every conjunct of ``condition`` (literals) is satisfied in ``state``.

    Intention literals are ignored here; they are tracked by the validators.
    """
    return state.grounded.compile_condition(condition, binding).holds(state.values)
