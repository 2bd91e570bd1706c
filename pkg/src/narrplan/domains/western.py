"""Western: a snakebite sends characters after the one medicine in town, and
their plans to get it clash."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..model import (
    CONFLICT,
    ActionSchema,
    Atom,
    Compare,
    Effect,
    FluentSchema,
    GoalSpec,
    IntendEffect,
    IntentionTemplate,
    Static,
    StaticRelation,
    StoryDomain,
    TaskInstance,
)
from .secret_agent import cell

MEDICINE = "medicine"


@dataclass(frozen=True)
class WesternParams:
    m: int = 5
    n_adventurers: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.m < 3 or self.m % 2 == 0:
            raise ValueError("grid side m must be odd and at least 3")
        if self.n_adventurers < 2:
            raise ValueError("at least two adventurers are required")

    def to_dict(self) -> dict:
        return {"domain": "western", "m": self.m, "n_adventurers": self.n_adventurers, "seed": self.seed}


def _possess_template():
    return IntentionTemplate(
        "in_possession_of", (("?c", "character"), ("?o", "object")),
        (Compare("has", ("?c", "?o"), ">=", 1),),
    )


def _walk():
    return ActionSchema(
        "walk",
        (("?ch", "character"), ("?from", "location"), ("?to", "location")),
        "?ch",
        (
            Static("connected", ("?from", "?to"), tag="connectivity"),
            Atom("at", ("?ch", "?from"), tag="location"),
        ),
        (Effect("at", ("?ch", "?from"), "assign", 0), Effect("at", ("?ch", "?to"), "assign", 1)),
        intentional=True,
    )


def canonical() -> TaskInstance:
    chars = ("parent", "child", "owner")
    snakebite = ActionSchema(
        "snakebite",
        (("?v", "character"), ("?carer", "character")),
        None,
        (
            Static("cares_for", ("?carer", "?v")),
            Atom("bitten", ("?v",), False),
            Atom("healed", ("?v",), False),
        ),
        (Effect("bitten", ("?v",), "assign", 1), IntendEffect("?carer", "healed(?v)")),
    )
    steal = ActionSchema(
        "steal",
        (("?th", "character"), ("?o", "object"), ("?vic", "character"), ("?l", "location")),
        "?th",
        (
            Static("distinct", ("?th", "?vic")),
            Atom("at", ("?th", "?l"), tag="location"),
            Atom("at", ("?vic", "?l"), tag="location"),
            Compare("has", ("?vic", "?o"), ">=", 1, tag="holder"),
        ),
        (
            Effect("has", ("?th", "?o"), "delta", 1),
            Effect("has", ("?vic", "?o"), "delta", -1),
            IntendEffect("?vic", "in_possession_of(?vic,?o)"),
        ),
        intentional=True,
    )
    take_back = ActionSchema(
        "take_back",
        (("?ch", "character"), ("?o", "object"), ("?th", "character"), ("?l", "location")),
        "?ch",
        (
            Static("distinct", ("?ch", "?th")),
            Atom("at", ("?ch", "?l"), tag="location"),
            Atom("at", ("?th", "?l"), tag="location"),
            Compare("has", ("?th", "?o"), ">=", 1, tag="holder"),
        ),
        (Effect("has", ("?ch", "?o"), "delta", 1), Effect("has", ("?th", "?o"), "delta", -1)),
        intentional=True,
    )
    heal = ActionSchema(
        "heal",
        (("?h", "character"), ("?p", "character"), ("?l", "location")),
        "?h",
        (
            Atom("at", ("?h", "?l"), tag="location"),
            Atom("at", ("?p", "?l"), tag="location"),
            Compare("has", ("?h", MEDICINE), ">=", 1, tag="item"),
            Atom("bitten", ("?p",)),
        ),
        (
            Effect("has", ("?h", MEDICINE), "delta", -1),
            Effect("bitten", ("?p",), "assign", 0),
            Effect("healed", ("?p",), "assign", 1),
        ),
        intentional=True,
    )
    domain = StoryDomain(
        name="western",
        sorts=(("character", chars), ("location", ("ranch", "store")), ("object", (MEDICINE,))),
        fluents=(
            FluentSchema("at", ("character", "location")),
            FluentSchema("has", ("character", "object"), "int"),
            FluentSchema("bitten", ("character",)),
            FluentSchema("healed", ("character",)),
        ),
        statics=(
            StaticRelation("connected", ("location", "location"),
                           frozenset({("ranch", "store"), ("store", "ranch")})),
            StaticRelation("cares_for", ("character", "character"), frozenset({("parent", "child")})),
            StaticRelation("distinct", ("character", "character"),
                           frozenset((a, b) for a in chars for b in chars if a != b)),
        ),
        actions=(snakebite, _walk(), steal, take_back, heal),
        intentions=(
            IntentionTemplate("healed", (("?c", "character"),), (Atom("healed", ("?c",)),)),
            _possess_template(),
        ),
        delegable=(),
    )
    return TaskInstance(
        domain=domain,
        initial={"at(parent,ranch)": 1, "at(child,ranch)": 1, "at(owner,store)": 1, f"has(owner,{MEDICINE})": 1},
        goal=GoalSpec((Atom("healed", ("child",)),), 1),
        mode=CONFLICT,
        metadata={"id": "western", "domain": "western"},
    )


def build_variation(m: int, positions: list[tuple[int, int]], name: str = "western",
                    metadata: dict | None = None) -> TaskInstance:
    """Adventurers at ``positions`` on an ``m``x``m`` grid with the store at the center."""
    n = len(positions)
    advs = tuple(f"adventurer_{i}" for i in range(1, n + 1))
    cells = tuple(cell(r, c) for r in range(m) for c in range(m))
    center = cell(m // 2, m // 2)
    connected = set()
    for r in range(m):
        for c in range(m):
            for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0)):
                if 0 <= r + dr < m and 0 <= c + dc < m:
                    connected.add((cell(r, c), cell(r + dr, c + dc)))
    snakebite = ActionSchema(
        "snakebite",
        (("?a", "character"),),
        None,
        (Atom("bitten_once", ("?a",), False, tag="once"),),
        (
            Effect("bitten", ("?a",), "assign", 1),
            Effect("bitten_once", ("?a",), "assign", 1),
            IntendEffect("?a", f"in_possession_of(?a,{MEDICINE})"),
        ),
    )
    obtain = ActionSchema(
        "obtain",
        (("?a", "character"), ("?l", "location")),
        "?a",
        (
            Static("store", ("?l",)),
            Atom("at", ("?a", "?l"), tag="location"),
            Compare("stock", (MEDICINE,), ">=", 1, tag="stock"),
            Atom("obtained", ("?a",), False, tag="once"),
        ),
        (
            Effect("stock", (MEDICINE,), "delta", -1),
            Effect("has", ("?a", MEDICINE), "delta", 1),
            Effect("obtained", ("?a",), "assign", 1),
        ),
        intentional=True,
    )
    heal = ActionSchema(
        "heal",
        (("?a", "character"),),
        "?a",
        (Compare("has", ("?a", MEDICINE), ">=", 1, tag="item"), Atom("bitten", ("?a",))),
        (
            Effect("has", ("?a", MEDICINE), "delta", -1),
            Effect("bitten", ("?a",), "assign", 0),
            Effect("healed", ("?a",), "assign", 1),
        ),
    )
    domain = StoryDomain(
        name=name,
        sorts=(("character", advs), ("location", cells), ("object", (MEDICINE,))),
        fluents=(
            FluentSchema("at", ("character", "location")),
            FluentSchema("has", ("character", "object"), "int"),
            FluentSchema("stock", ("object",), "int"),
            FluentSchema("bitten", ("character",)),
            FluentSchema("bitten_once", ("character",)),
            FluentSchema("obtained", ("character",)),
            FluentSchema("healed", ("character",)),
        ),
        statics=(
            StaticRelation("connected", ("location", "location"), frozenset(connected)),
            StaticRelation("store", ("location",), frozenset({(center,)})),
        ),
        actions=(snakebite, _walk(), obtain, heal),
        intentions=(_possess_template(),),
        delegable=(),
    )
    initial = {f"at({a},{cell(*p)})": 1 for a, p in zip(advs, positions)}
    initial[f"stock({MEDICINE})"] = n - 1
    return TaskInstance(
        domain=domain,
        initial=initial,
        goal=GoalSpec((), 1),
        mode=CONFLICT,
        metadata=metadata or {"id": name, "domain": "western"},
    )


def generate(params: WesternParams) -> TaskInstance:
    """Adventurers start 1-2 steps from the store, on distinct cells when possible."""
    rng = random.Random(params.seed)
    m, n = params.m, params.n_adventurers
    mid = m // 2
    ring = [(r, c) for r in range(m) for c in range(m) if 1 <= abs(r - mid) + abs(c - mid) <= 2]
    if n <= len(ring):
        positions = rng.sample(ring, n)
    else:
        positions = [rng.choice(ring) for _ in range(n)]
    tid = f"western_m{m}_n{n}_s{params.seed}"
    return build_variation(m, positions, metadata={"id": tid, "domain": "western", "params": params.to_dict()})
