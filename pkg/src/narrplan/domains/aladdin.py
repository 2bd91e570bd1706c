"""Aladdin: the king delegates the lamp quest through a network of loyal
subjects, then uses the genie to win the princess and has it slain."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..model import (
    INTENTIONAL,
    ActionSchema,
    Atom,
    Effect,
    FluentSchema,
    GoalSpec,
    IntendEffect,
    Intends,
    Intention,
    IntentionTemplate,
    Static,
    StaticRelation,
    StoryDomain,
    TaskInstance,
)

KING = "jafar"
KNIGHT = "aladdin"
BASE_CHARACTERS = (KING, KNIGHT, "dragon", "spirit", "jasmine")


@dataclass(frozen=True)
class AladdinParams:
    layers: int = 0
    width: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.layers < 0:
            raise ValueError("layers must be non-negative")
        if self.width < 1:
            raise ValueError("width must be at least 1")

    def to_dict(self) -> dict:
        return {"domain": "aladdin", "layers": self.layers, "width": self.width, "seed": self.seed}


def _alive(var):
    return Atom("dead", (var,), False, tag="alive")


def _actions() -> tuple[ActionSchema, ...]:
    ch, loc = "character", "location"
    order = ActionSchema(
        "order",
        (("?boss", ch), ("?sub", ch), ("?g", "goal")),
        "?boss",
        (
            Static("loyal", ("?sub", "?boss")),
            Intends("?boss", "?g"),
            _alive("?boss"),
            _alive("?sub"),
        ),
        (IntendEffect("?sub", "?g"),),
    )
    move = ActionSchema(
        "move",
        (("?ch", ch), ("?from", loc), ("?to", loc)),
        "?ch",
        (
            Static("mobile", ("?ch",)),
            Static("connected", ("?from", "?to"), tag="connectivity"),
            Atom("at", ("?ch", "?from"), tag="location"),
            _alive("?ch"),
        ),
        (Effect("at", ("?ch", "?from"), "assign", 0), Effect("at", ("?ch", "?to"), "assign", 1)),
        intentional=True,
    )
    slay = ActionSchema(
        "slay",
        (("?k", ch), ("?v", ch), ("?l", loc)),
        "?k",
        (
            Static("knight", ("?k",)),
            Static("slayable", ("?v",)),
            Atom("at", ("?k", "?l"), tag="location"),
            Atom("at", ("?v", "?l"), tag="location"),
            _alive("?k"),
            _alive("?v"),
        ),
        (Effect("dead", ("?v",), "assign", 1),),
        intentional=True,
    )
    take = ActionSchema(
        "take",
        (("?ch", ch), ("?o", "object"), ("?from", ch), ("?l", loc)),
        "?ch",
        (
            Static("distinct", ("?ch", "?from")),
            Atom("at", ("?ch", "?l"), tag="location"),
            Atom("at", ("?from", "?l"), tag="location"),
            Atom("has", ("?from", "?o"), tag="holder"),
            Atom("dead", ("?from",), tag="dead"),
            _alive("?ch"),
        ),
        (Effect("has", ("?from", "?o"), "assign", 0), Effect("has", ("?ch", "?o"), "assign", 1)),
        intentional=True,
    )
    give = ActionSchema(
        "give",
        (("?ch", ch), ("?o", "object"), ("?to", ch), ("?l", loc)),
        "?ch",
        (
            Static("distinct", ("?ch", "?to")),
            Intends("?ch", "in_possession_of(?to,?o)"),
            Atom("at", ("?ch", "?l"), tag="location"),
            Atom("at", ("?to", "?l"), tag="location"),
            Atom("has", ("?ch", "?o"), tag="holder"),
            _alive("?ch"),
            _alive("?to"),
        ),
        (Effect("has", ("?ch", "?o"), "assign", 0), Effect("has", ("?to", "?o"), "assign", 1)),
        intentional=True,
    )
    summon = ActionSchema(
        "summon",
        (("?ch", ch), ("?gn", ch), ("?o", "object"), ("?l", loc)),
        "?ch",
        (
            Static("genie_of", ("?gn", "?o")),
            Atom("has", ("?ch", "?o"), tag="holder"),
            Atom("at", ("?ch", "?l"), tag="location"),
            Atom("summoned", ("?gn",), False, tag="once"),
            _alive("?ch"),
        ),
        (
            Effect("summoned", ("?gn",), "assign", 1),
            Effect("at", ("?gn", "?l"), "assign", 1),
            Effect("controls", ("?ch", "?gn"), "assign", 1),
        ),
        intentional=True,
    )
    command = ActionSchema(
        "command",
        (("?ch", ch), ("?gn", ch), ("?t", ch)),
        "?ch",
        (
            Static("distinct", ("?ch", "?t")),
            Atom("controls", ("?ch", "?gn"), tag="holder"),
            _alive("?ch"),
            _alive("?gn"),
        ),
        (IntendEffect("?gn", "loves(?t,?ch)"),),
        intentional=True,
    )
    cast = ActionSchema(
        "cast_spell",
        (("?gn", ch), ("?t", ch), ("?m", ch), ("?l", loc)),
        "?gn",
        (
            Static("magical", ("?gn",)),
            Static("distinct", ("?t", "?m")),
            Atom("controls", ("?m", "?gn"), tag="holder"),
            Atom("at", ("?gn", "?l"), tag="location"),
            Atom("at", ("?t", "?l"), tag="location"),
            _alive("?gn"),
        ),
        (Effect("loves", ("?t", "?m"), "assign", 1),),
        intentional=True,
    )
    marry = ActionSchema(
        "marry",
        (("?ch", ch), ("?sp", ch), ("?l", loc)),
        "?ch",
        (
            Static("distinct", ("?ch", "?sp")),
            Atom("at", ("?ch", "?l"), tag="location"),
            Atom("at", ("?sp", "?l"), tag="location"),
            Atom("loves", ("?sp", "?ch")),
            _alive("?ch"),
            _alive("?sp"),
        ),
        (Effect("married", ("?ch", "?sp"), "assign", 1),),
        intentional=True,
    )
    return (order, move, slay, take, give, summon, command, cast, marry)


def _intentions() -> tuple[IntentionTemplate, ...]:
    return (
        IntentionTemplate("dead", (("?c", "character"),), (Atom("dead", ("?c",)),)),
        IntentionTemplate(
            "in_possession_of", (("?c", "character"), ("?o", "object")), (Atom("has", ("?c", "?o")),)
        ),
        IntentionTemplate("loves", (("?c", "character"), ("?d", "character")), (Atom("loves", ("?c", "?d")),)),
        IntentionTemplate("married", (("?c", "character"), ("?d", "character")), (Atom("married", ("?c", "?d")),)),
    )


def build(loyalty: dict[str, str], name: str = "aladdin", metadata: dict | None = None) -> TaskInstance:
    """Aladdin task; ``loyalty`` maps each subject to its direct superior."""
    vassals = tuple(sorted(c for c in loyalty if c not in BASE_CHARACTERS))
    characters = BASE_CHARACTERS + vassals
    domain = StoryDomain(
        name=name,
        sorts=(
            ("character", characters),
            ("location", ("castle", "mountain")),
            ("object", ("lamp",)),
        ),
        fluents=(
            FluentSchema("at", ("character", "location")),
            FluentSchema("dead", ("character",)),
            FluentSchema("has", ("character", "object")),
            FluentSchema("summoned", ("character",)),
            FluentSchema("controls", ("character", "character")),
            FluentSchema("loves", ("character", "character")),
            FluentSchema("married", ("character", "character")),
        ),
        statics=(
            StaticRelation("loyal", ("character", "character"), frozenset(loyalty.items())),
            StaticRelation("knight", ("character",), frozenset({(KNIGHT,)})),
            StaticRelation("mobile", ("character",), frozenset({(KNIGHT,)})),
            StaticRelation("slayable", ("character",), frozenset({("dragon",), ("spirit",)})),
            StaticRelation("magical", ("character",), frozenset({("spirit",)})),
            StaticRelation("genie_of", ("character", "object"), frozenset({("spirit", "lamp")})),
            StaticRelation(
                "connected", ("location", "location"),
                frozenset({("castle", "mountain"), ("mountain", "castle")}),
            ),
            StaticRelation(
                "distinct", ("character", "character"),
                frozenset((a, b) for a in characters for b in characters if a != b),
            ),
        ),
        actions=_actions(),
        intentions=_intentions(),
        delegable=("dead", "in_possession_of"),
    )
    initial = {f"at({c},castle)": 1 for c in (KING, KNIGHT, "jasmine") + vassals}
    initial["at(dragon,mountain)"] = 1
    initial["has(dragon,lamp)"] = 1
    intentions = (
        Intention(KING, f"married({KING},jasmine)"),
        Intention(KING, f"in_possession_of({KING},lamp)"),
        Intention(KING, "dead(spirit)"),
    )
    return TaskInstance(
        domain=domain,
        initial=initial,
        goal=GoalSpec((Atom("married", (KING, "jasmine")), Atom("dead", ("spirit",)))),
        mode=INTENTIONAL,
        initial_intentions=intentions,
        metadata=metadata or {"id": name, "domain": "aladdin"},
    )


def canonical() -> TaskInstance:
    return build({KNIGHT: KING})


def loyalty_tree(layers: int, width: int, rng: random.Random) -> dict[str, str]:
    """Subject -> superior edges of a layered tree from the king down to the knight."""
    edges = {}
    above = [KING]
    for layer in range(1, layers + 1):
        current = [f"vassal_{layer}_{j}" for j in range(1, width + 1)]
        for v in current:
            edges[v] = rng.choice(above)
        above = current
    edges[KNIGHT] = rng.choice(above)
    return edges


def delegation_path(loyalty: dict[str, str]) -> list[str]:
    """Chain of superiors from the knight up to the king."""
    path = [KNIGHT]
    while path[-1] != KING:
        path.append(loyalty[path[-1]])
    return path


def generate(params: AladdinParams) -> TaskInstance:
    rng = random.Random(params.seed)
    loyalty = loyalty_tree(params.layers, params.width, rng)
    tid = f"aladdin_l{params.layers}_w{params.width}_s{params.seed}"
    meta = {"id": tid, "domain": "aladdin", "params": params.to_dict(),
            "expected_length": 12 + 2 * params.layers}
    return build(loyalty, metadata=meta)
