"""Secret Agent: an agent crosses a grid, collects a gun and a key, and kills
the mastermind hiding in a locked lair."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..model import (
    CAUSAL,
    ActionSchema,
    Atom,
    Effect,
    FluentSchema,
    GoalSpec,
    Static,
    StaticRelation,
    StoryDomain,
    TaskInstance,
)

AGENT = "agent"
MASTERMIND = "mastermind"


@dataclass(frozen=True)
class SecretAgentParams:
    n: int = 3
    obstacle_density: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("grid side n must be at least 2")
        if not 0 <= self.obstacle_density < 1:
            raise ValueError("obstacle_density must be in [0, 1)")

    def to_dict(self) -> dict:
        return {"domain": "secret_agent", "n": self.n, "obstacle_density": self.obstacle_density, "seed": self.seed}


def cell(r: int, c: int) -> str:
    return f"cell_{r}_{c}"


def _actions() -> tuple[ActionSchema, ...]:
    alive = Atom("dead", ("?ch",), False, tag="alive")
    move = ActionSchema(
        "move",
        (("?ch", "character"), ("?from", "cell"), ("?to", "cell")),
        "?ch",
        (
            Static("operative", ("?ch",)),
            Static("adjacent", ("?from", "?to"), tag="connectivity"),
            Static("lair", ("?to",), False, tag="locked"),
            Atom("at", ("?ch", "?from"), tag="location"),
            alive,
        ),
        (Effect("at", ("?ch", "?from"), "assign", 0), Effect("at", ("?ch", "?to"), "assign", 1)),
    )
    enter = ActionSchema(
        "enter_lair",
        (("?ch", "character"), ("?from", "cell"), ("?to", "cell")),
        "?ch",
        (
            Static("operative", ("?ch",)),
            Static("adjacent", ("?from", "?to"), tag="connectivity"),
            Static("lair", ("?to",)),
            Atom("at", ("?ch", "?from"), tag="location"),
            Atom("has", ("?ch", "key"), tag="item"),
            alive,
        ),
        (Effect("at", ("?ch", "?from"), "assign", 0), Effect("at", ("?ch", "?to"), "assign", 1)),
    )
    pickup = ActionSchema(
        "pickup",
        (("?ch", "character"), ("?item", "item"), ("?cell", "cell")),
        "?ch",
        (
            Static("operative", ("?ch",)),
            Atom("at", ("?ch", "?cell"), tag="location"),
            Atom("item_at", ("?item", "?cell"), tag="location"),
            alive,
        ),
        (Effect("item_at", ("?item", "?cell"), "assign", 0), Effect("has", ("?ch", "?item"), "assign", 1)),
    )
    kill = ActionSchema(
        "kill",
        (("?ch", "character"), ("?victim", "character"), ("?cell", "cell")),
        "?ch",
        (
            Static("operative", ("?ch",)),
            Static("operative", ("?victim",), False),
            Atom("at", ("?ch", "?cell"), tag="location"),
            Atom("at", ("?victim", "?cell"), tag="location"),
            Atom("has", ("?ch", "gun"), tag="item"),
            alive,
            Atom("dead", ("?victim",), False, tag="alive"),
        ),
        (Effect("dead", ("?victim",), "assign", 1),),
    )
    return (move, enter, pickup, kill)


def build(
    n: int,
    obstacles=frozenset(),
    gun: tuple[int, int] = (0, 1),
    key: tuple[int, int] = (0, 2),
    name: str = "secret_agent",
    metadata: dict | None = None,
) -> TaskInstance:
    """Secret Agent task on an ``n``x``n`` grid; obstacle cells are impassable."""
    coords = [(r, c) for r in range(n) for c in range(n)]
    lair = (n - 1, n - 1)
    adjacent = set()
    for r, c in coords:
        if (r, c) in obstacles:
            continue
        for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0)):
            q = (r + dr, c + dc)
            if q in coords and q not in obstacles:
                adjacent.add((cell(r, c), cell(*q)))
    domain = StoryDomain(
        name=name,
        sorts=(
            ("character", (AGENT, MASTERMIND)),
            ("cell", tuple(cell(r, c) for r, c in coords)),
            ("item", ("gun", "key")),
        ),
        fluents=(
            FluentSchema("at", ("character", "cell")),
            FluentSchema("has", ("character", "item")),
            FluentSchema("item_at", ("item", "cell")),
            FluentSchema("dead", ("character",)),
        ),
        statics=(
            StaticRelation("adjacent", ("cell", "cell"), frozenset(adjacent)),
            StaticRelation("lair", ("cell",), frozenset({(cell(*lair),)})),
            StaticRelation("operative", ("character",), frozenset({(AGENT,)})),
            StaticRelation("obstacle", ("cell",), frozenset((cell(*o),) for o in obstacles)),
        ),
        actions=_actions(),
    )
    initial = {
        f"at({AGENT},{cell(0, 0)})": 1,
        f"at({MASTERMIND},{cell(*lair)})": 1,
        f"item_at(gun,{cell(*gun)})": 1,
        f"item_at(key,{cell(*key)})": 1,
    }
    return TaskInstance(
        domain=domain,
        initial=initial,
        goal=GoalSpec((Atom("dead", (MASTERMIND,)),)),
        mode=CAUSAL,
        metadata=metadata or {"id": name, "domain": "secret_agent"},
    )


def canonical() -> TaskInstance:
    return build(3, frozenset(), (0, 1), (0, 2), "secret_agent")


def generate(params: SecretAgentParams) -> TaskInstance:
    rng = random.Random(params.seed)
    n = params.n
    start, lair = (0, 0), (n - 1, n - 1)
    others = [(r, c) for r in range(n) for c in range(n) if (r, c) not in (start, lair)]
    k = round(params.obstacle_density * len(others))
    obstacles = set(rng.sample(others, k))
    free = [p for p in others if p not in obstacles] or [start]
    if len(free) >= 2:
        gun, key = rng.sample(free, 2)
    else:
        gun = key = free[0]
    tid = f"secret_agent_n{n}_d{params.obstacle_density:g}_s{params.seed}"
    return build(n, frozenset(obstacles), gun, key, name="secret_agent",
                 metadata={"id": tid, "domain": "secret_agent", "params": params.to_dict()})
