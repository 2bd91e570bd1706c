"""JSON task files.

Output is byte-stable: keys are sorted and every collection is emitted in a
deterministic order, so two generator runs with the same seed produce
identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

from .model import (
    ActionSchema,
    Atom,
    Compare,
    Effect,
    FluentSchema,
    GoalSpec,
    IntendEffect,
    Intends,
    Intention,
    IntentionTemplate,
    PlanStep,
    GroundAction,
    Static,
    StaticRelation,
    StoryDomain,
    TaskInstance,
    parse_term,
)

FORMAT_VERSION = 1


def literal_to_dict(lit) -> dict:
    if isinstance(lit, Atom):
        d = {"kind": "atom", "fluent": lit.fluent, "args": list(lit.args), "value": lit.value}
    elif isinstance(lit, Compare):
        d = {"kind": "compare", "fluent": lit.fluent, "args": list(lit.args), "op": lit.op, "const": lit.const}
    elif isinstance(lit, Static):
        d = {"kind": "static", "relation": lit.relation, "args": list(lit.args), "value": lit.value}
    elif isinstance(lit, Intends):
        d = {"kind": "intends", "character": lit.character, "goal": lit.goal}
    else:
        raise TypeError(f"not a literal: {lit!r}")
    if lit.tag is not None:
        d["tag"] = lit.tag
    return d


def literal_from_dict(d: dict):
    kind = d["kind"]
    tag = d.get("tag")
    if kind == "atom":
        return Atom(d["fluent"], tuple(d["args"]), bool(d["value"]), tag)
    if kind == "compare":
        return Compare(d["fluent"], tuple(d["args"]), d["op"], int(d["const"]), tag)
    if kind == "static":
        return Static(d["relation"], tuple(d["args"]), bool(d["value"]), tag)
    if kind == "intends":
        return Intends(d["character"], d["goal"], tag)
    raise ValueError(f"unknown literal kind {kind!r}")


def _effect_to_dict(eff) -> dict:
    if isinstance(eff, IntendEffect):
        return {"kind": "intends", "character": eff.character, "goal": eff.goal}
    return {"kind": eff.kind, "fluent": eff.fluent, "args": list(eff.args), "value": eff.value}


def _effect_from_dict(d: dict):
    if d["kind"] == "intends":
        return IntendEffect(d["character"], d["goal"])
    return Effect(d["fluent"], tuple(d["args"]), d["kind"], int(d["value"]))


def domain_to_dict(domain: StoryDomain) -> dict:
    return {
        "name": domain.name,
        "sorts": {name: list(members) for name, members in domain.sorts},
        "sort_order": [name for name, _ in domain.sorts],
        "fluents": [
            {"name": f.name, "params": list(f.params), "kind": f.kind, "upper": f.upper}
            for f in domain.fluents
        ],
        "statics": [
            {"name": s.name, "params": list(s.params), "tuples": sorted(list(t) for t in s.tuples)}
            for s in domain.statics
        ],
        "actions": [
            {
                "name": a.name,
                "params": [list(p) for p in a.params],
                "actor": a.actor,
                "intentional": a.intentional,
                "precondition": [literal_to_dict(lit) for lit in a.precondition],
                "effects": [_effect_to_dict(e) for e in a.effects],
            }
            for a in domain.actions
        ],
        "intentions": [
            {
                "name": t.name,
                "params": [list(p) for p in t.params],
                "condition": [literal_to_dict(lit) for lit in t.condition],
            }
            for t in domain.intentions
        ],
        "delegable": list(domain.delegable),
    }


def domain_from_dict(d: dict) -> StoryDomain:
    return StoryDomain(
        name=d["name"],
        sorts=tuple((name, tuple(d["sorts"][name])) for name in d["sort_order"]),
        fluents=tuple(FluentSchema(f["name"], tuple(f["params"]), f["kind"], f["upper"]) for f in d["fluents"]),
        statics=tuple(
            StaticRelation(s["name"], tuple(s["params"]), frozenset(tuple(t) for t in s["tuples"]))
            for s in d["statics"]
        ),
        actions=tuple(
            ActionSchema(
                name=a["name"],
                params=tuple(tuple(p) for p in a["params"]),
                actor=a["actor"],
                precondition=tuple(literal_from_dict(x) for x in a["precondition"]),
                effects=tuple(_effect_from_dict(x) for x in a["effects"]),
                intentional=a["intentional"],
            )
            for a in d["actions"]
        ),
        intentions=tuple(
            IntentionTemplate(
                t["name"], tuple(tuple(p) for p in t["params"]),
                tuple(literal_from_dict(x) for x in t["condition"]),
            )
            for t in d["intentions"]
        ),
        delegable=tuple(d["delegable"]),
    )


def task_to_dict(task: TaskInstance) -> dict:
    return {
        "format": FORMAT_VERSION,
        "domain": domain_to_dict(task.domain),
        "initial": {
            "fluents": {k: v for k, v in task.initial.items() if v},
            "intentions": [f"intends({i.character},{i.goal})" for i in task.initial_intentions],
        },
        "goal": {
            "condition": [literal_to_dict(lit) for lit in task.goal.condition],
            "min_conflicts": task.goal.min_conflicts,
        },
        "mode": task.mode,
        "metadata": task.metadata,
    }


def _parse_intention(text: str) -> Intention:
    name, args = parse_term(text)
    if name != "intends" or len(args) != 2:
        raise ValueError(f"not an intention: {text!r}")
    return Intention(args[0], args[1])


def task_from_dict(d: dict) -> TaskInstance:
    return TaskInstance(
        domain=domain_from_dict(d["domain"]),
        initial=dict(d["initial"]["fluents"]),
        goal=GoalSpec(
            tuple(literal_from_dict(x) for x in d["goal"]["condition"]),
            int(d["goal"]["min_conflicts"]),
        ),
        mode=d["mode"],
        initial_intentions=tuple(_parse_intention(t) for t in d["initial"]["intentions"]),
        metadata=d.get("metadata", {}),
    )


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=True) + "\n"


def dump_task(task: TaskInstance) -> str:
    return dumps(task_to_dict(task))


def load_task(text: str) -> TaskInstance:
    return task_from_dict(json.loads(text))


def save_task(task: TaskInstance, path) -> None:
    Path(path).write_text(dump_task(task), encoding="utf-8")


def read_task(path) -> TaskInstance:
    return load_task(Path(path).read_text(encoding="utf-8"))


def step_to_dict(step: PlanStep) -> dict:
    return {
        "action": str(step.action),
        "actor": step.actor,
        "intention": None if step.intention is None else [step.intention.character, step.intention.goal],
        "executed": step.executed,
    }


def step_from_dict(d: dict) -> PlanStep:
    intention = d.get("intention")
    return PlanStep(
        action=GroundAction.parse(d["action"]),
        actor=d.get("actor"),
        intention=None if intention is None else Intention(*intention),
        executed=bool(d.get("executed", True)),
    )
