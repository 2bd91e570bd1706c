import functools

import pytest

from narrplan.domains import DOMAIN_IDS, canonical
from narrplan.model import make_step
from narrplan.oracle import Solved, solve


def steps(task, rows):
    """Build a plan from ``(action, intention, executed)`` rows; short rows are allowed."""
    out = []
    for row in rows:
        if isinstance(row, str):
            row = (row,)
        action, intention, executed = tuple(row) + (None, True)[len(row) - 1:]
        out.append(make_step(task.domain, action, intention, executed))
    return tuple(out)


SECRET_AGENT_PLAN = [
    "move(agent,cell_0_0,cell_0_1)",
    "pickup(agent,gun,cell_0_1)",
    "move(agent,cell_0_1,cell_0_2)",
    "pickup(agent,key,cell_0_2)",
    "move(agent,cell_0_2,cell_1_2)",
    "enter_lair(agent,cell_1_2,cell_2_2)",
    "kill(agent,mastermind,cell_2_2)",
]

LAMP = ("aladdin", "in_possession_of(jafar,lamp)")
WED = ("jafar", "married(jafar,jasmine)")
ALADDIN_PLAN = [
    ("order(jafar,aladdin,in_possession_of(jafar,lamp))",),
    ("move(aladdin,castle,mountain)", LAMP),
    ("slay(aladdin,dragon,mountain)", LAMP),
    ("take(aladdin,lamp,dragon,mountain)", LAMP),
    ("move(aladdin,mountain,castle)", LAMP),
    ("give(aladdin,lamp,jafar,castle)", LAMP),
    ("summon(jafar,spirit,lamp,castle)", WED),
    ("command(jafar,spirit,jasmine)", WED),
    ("cast_spell(spirit,jasmine,jafar,castle)", ("spirit", "loves(jasmine,jafar)")),
    ("order(jafar,aladdin,dead(spirit))",),
    ("marry(jafar,jasmine,castle)", WED),
    ("slay(aladdin,spirit,castle)", ("aladdin", "dead(spirit)")),
]

HEAL = ("parent", "healed(child)")
WESTERN_PLAN = [
    ("snakebite(child,parent)",),
    ("walk(parent,ranch,store)", HEAL),
    ("steal(parent,medicine,owner,store)", HEAL),
    ("take_back(owner,medicine,parent,store)", ("owner", "in_possession_of(owner,medicine)"), False),
    ("walk(parent,store,ranch)", HEAL),
    ("heal(parent,child,ranch)", HEAL),
]

HAND_PLANS = {"secret_agent": SECRET_AGENT_PLAN, "aladdin": ALADDIN_PLAN, "western": WESTERN_PLAN}


def hand_plan(domain_id):
    task = canonical(domain_id)
    return task, steps(task, HAND_PLANS[domain_id])


@functools.lru_cache(maxsize=None)
def _oracle_plan(domain_id):
    task = canonical(domain_id)
    outcome = solve(task)
    assert isinstance(outcome, Solved)
    return task, outcome.plan


@pytest.fixture(params=DOMAIN_IDS)
def domain_id(request):
    return request.param


@pytest.fixture
def oracle_plan():
    return _oracle_plan


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


def random_plan(task, rng, max_len=12, p_applicable=0.7, p_nonexecuted=0.3):
    """Random plan mixing applicable and arbitrary steps with random flags and intentions.

    Returns ``PlanStep`` objects that are structurally well formed; most
    executed steps are applicable so plans reach beyond their first step.
    """
    from narrplan.model import PlanStep
    from narrplan.simulator import EffectBoundError, applicable, apply, grounded_for

    g = grounded_for(task)
    cands = g.candidates()
    goals = task.domain.ground_goals()
    state = g.state(task.initial)
    plan = []
    for _ in range(rng.randint(1, max_len)):
        executed = rng.random() >= p_nonexecuted
        if rng.random() < p_applicable:
            ok = [a for a in cands if applicable(state, a)[0]]
            action = rng.choice(ok) if ok else rng.choice(cands)
        else:
            action = rng.choice(cands)
        ca = g.compile(action)
        intention = None
        if ca.intentional:
            from narrplan.model import Intention
            intention = Intention(ca.actor, rng.choice(goals))
        plan.append(PlanStep(action, ca.actor, intention, executed))
        if executed and applicable(state, action)[0]:
            try:
                state = apply(state, action)
            except EffectBoundError:
                pass
    return tuple(plan)
