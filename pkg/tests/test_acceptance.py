"""End-to-end acceptance checks. Each test records one PASS/FAIL line."""

import random
import time

import pytest
from conftest import hand_plan, random_plan, steps

from narrplan.domains import (
    DOMAIN_IDS, AladdinParams, SecretAgentParams, WesternParams, canonical, generate,
)
from narrplan.domains.batch import batch_bytes, gen_batch
from narrplan.grounding import GroundedDomain, lit_true
from narrplan.harness import (
    CorruptingAgent, OracleAgent, ReplayAgent, RunConfig, aggregate, run_calibrated, run_many,
)
from narrplan.model import PlanStep
from narrplan.oracle import SearchBudget, Solved, shortest_plan_length, solve
from narrplan.prompts import parse_plan, render_plan, render_step
from narrplan.simulator import StepFailure, applicable, apply, grounded_for, simulate
from narrplan.validators import INIT, detect_conflicts, validate

SMALL_SCALE = {
    "secret_agent": ([SecretAgentParams(n=n) for n in (3, 4, 5)], 17),
    "aladdin": ([AladdinParams(layers=l, width=w) for l in (0, 1) for w in (1, 2)], 13),
    "western": ([WesternParams(m=5, n_adventurers=n) for n in (2, 3)], 25),
}

STRUCTURAL_CODES = {
    "causal_failure",
    "missing_intention_annotation",
    "unjustified_intentional_action",
    "missing_motivation",
    "broken_frame_path",
    "frame_goal_unmet",
}


@pytest.fixture(scope="module")
def small_batches():
    """Verified batches at small scale with the oracle plan of every task."""
    out = {}
    for dom, (params, count) in SMALL_SCALE.items():
        result = gen_batch(params, count, SearchBudget(time_limit=60.0), master_seed=2024)
        solved = []
        for task in result.tasks:
            outcome = solve(task)
            solved.append((task, outcome))
        out[dom] = (result, solved)
    return out


def test_c01_canonical_lengths(criterion):
    expected = {"secret_agent": 7, "aladdin": 12, "western": 6}
    found, slow = {}, {}
    for dom in DOMAIN_IDS:
        start = time.perf_counter()
        found[dom] = shortest_plan_length(canonical(dom))
        slow[dom] = time.perf_counter() - start
    ok = found == expected and all(t < 60 for t in slow.values())
    times = ", ".join(f"{d}={found[d]} ({slow[d]:.2f}s)" for d in DOMAIN_IDS)
    criterion(1, ok, f"canonical lengths {times}")


def test_c02_oracle_validator_closure(criterion, small_batches):
    failures, total = [], 0
    for dom, (result, solved) in small_batches.items():
        for task, outcome in solved:
            total += 1
            if not isinstance(outcome, Solved) or not validate(task, outcome.plan).accepted:
                failures.append(task.task_id)
    counts = {d: len(s) for d, (_, s) in small_batches.items()}
    ok = not failures and all(n >= 50 for n in counts.values())
    criterion(2, ok, f"{total} oracle plans validated, instances per domain {counts}, failures {failures[:3]}")


def _spread(items, k):
    if len(items) <= k:
        return list(items)
    return [items[round(i * (len(items) - 1) / (k - 1))] for i in range(k)]


def test_c03_mutation_rejection(criterion, small_batches):
    false_accepts, checked, plans = [], 0, 0
    for dom, (_, solved) in small_batches.items():
        for task, outcome in _spread(solved, 20):
            plans += 1
            report = validate(task, outcome.plan)
            # A nonexecuted step changes no state, so it establishes nothing;
            # hypothetical links are excluded from the producer set.
            producers = sorted({l.producer for l in report.links if l.producer != INIT and not l.hypothetical})
            for k in producers:
                mutated = outcome.plan[:k] + outcome.plan[k + 1:]
                checked += 1
                codes = set(validate(task, mutated).codes())
                if not codes & STRUCTURAL_CODES:
                    false_accepts.append((task.task_id, k, sorted(codes)))
    criterion(3, plans == 60 and not false_accepts,
              f"{checked} deletions over {plans} plans, {len(false_accepts)} without a causal/frame violation")


def _brute_force_conflicts(task, plan):
    """Every (a0, a2, p, a1, c1, c2) meeting the conflict conditions, by exhaustive enumeration."""
    g = grounded_for(task)
    traj = simulate(task, plan)
    s = traj.states
    report = validate(task, plan)
    frame_of = {m: f.character for f in report.frames for m in f.members}
    compiled = [g.compile(st.action) for st in plan]
    n = len(plan)
    found = set()
    for a2 in range(n):
        for p in compiled[a2].pre.world:
            for a1 in [INIT] + list(range(a2)):
                if a1 == INIT:
                    establishes = lit_true(p, s[0])
                else:
                    establishes = plan[a1].executed and not lit_true(p, s[a1]) and lit_true(p, s[a1 + 1])
                if not establishes:
                    continue
                later = any(
                    plan[j].executed and not lit_true(p, s[j]) and lit_true(p, s[j + 1])
                    for j in range(a1 + 1, a2)
                )
                if later:
                    continue
                for a0 in range(a1 + 1, a2):
                    if p[1] not in compiled[a0].writes:
                        continue
                    if lit_true(p, compiled[a0].post(s[a0])):
                        continue
                    if a2 not in frame_of or a0 not in frame_of:
                        continue
                    if plan[a2].executed and plan[a0].executed:
                        continue
                    found.add((a0, a2, p, a1, frame_of[a2], frame_of[a0]))
    return found


def test_c04_conflict_fidelity(criterion, oracle_plan):
    task, plan = hand_plan("western")
    detected = {(c.threat, c.consumer, c.literal, c.producer, c.c1, c.c2) for c in detect_conflicts(task, plan)}
    brute = _brute_force_conflicts(task, plan)
    otask, oplan = oracle_plan("western")
    odetected = {(c.threat, c.consumer, c.literal, c.producer, c.c1, c.c2) for c in detect_conflicts(otask, oplan)}
    obrute = _brute_force_conflicts(otask, oplan)
    executed_only = tuple(s for s in plan if s.executed)
    zero = detect_conflicts(task, executed_only)
    rng = random.Random(4)
    nonzero_executed = 0
    for _ in range(300):
        rp = tuple(PlanStep(s.action, s.actor, s.intention, True) for s in random_plan(task, rng, 8))
        if not isinstance(simulate(task, rp), StepFailure) and detect_conflicts(task, rp):
            nonzero_executed += 1
    ok = detected == brute and len(detected) == 1 and odetected == obrute and not zero and nonzero_executed == 0
    criterion(4, ok, f"canonical plan {len(detected)} detected / {len(brute)} brute force, "
                     f"oracle plan {len(odetected)}/{len(obrute)}, fully executed plans with conflicts: "
                     f"{len(zero) + nonzero_executed}")


def _tasks_for_random_plans():
    return {
        "secret_agent": [canonical("secret_agent"), generate(SecretAgentParams(n=5, seed=3))],
        "aladdin": [canonical("aladdin"), generate(AladdinParams(layers=1, width=2, seed=1))],
        "western": [canonical("western"), generate(WesternParams(m=5, n_adventurers=3, seed=2))],
    }


def test_c05_nonexecuted_semantics(criterion):
    rng = random.Random(5)
    bad = []
    per_domain = {}
    for dom, tasks in _tasks_for_random_plans().items():
        per_domain[dom] = 0
        for k in range(1000):
            task = tasks[k % len(tasks)]
            plan = random_plan(task, rng)
            full = simulate(task, plan)
            kept = [i for i, s in enumerate(plan) if s.executed]
            only = simulate(task, [plan[i] for i in kept])
            per_domain[dom] += 1
            if isinstance(full, StepFailure):
                if not plan[full.index].executed:
                    bad.append((dom, k, "failure on nonexecuted step"))
                elif not isinstance(only, StepFailure) or kept[only.index] != full.index:
                    bad.append((dom, k, "failure differs without nonexecuted steps"))
                continue
            if isinstance(only, StepFailure):
                bad.append((dom, k, "executed-only plan fails"))
                continue
            expected = [only.states[0]]
            for i, s in enumerate(plan):
                expected.append(only.states[kept.index(i) + 1] if s.executed else expected[-1])
            if list(full.states) != expected:
                bad.append((dom, k, "trajectory changed by nonexecuted steps"))
    criterion(5, not bad and all(v == 1000 for v in per_domain.values()),
              f"random plans {per_domain}, violations {bad[:3]}")


def test_c06_generator_verification(criterion, small_batches):
    unsolved = [t.task_id for _, (_, solved) in small_batches.items() for t, o in solved if not isinstance(o, Solved)]
    retained = sum(len(s) for _, (_, s) in small_batches.items())
    params = [SecretAgentParams(n=4), AladdinParams(layers=1, width=1), WesternParams(m=5, n_adventurers=2)]
    a = batch_bytes(gen_batch(params, 3, master_seed=99))
    b = batch_bytes(gen_batch(params, 3, master_seed=99))
    c = batch_bytes(gen_batch(params, 3, master_seed=100))
    ok = not unsolved and a == b and a != c
    criterion(6, ok, f"{retained - len(unsolved)}/{retained} retained instances re-solved, "
                     f"identical bytes under fixed seed: {a == b}")


def test_c07_external_calibration(criterion, oracle_plan):
    task, plan = oracle_plan("secret_agent")
    lines = ["move(agent, cell_0_0, cell_1_1)"] + [render_step(s) for s in plan]
    rec = run_calibrated(task, ReplayAgent(lines), RunConfig(prompt_mode="calibrated"))
    events = rec.feedback_events
    message_ok = len(events) == 1 and "Destination isn't connected to starting location" in events[0]["content"]
    ok = message_ok and rec.outcome == "success" and rec.reverify()
    criterion(7, ok, f"3x3 calibrated run: {len(events)} feedback event(s), outcome {rec.outcome}")


def test_c08_harness_closure(criterion):
    tasks = [canonical(d) for d in DOMAIN_IDS]
    config = RunConfig(attempts=30, parallel=4)
    good = run_many(tasks, OracleAgent(), config)
    bad = run_many([canonical("secret_agent")], CorruptingAgent(OracleAgent(), "drop-step"), config)
    table = aggregate(good + bad)
    text = table.render()
    cells = {(r.domain, r.agent): r.cell for r in table.rows}
    ok = (
        all(cells.get((d, "oracle")) == "30/30" for d in DOMAIN_IDS)
        and cells.get(("secret_agent", "corrupt:drop-step")) == "0/30"
        and "30/30" in text and "0/30" in text
    )
    criterion(8, ok, f"cells {sorted(cells.items())}")


def test_c09_round_trip(criterion, small_batches, oracle_plan):
    pairs = [oracle_plan(d) for d in DOMAIN_IDS]
    pairs += [(t, o.plan) for _, (_, solved) in small_batches.items() for t, o in solved]
    mismatches = 0
    for task, plan in pairs:
        back = parse_plan(render_plan(plan), grounded_for(task), task.mode)
        mismatches += back != tuple(plan)
    criterion(9, mismatches == 0, f"{len(pairs)} oracle plans, {mismatches} mismatches")


def test_c10_performance(criterion):
    start = time.perf_counter()
    task = generate(SecretAgentParams(n=16, seed=1))
    grounded = GroundedDomain(task.domain)
    cands = grounded.candidates()
    ground_time = time.perf_counter() - start
    rng = random.Random(10)
    state = grounded.state(task.initial)
    plan = []
    for _ in range(200):
        action = rng.choice([a for a in cands if applicable(state, a)[0]])
        state = apply(state, action)
        plan.append(steps(task, [str(action)])[0])
    start = time.perf_counter()
    report = validate(task, plan)
    validate_time = time.perf_counter() - start
    ok = ground_time < 1.0 and validate_time < 1.0 and report.codes() in ([], ["goal_unmet"])
    criterion(10, ok, f"16x16 grounding {ground_time:.3f}s, 200-step validate {validate_time:.3f}s")
