"""Bounded exhaustive planner used as instance verifier and test oracle.

Search is A* on plan length over ground actions in lexicographic order,
guided by an admissible and consistent relaxation bound, so the first plan
found is minimal. In intentional and conflict modes
the search node carries, besides the world state and held intentions, exactly
the bookkeeping the validator needs to judge any completion of the prefix:

* for each open commitment frame, one signature per member: the literals whose
  current producer is reachable from that member by causal links, plus the
  hypothetical literals of nonexecuted frame members it reaches;
* in conflict mode, per literal, how many executed / nonexecuted frame steps
  threatened it since its latest establishment (capped at the required
  conflict count), and the number of conflicts found so far.

Two prefixes with equal nodes therefore have the same valid completions,
which makes duplicate detection sound. Every goal node is still confirmed by
:func:`narrplan.validators.validate` before it is returned.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass

from .grounding import lit_true
from .model import CAUSAL, CONFLICT, Plan, PlanStep, TaskInstance
from .simulator import grounded_for
from .validators import validate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchBudget:
    max_depth: int = 24
    max_nodes: int = 5_000_000
    time_limit: float = 60.0

    def __post_init__(self):
        if self.max_depth <= 0 or self.max_nodes <= 0 or self.time_limit <= 0:
            raise ValueError("search budgets must be positive")


@dataclass(frozen=True)
class Solved:
    plan: Plan
    depth: int
    nodes: int = 0


@dataclass(frozen=True)
class Unsolvable:
    depth: int
    exhaustive: bool
    nodes: int = 0


@dataclass(frozen=True)
class BudgetExceeded:
    reason: str
    nodes: int = 0


SolveOutcome = Solved | Unsolvable | BudgetExceeded


class BudgetExceededError(RuntimeError):
    pass


def _ikey(intent):
    return ("i", intent.character, intent.goal)


class _Relaxed:
    """Unit-cost h_max over the delete relaxation.

    Facts are world literal keys plus held intentions; an intentional action
    needs its actor to hold some intention. Integer deltas are taken to reach
    every comparison on the fluent, which keeps the estimate admissible.
    """

    def __init__(self, g, actions, goal_keys):
        facts: dict = {}

        def fid(f):
            i = facts.get(f)
            if i is None:
                i = facts[f] = len(facts)
            return i

        by_idx: dict[int, set] = {}
        for ca in actions:
            for key in ca.pre.world:
                by_idx.setdefault(key[1], set()).add(key)
        for key in goal_keys:
            by_idx.setdefault(key[1], set()).add(key)
        self.pre, self.add = [], []
        for ca in actions:
            pre = [fid(k) for k in ca.pre.world] + [fid(("i", i.character, i.goal)) for i in ca.pre.intends]
            if ca.intentional:
                pre.append(fid(("any", ca.actor)))
            add = []
            for idx, kind, val in ca.effects:
                for key in by_idx.get(idx, ()):
                    if kind == "delta" or lit_true(key, _Point(idx, val)):
                        add.append(fid(key))
            for i in ca.intend_effects:
                add.append(fid(("i", i.character, i.goal)))
                add.append(fid(("any", i.character)))
            self.pre.append(tuple(dict.fromkeys(pre)))
            self.add.append(tuple(dict.fromkeys(add)))
        self.facts = facts
        self.world_facts = [(f, i) for f, i in facts.items() if f[0] in ("b", "c")]
        users = [[] for _ in facts]
        for a, pre in enumerate(self.pre):
            for f in pre:
                users[f].append(a)
        self.users = users
        self.fid = fid

    def estimate(self, values, held, goal_ids) -> float:
        reached = set()
        for f, i in self.world_facts:
            if lit_true(f, values):
                reached.add(i)
        facts = self.facts
        for it in held:
            for f in (("i", it.character, it.goal), ("any", it.character)):
                i = facts.get(f)
                if i is not None:
                    reached.add(i)
        missing = [f for f in goal_ids if f not in reached]
        if not missing:
            return 0
        need = [len(p) for p in self.pre]
        layer = list(reached)
        for f in layer:
            for a in self.users[f]:
                need[a] -= 1
        fired = set()
        ready = [a for a, n in enumerate(need) if n == 0]
        depth = 0
        goals = set(missing)
        while ready:
            depth += 1
            new = []
            for a in ready:
                fired.add(a)
                for f in self.add[a]:
                    if f not in reached:
                        reached.add(f)
                        new.append(f)
            goals.difference_update(new)
            if not goals:
                return depth
            ready = []
            for f in new:
                for a in self.users[f]:
                    need[a] -= 1
                    if need[a] == 0 and a not in fired:
                        ready.append(a)
        return INF


class _Point:
    """Stand-in valuation where only one fluent index matters."""

    __slots__ = ("idx", "val")

    def __init__(self, idx, val):
        self.idx, self.val = idx, val

    def __getitem__(self, i):
        return self.val


INF = float("inf")


class _Search:
    # Nonexecuted steps that neither close a frame, record a threat nor add a
    # conflict are dominated by omitting them; prune_idle=False keeps them.
    prune_idle = True

    def __init__(self, task: TaskInstance):
        self.task = task
        self.g = g = grounded_for(task)
        self.mode = task.mode
        self.need = task.goal.min_conflicts
        self.goal = g.compile_condition(task.goal.condition)
        self.actions = [g.compile(a) for a in g.candidates()]
        self.actions = [ca for ca in self.actions if ca.pre.statics_ok]
        interest: dict[int, set] = {}
        for ca in self.actions:
            for key in ca.pre.world:
                interest.setdefault(key[1], set()).add(key)
        self.interest = {k: tuple(sorted(v)) for k, v in interest.items()}
        self._goal_conds = {}
        goal_keys = list(self.goal.world)
        if self.mode != CAUSAL:
            for term in task.domain.ground_goals():
                goal_keys.extend(g.goal(term).world)
        self.relaxed = _Relaxed(g, self.actions, goal_keys)
        self.goal_ids = tuple(self.relaxed.facts[k] for k in self.goal.world)
        self._h_cache: dict = {}

    def h(self, node) -> float:
        """Admissible, consistent lower bound on the remaining plan length."""
        if self.mode == CAUSAL:
            key = node
            values, held, goal_ids = node, (), self.goal_ids
        else:
            values, held, frames, _, found = node
            extra = ()
            if self.mode != CONFLICT and frames:
                extra = tuple(sorted({self.relaxed.facts[k] for it, _ in frames for k in self.goal_of(it).world}))
            key = (values, held, extra)
            goal_ids = self.goal_ids + extra
        est = self._h_cache.get(key)
        if est is None:
            est = self.relaxed.estimate(values, held, goal_ids)
            if len(self._h_cache) > 2_000_000:
                self._h_cache.clear()
            self._h_cache[key] = est
        if self.mode == CONFLICT and est == 0 and (node[2] or node[4] < self.need):
            return 1
        return est

    def goal_of(self, intent):
        cond = self._goal_conds.get(intent.goal)
        if cond is None:
            cond = self._goal_conds[intent.goal] = self.g.goal(intent.goal)
        return cond

    def root(self):
        values = self.g.state(self.task.initial).values
        if self.mode == CAUSAL:
            return values
        held = frozenset(i for i in self.task.initial_intentions if not self.goal_of(i).holds(values))
        return (values, held, frozenset(), frozenset(), 0)

    def is_goal(self, node) -> bool:
        if self.mode == CAUSAL:
            return self.goal.holds(node)
        values, _, frames, _, found = node
        return not frames and found >= self.need and self.goal.holds(values)

    # ---------------------------------------------------------- successors

    def successors(self, node):
        if self.mode == CAUSAL:
            yield from self._causal_successors(node)
            return
        values, held = node[0], node[1]
        conflict = self.mode == CONFLICT
        by_char: dict[str, list] = {}
        for i in sorted(held):
            by_char.setdefault(i.character, []).append(i)
        for ca in self.actions:
            if ca.intentional:
                anns = by_char.get(ca.actor)
                if not anns:
                    continue
                exec_ok = ca.pre.holds(values) and all(i in held for i in ca.pre.intends)
                if not exec_ok and not conflict:
                    continue
                for ann in anns:
                    if exec_ok:
                        child = self._transition(node, ca, ann, True)
                        if child is not None:
                            yield PlanStep(ca.action, ca.actor, ann, True), child
                    if conflict:
                        child = self._transition(node, ca, ann, False)
                        if child is not None:
                            yield PlanStep(ca.action, ca.actor, ann, False), child
            elif ca.pre.holds(values) and all(i in held for i in ca.pre.intends):
                child = self._transition(node, ca, None, True)
                if child is not None:
                    yield PlanStep(ca.action, ca.actor, None, True), child

    def _in_bounds(self, ca, post) -> bool:
        g = self.g
        for idx, _, _ in ca.effects:
            up = g.upper[idx]
            if post[idx] < 0 or (up is not None and post[idx] > up):
                return False
        return True

    def _causal_successors(self, values):
        for ca in self.actions:
            if ca.pre.holds(values):
                post = ca.post(values)
                if self._in_bounds(ca, post):
                    yield PlanStep(ca.action, ca.actor, None, True), post

    def _transition(self, node, ca, ann, ex):
        values, held, frames, threats, found = node
        post = ca.post(values)
        if ex and not self._in_bounds(ca, post):
            return None
        after = post if ex else values
        interest = self.interest
        world = ca.pre.world
        consumed = set(world)
        for i in ca.pre.intends:
            if i in held:
                consumed.add(_ikey(i))
        member = ann if ca.intentional else None
        if member is not None:
            consumed.add(_ikey(member))

        established = set()
        hyp = set()
        for idx in ca.writes:
            for key in interest.get(idx, ()):
                if not lit_true(key, values):
                    if ex and lit_true(key, after):
                        established.add(key)
                    elif not ex and member is not None and lit_true(key, post):
                        hyp.add((member, key))

        new_held = set(held)
        added = []
        if ex:
            for i in ca.intend_effects:
                if i not in new_held:
                    new_held.add(i)
                    added.append(i)
        removed = [i for i in new_held if self.goal_of(i).holds(after)]
        for i in removed:
            new_held.discard(i)
        closed_by_member = False
        if member is not None and member in removed and ex:
            closed_by_member = True
        if not ex and member is not None and member in new_held and self.goal_of(member).holds(post):
            removed.append(member)
            new_held.discard(member)
            closed_by_member = True
        added_keys = {_ikey(i) for i in added if i in new_held}
        removed_keys = {_ikey(i) for i in removed}
        removed_set = set(removed)

        gained = established | added_keys
        new_frames = {}
        for k, sigs in frames:
            all_reached = True
            out = set()
            for L, HL in sigs:
                reached = not L.isdisjoint(consumed) or (
                    k == member and any((k, key) in HL for key in world)
                )
                if reached:
                    L2 = L | gained
                    HL2 = HL | hyp if hyp else HL
                else:
                    all_reached = False
                    L2 = L - established if established else L
                    HL2 = HL
                out.add((L2, HL2))
            if k in removed_set:
                if not (k == member and closed_by_member and all_reached):
                    return None
                continue
            new_frames[k] = out
        if member is not None and not closed_by_member:
            sig = (frozenset(gained), frozenset(hyp))
            new_frames.setdefault(member, set()).add(sig)
        # Executed consumers need true literals, so outside conflict mode a
        # false literal can never again be consumed from the same producer.
        prune_false = self.mode != CONFLICT
        frozen = []
        for k, sigs in new_frames.items():
            fs = set()
            for L, HL in sigs:
                if removed_keys:
                    L = L - removed_keys
                    HL = frozenset(x for x in HL if x[0] not in removed_set)
                if prune_false:
                    L = frozenset(x for x in L if x[0] == "i" or lit_true(x, after))
                if not L and not HL:
                    return None
                fs.add((frozenset(L), frozenset(HL)))
            frozen.append((k, _minimal(fs)))

        useful = ex or closed_by_member
        if self.mode == CONFLICT:
            cap = self.need
            t = dict(threats)
            before = found
            if member is not None:
                for key in world:
                    if lit_true(key, values) or key in t:
                        ne, nn = t.get(key, (0, 0))
                        found += nn if ex else ne + nn
                found = min(found, cap)
            for idx in ca.writes:
                for key in interest.get(idx, ()):
                    if (lit_true(key, values) or key in t) and not lit_true(key, post):
                        ne, nn = t.get(key, (0, 0))
                        if member is not None:
                            if ex:
                                ne = min(ne + 1, cap)
                            else:
                                nn = min(nn + 1, cap)
                                useful = True
                        if ex or member is not None:
                            t[key] = (ne, nn)
            for key in established:
                t.pop(key, None)
            if found > before:
                useful = True
            threats = frozenset(t.items())
        if not useful and self.prune_idle:
            return None
        return (after, frozenset(new_held), frozenset(frozen), threats, found)


def _minimal(sigs) -> frozenset:
    """Drop signatures that contain another one of the same frame.

    If member A's signature is a subset of B's, any step reached from A is
    reached from B as well, and the inclusion persists under updates, so B
    imposes no extra obligation.
    """
    if len(sigs) < 2:
        return frozenset(sigs)
    ordered = sorted(sigs, key=lambda s: len(s[0]) + len(s[1]))
    keep = []
    for L, HL in ordered:
        if not any(L2 <= L and HL2 <= HL for L2, HL2 in keep):
            keep.append((L, HL))
    return frozenset(keep)


def solve(task: TaskInstance, budget: SearchBudget | None = None) -> SolveOutcome:
    """Find a minimal-length valid plan for ``task`` within ``budget``.

    A* on plan length with a consistent relaxation heuristic; ties are broken
    towards deeper nodes, then by generation order, so results are
    deterministic.
    """
    budget = budget or SearchBudget()
    search = _Search(task)
    start = time.monotonic()
    root = search.root()
    h0 = search.h(root)
    if h0 == INF:
        return Unsolvable(budget.max_depth, True, 1)
    best = {root: 0}
    parents = {root: None}
    heap = [(h0, 0, 0, root)]
    counter = 1
    cut = False
    nodes = 1
    while heap:
        f, neg_g, _, node = heapq.heappop(heap)
        g = -neg_g
        if best.get(node, INF) < g:
            continue
        if search.is_goal(node):
            plan = _reconstruct(parents, node)
            if validate(task, plan).accepted:
                return Solved(plan, g, nodes)
            log.warning("goal node rejected by validator: %s", [str(s.action) for s in plan])
        if g >= budget.max_depth:
            cut = True
            continue
        for step, child in search.successors(node):
            g2 = g + 1
            if best.get(child, INF) <= g2:
                continue
            h = search.h(child)
            if h == INF:
                continue
            if g2 + h > budget.max_depth:
                cut = True
                continue
            best[child] = g2
            parents[child] = (node, step)
            nodes += 1
            if nodes > budget.max_nodes:
                return BudgetExceeded("node limit", nodes)
            if nodes % 1024 == 0 and time.monotonic() - start > budget.time_limit:
                return BudgetExceeded("time limit", nodes)
            heapq.heappush(heap, (g2 + h, -g2, counter, child))
            counter += 1
    return Unsolvable(budget.max_depth, not cut, nodes)


def _reconstruct(parents, node) -> Plan:
    steps = []
    while parents[node] is not None:
        node, step = parents[node]
        steps.append(step)
    return tuple(reversed(steps))


def shortest_plan_length(task: TaskInstance, budget: SearchBudget | None = None) -> int | None:
    outcome = solve(task, budget)
    if isinstance(outcome, BudgetExceeded):
        raise BudgetExceededError(outcome.reason)
    if isinstance(outcome, Solved):
        return outcome.depth
    return None


def verify_solvable(task: TaskInstance, budget: SearchBudget | None = None) -> bool:
    """True iff the oracle solves ``task``; budget exhaustion counts as unverified."""
    return isinstance(solve(task, budget), Solved)
