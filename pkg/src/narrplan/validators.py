"""Plan validation: causal soundness, commitment frames and conflicts.

Semantics implemented here (step ``i`` runs in state ``s_i``):

* Causal links. For a conjunct ``p`` of step ``i`` the producer is the latest
  *establishment* of ``p`` before ``i``: an executed step ``j`` with ``p``
  false in ``s_j`` and true in ``s_{j+1}``, or ``INIT`` (-1) when ``p`` held
  initially and was never re-established. Executed consumers thus get the
  usual persistence link; nonexecuted consumers get the link they would have
  relied on.
* Intentions. ``H_i`` is the set held before step ``i``. Executed steps add
  their motivating effects; an intention is dropped as soon as its goal holds,
  or when a nonexecuted step of its holder, annotated with it, would achieve
  it.
* Frames. One frame per maximal window of continuous holding of ``(c, G)``
  that contains steps of ``c`` annotated with ``(c, G)``. The last member must
  lead to ``G`` and every other member needs a path of causal links to it.
  Paths may run through any plan step and also use hypothetical links from the
  frame's own nonexecuted members.
* Conflicts. A link ``a1 -p-> a2`` is threatened by ``a0`` strictly between
  them when ``a0`` writes ``p``'s fluent and ``p`` is false right after ``a0``
  (hypothetically for a nonexecuted ``a0``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .grounding import GroundedDomain, lit_true
from .model import CAUSAL, CONFLICT, DomainError, Intention, TaskInstance
from .simulator import StepFailure, Trajectory, grounded_for, simulate

INIT = -1

CAUSAL_FAILURE = "causal_failure"
GOAL_UNMET = "goal_unmet"
MISSING_ANNOTATION = "missing_intention_annotation"
UNJUSTIFIED = "unjustified_intentional_action"
MISSING_MOTIVATION = "missing_motivation"
BROKEN_PATH = "broken_frame_path"
FRAME_GOAL_UNMET = "frame_goal_unmet"
INSUFFICIENT_CONFLICTS = "insufficient_conflicts"
ILLEGAL_NONEXECUTED = "illegal_nonexecuted"
STRUCTURE = "structure"


class CausalFailureError(Exception):
    def __init__(self, failure: StepFailure):
        super().__init__(failure.message)
        self.failure = failure


@dataclass(frozen=True, order=True)
class CausalLink:
    consumer: int
    producer: int
    literal: tuple
    hypothetical: bool = False


@dataclass(frozen=True)
class CommitmentFrame:
    character: str
    goal: str
    members: tuple[int, ...]
    motivation: int
    achieving: int


@dataclass(frozen=True, order=True)
class ConflictTuple:
    threat: int
    consumer: int
    literal_text: str
    producer: int
    c1: str
    c2: str
    literal: tuple = field(compare=False)


@dataclass(frozen=True)
class Violation:
    code: str
    index: int | None
    detail: str


@dataclass
class ValidationReport:
    mode: str
    violations: list[Violation]
    links: list[CausalLink] = field(default_factory=list)
    frames: list[CommitmentFrame] = field(default_factory=list)
    conflicts: list[ConflictTuple] = field(default_factory=list)
    grounded: GroundedDomain | None = field(default=None, repr=False, compare=False)

    @property
    def accepted(self) -> bool:
        return not self.violations

    @property
    def verdict(self) -> str:
        return "accepted" if self.accepted else "rejected"

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def to_dict(self) -> dict:
        g = self.grounded

        def lit(key):
            return g.literal_text(key) if g is not None else repr(key)

        def idx(i):
            return "INIT" if i == INIT else i

        return {
            "verdict": self.verdict,
            "mode": self.mode,
            "violations": [{"code": v.code, "index": v.index, "detail": v.detail} for v in self.violations],
            "links": [
                {"producer": idx(l.producer), "consumer": l.consumer, "literal": lit(l.literal),
                 "hypothetical": l.hypothetical}
                for l in self.links
            ],
            "frames": [
                {"character": f.character, "goal": f.goal, "members": list(f.members),
                 "motivation": idx(f.motivation), "achieving": f.achieving}
                for f in self.frames
            ],
            "conflicts": [
                {"c1": c.c1, "c2": c.c2, "producer": idx(c.producer), "consumer": c.consumer,
                 "literal": c.literal_text, "threat": c.threat}
                for c in self.conflicts
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


# ------------------------------------------------------------------ analysis


class Analysis:
    """Trajectory-level facts shared by all checks for one (task, plan)."""

    def __init__(self, task: TaskInstance, plan, traj: Trajectory):
        self.task = task
        self.plan = tuple(plan)
        self.g = grounded_for(task)
        self.traj = traj
        self.states = traj.states
        self.compiled = [self.g.compile(s.action) for s in self.plan]
        self._held = None

    def goal_holds(self, goal: str, values) -> bool:
        return self.g.goal(goal).holds(values)

    def hyp_post(self, i: int):
        return self.compiled[i].post(self.states[i])

    # -------------------------------------------------------- intentions

    def held(self) -> list[dict[Intention, int]]:
        """``H_0..H_n``: held intentions mapped to the step that added them."""
        if self._held is not None:
            return self._held
        s0 = self.states[0]
        cur = {}
        for intent in self.task.initial_intentions:
            if not self.goal_holds(intent.goal, s0):
                cur.setdefault(intent, INIT)
        trace = [cur]
        for i, step in enumerate(self.plan):
            ca = self.compiled[i]
            nxt = dict(cur)
            if step.executed:
                for intent in ca.intend_effects:
                    nxt.setdefault(intent, i)
            after = self.states[i + 1]
            for intent in list(nxt):
                if self.goal_holds(intent.goal, after):
                    del nxt[intent]
            if (
                not step.executed
                and ca.intentional
                and step.intention is not None
                and step.intention.character == ca.actor
                and step.intention in nxt
                and self.goal_holds(step.intention.goal, self.hyp_post(i))
            ):
                del nxt[step.intention]
            trace.append(nxt)
            cur = nxt
        self._held = trace
        return trace

    # -------------------------------------------------------- links

    def world_links(self) -> list[CausalLink]:
        states = self.states
        interest: dict[int, set] = {}
        for ca in self.compiled:
            for key in ca.pre.world:
                interest.setdefault(key[1], set()).add(key)
        est = {}
        for keys in interest.values():
            for key in keys:
                if lit_true(key, states[0]):
                    est[key] = INIT
        links = []
        for i, step in enumerate(self.plan):
            ca = self.compiled[i]
            for key in ca.pre.world:
                if key in est:
                    links.append(CausalLink(i, est[key], key))
            if step.executed:
                before, after = states[i], states[i + 1]
                for idx in ca.writes:
                    for key in interest.get(idx, ()):
                        if not lit_true(key, before) and lit_true(key, after):
                            est[key] = i
        return links

    def intention_links(self) -> list[CausalLink]:
        held = self.held()
        links = []
        for i, step in enumerate(self.plan):
            ca = self.compiled[i]
            needs = list(ca.pre.intends)
            if ca.intentional and step.intention is not None:
                needs.append(step.intention)
            for intent in dict.fromkeys(needs):
                if intent in held[i]:
                    links.append(CausalLink(i, held[i][intent], ("i", intent.character, intent.goal)))
        return links

    def hypothetical_links(self, frames) -> list[CausalLink]:
        links = []
        for f in frames:
            for pos, x in enumerate(f.members):
                if self.plan[x].executed:
                    continue
                before, hyp = self.states[x], self.hyp_post(x)
                for m in f.members[pos + 1:]:
                    for key in self.compiled[m].pre.world:
                        if not lit_true(key, before) and lit_true(key, hyp):
                            links.append(CausalLink(m, x, key, True))
        return links

    # -------------------------------------------------------- frames

    def frames(self) -> tuple[list[CommitmentFrame], list[tuple[Intention, tuple[int, ...]]]]:
        """Frames with members, plus windows whose last member misses the goal."""
        held = self.held()
        n = len(self.plan)
        keys = []
        for h in held:
            for k in h:
                if k not in keys:
                    keys.append(k)
        frames, bad = [], []
        for key in keys:
            i = 0
            while i <= n:
                if key not in held[i]:
                    i += 1
                    continue
                start = i
                while i <= n and key in held[i]:
                    i += 1
                members = tuple(
                    j for j in range(start, min(i, n))
                    if self.compiled[j].intentional
                    and self.plan[j].intention == key
                    and self.compiled[j].actor == key.character
                )
                if not members:
                    continue
                last = members[-1]
                post = self.states[last + 1] if self.plan[last].executed else self.hyp_post(last)
                if self.goal_holds(key.goal, post):
                    frames.append(CommitmentFrame(key.character, key.goal, members, held[start][key], last))
                else:
                    bad.append((key, members))
        frames.sort(key=lambda f: (f.members[0], f.character, f.goal))
        return frames, bad


def _reachable(edges: dict[int, set[int]], src: int, dst: int) -> bool:
    stack, seen = [src], {src}
    while stack:
        u = stack.pop()
        if u == dst:
            return True
        for v in edges.get(u, ()):
            if v not in seen and v <= dst:
                seen.add(v)
                stack.append(v)
    return False


def _structure(task, plan) -> list[Violation]:
    g = grounded_for(task)
    out = []
    for i, step in enumerate(plan):
        try:
            ca = g.compile(step.action)
        except DomainError as exc:
            out.append(Violation(STRUCTURE, i, str(exc)))
            continue
        if step.actor is not None and step.actor != ca.actor:
            out.append(Violation(STRUCTURE, i, f"actor {step.actor} does not perform {step.action}"))
        if step.intention is not None:
            try:
                g.goal(step.intention.goal)
            except (DomainError, ValueError) as exc:
                out.append(Violation(STRUCTURE, i, f"bad intention goal: {exc}"))
    return out


def _prepare(task, plan) -> tuple[Analysis | None, list[Violation]]:
    violations = _structure(task, plan)
    if violations:
        return None, violations
    traj = simulate(task, plan)
    if isinstance(traj, StepFailure):
        return None, [Violation(CAUSAL_FAILURE, traj.index, traj.message)]
    return Analysis(task, plan, traj), []


def _analysis_or_raise(task, plan) -> Analysis:
    plan = tuple(plan)
    traj = simulate(task, plan)
    if isinstance(traj, StepFailure):
        raise CausalFailureError(traj)
    return Analysis(task, plan, traj)


# ------------------------------------------------------------------ public API


def causal_links(task: TaskInstance, plan) -> list[CausalLink]:
    """World-literal causal links of a causally sound plan, sorted by consumer."""
    return sorted(_analysis_or_raise(task, plan).world_links())


def intention_trace(task: TaskInstance, plan) -> list[frozenset[Intention]]:
    """Held intentions before each step (``n + 1`` entries)."""
    return [frozenset(h) for h in _analysis_or_raise(task, plan).held()]


def _goal_violation(task, analysis) -> list[Violation]:
    cond = analysis.g.compile_condition(task.goal.condition)
    if cond.holds(analysis.states[-1]):
        return []
    return [Violation(GOAL_UNMET, None, "final state does not satisfy the narrative goal")]


def check_causal(task: TaskInstance, plan) -> ValidationReport:
    analysis, violations = _prepare(task, plan)
    g = grounded_for(task)
    if analysis is None:
        return ValidationReport(CAUSAL, violations, grounded=g)
    violations = _goal_violation(task, analysis)
    return ValidationReport(CAUSAL, violations, sorted(analysis.world_links()), grounded=g)


def _intentional(task, plan, mode) -> tuple[ValidationReport, Analysis | None]:
    analysis, violations = _prepare(task, plan)
    g = grounded_for(task)
    if analysis is None:
        return ValidationReport(mode, violations, grounded=g), None
    violations = list(_goal_violation(task, analysis))
    held = analysis.held()
    ever = set()
    for i, step in enumerate(analysis.plan):
        ever.update(held[i])
        ca = analysis.compiled[i]
        if step.executed:
            for intent in ca.pre.intends:
                if intent not in held[i]:
                    code = UNJUSTIFIED if intent in ever else MISSING_MOTIVATION
                    violations.append(Violation(code, i, f"{step.action} requires {intent}"))
        if not ca.intentional:
            continue
        intent = step.intention
        if intent is None:
            violations.append(Violation(MISSING_ANNOTATION, i, f"{step.action} has no intention"))
        elif intent.character != ca.actor:
            violations.append(Violation(UNJUSTIFIED, i, f"{ca.actor} cannot act on {intent}"))
        elif intent not in held[i]:
            code = UNJUSTIFIED if intent in ever else MISSING_MOTIVATION
            violations.append(Violation(code, i, f"{intent} is not held at step {i}"))

    frames, bad = analysis.frames()
    for key, members in bad:
        violations.append(Violation(FRAME_GOAL_UNMET, members[-1], f"last step of frame {key} does not lead to its goal"))
    world = analysis.world_links()
    links = world + analysis.intention_links() + analysis.hypothetical_links(frames)
    edges: dict[int, set[int]] = {}
    for l in links:
        if l.producer != INIT:
            edges.setdefault(l.producer, set()).add(l.consumer)
    for f in frames:
        for m in f.members[:-1]:
            if not _reachable(edges, m, f.achieving):
                violations.append(Violation(
                    BROKEN_PATH, m,
                    f"no causal path from step {m} to step {f.achieving} in frame of intends({f.character}, {f.goal})",
                ))
    violations.sort(key=lambda v: (-1 if v.index is None else v.index, v.code))
    report = ValidationReport(mode, violations, sorted(links), frames, grounded=g)
    return report, analysis


def check_intentional(task: TaskInstance, plan) -> ValidationReport:
    return _intentional(task, plan, task.mode if task.mode != CAUSAL else "intentional")[0]


def detect_threats(links, task: TaskInstance, plan) -> list[tuple[CausalLink, int]]:
    """All ``(link, a0)`` with ``a0`` strictly between producer and consumer negating the literal."""
    g = grounded_for(task)
    traj = simulate(task, plan)
    if isinstance(traj, StepFailure):
        raise CausalFailureError(traj)
    compiled = [g.compile(s.action) for s in plan]
    negates = {}
    out = []
    for link in links:
        key = link.literal
        if key[0] == "i":
            continue
        for a0 in range(link.producer + 1, link.consumer):
            if key[1] not in compiled[a0].writes:
                continue
            k = (a0, key)
            if k not in negates:
                negates[k] = not lit_true(key, compiled[a0].post(traj.states[a0]))
            if negates[k]:
                out.append((link, a0))
    return out


def _conflicts(task, plan, report, analysis, include_initial=True) -> list[ConflictTuple]:
    member = {}
    for f in report.frames:
        for m in f.members:
            member[m] = f.character
    world = [l for l in report.links if not l.hypothetical and l.literal[0] != "i"]
    if not include_initial:
        world = [l for l in world if l.producer != INIT]
    out = set()
    for link, a0 in detect_threats(world, task, plan):
        a2 = link.consumer
        if a2 not in member or a0 not in member:
            continue
        if plan[a2].executed and plan[a0].executed:
            continue
        out.add(ConflictTuple(
            a0, a2, analysis.g.literal_text(link.literal), link.producer,
            member[a2], member[a0], link.literal,
        ))
    return sorted(out)


def detect_conflicts(task: TaskInstance, plan, include_initial: bool = True) -> list[ConflictTuple]:
    """Conflict four-tuples, sorted by (threat index, consumer index, literal)."""
    report, analysis = _intentional(task, plan, CONFLICT)
    if analysis is None:
        return []
    return _conflicts(task, tuple(plan), report, analysis, include_initial)


def validate(task: TaskInstance, plan) -> ValidationReport:
    """Dispatch on the task mode."""
    plan = tuple(plan)
    pre = []
    if task.mode != CONFLICT:
        pre = [Violation(ILLEGAL_NONEXECUTED, i, "nonexecuted steps are only allowed in conflict mode")
               for i, s in enumerate(plan) if not s.executed]
    if task.mode == CAUSAL:
        report = check_causal(task, plan)
    else:
        report, analysis = _intentional(task, plan, task.mode)
        if task.mode == CONFLICT and analysis is not None:
            report.conflicts = _conflicts(task, plan, report, analysis)
            if len(report.conflicts) < task.goal.min_conflicts:
                report.violations.append(Violation(
                    INSUFFICIENT_CONFLICTS, None,
                    f"{len(report.conflicts)} conflicts, {task.goal.min_conflicts} required",
                ))
    if pre:
        report.violations = pre + report.violations
    return report
