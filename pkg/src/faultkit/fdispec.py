"""Alarm specifications and their temporal/epistemic building blocks.

An alarm specification pairs a diagnosis condition (a boolean state
expression) with a delay discipline:

* exact(n)  -- the alarm must fire exactly n steps after the condition;
* bound(n)  -- within n steps;
* finite    -- eventually.

Each delay kind has a matching past-time formula (condition held exactly n
steps ago / within the last n steps / at some point), a bounded per-run
memory sufficient to evaluate it (a value window, a saturating counter, a
latched bit), and a certainty reading under synchronous perfect-recall
observation: the condition is *known* at a point iff it holds on every run
of the model producing the same observation sequence up to that point.
Knowledge is computed by propagating belief states, i.e. sets of
(state, memory) pairs consistent with the observations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

from .boolexpr import Expr, as_expr
from .errors import ExpressionError, ModelFormatError, TraceError
from .model import SystemModel, Trace

GLOBAL = "global"
TRACE = "trace"


# -- delays ------------------------------------------------------------------

@dataclass(frozen=True)
class ExactDelay:
    n: int

    def __str__(self):
        return f"exact({self.n})"


@dataclass(frozen=True)
class BoundedDelay:
    n: int

    def __str__(self):
        return f"bound({self.n})"


@dataclass(frozen=True)
class FiniteDelay:
    def __str__(self):
        return "finite"


Delay = ExactDelay | BoundedDelay | FiniteDelay


@dataclass(frozen=True)
class AlarmSpec:
    name: str
    beta: Expr
    delay: Delay
    diag: str = GLOBAL
    maximal: bool = False

    def __post_init__(self):
        if isinstance(self.delay, (ExactDelay, BoundedDelay)) and self.delay.n < 1:
            raise ValueError(f"alarm {self.name!r}: delay bound must be >= 1")
        if self.diag not in (GLOBAL, TRACE):
            raise ValueError(f"alarm {self.name!r}: diag must be 'global' or 'trace'")


def parse_specs(text: str) -> list[AlarmSpec]:
    """Parse the JSON alarm-spec format: a list of
    {alarm, beta, delay: {kind, n}, diag, maximal} objects."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ModelFormatError(f"syntax error: {err.msg}", err.lineno, err.colno) from None
    if not isinstance(doc, list):
        raise ModelFormatError("spec file must be a list of alarm objects")
    specs = []
    names = set()
    for item in doc:
        if not isinstance(item, dict):
            raise ModelFormatError(f"alarm entry must be an object, got {item!r}")
        try:
            name = item["alarm"]
            beta = as_expr(item["beta"])
            delay_doc = item["delay"]
            kind = delay_doc["kind"]
        except KeyError as err:
            raise ModelFormatError(f"alarm entry missing key {err}") from None
        if kind == "exact":
            delay: Delay = ExactDelay(int(delay_doc["n"]))
        elif kind == "bound":
            delay = BoundedDelay(int(delay_doc["n"]))
        elif kind == "finite":
            delay = FiniteDelay()
        else:
            raise ModelFormatError(f"unknown delay kind {kind!r}")
        if name in names:
            raise ModelFormatError(f"duplicate alarm name {name!r}")
        names.add(name)
        specs.append(AlarmSpec(name, beta, delay,
                               item.get("diag", GLOBAL), bool(item.get("maximal", False))))
    return specs


def load_specs(path) -> list[AlarmSpec]:
    with open(path, encoding="utf-8") as fh:
        return parse_specs(fh.read())


# -- past formulas -----------------------------------------------------------

@dataclass(frozen=True)
class PastShift:
    """Condition held exactly n steps ago (false when there is no history)."""
    beta: Expr
    n: int

    def __str__(self):
        return f"Y^{self.n} ({self.beta})"


@dataclass(frozen=True)
class OnceWithin:
    """Condition held at some point within the last n steps (inclusive)."""
    beta: Expr
    n: int

    def __str__(self):
        return f"O<={self.n} ({self.beta})"


@dataclass(frozen=True)
class Once:
    """Condition held at some point so far."""
    beta: Expr

    def __str__(self):
        return f"O ({self.beta})"


PastFormula = PastShift | OnceWithin | Once


def past_formula(delay: Delay, beta: Expr) -> PastFormula:
    """The past-time reading of a delay kind: the formula an alarm asserts
    about the monitored condition at the moment it fires."""
    if isinstance(delay, ExactDelay):
        return PastShift(beta, delay.n)
    if isinstance(delay, BoundedDelay):
        return OnceWithin(beta, delay.n)
    return Once(beta)


def _delay_of(phi: PastFormula) -> Delay:
    if isinstance(phi, PastShift):
        return ExactDelay(phi.n)
    if isinstance(phi, OnceWithin):
        return BoundedDelay(phi.n)
    return FiniteDelay()


def eval_past(m: SystemModel, tr: Trace, phi: PastFormula, t: int) -> bool:
    """Evaluate a past formula on a trace at time t by direct lookback."""
    if not (0 <= t < len(tr)):
        raise IndexError(f"time index {t} out of range for trace of length {len(tr)}")
    if isinstance(phi, PastShift):
        return t >= phi.n and m.holds(phi.beta, tr[t - phi.n])
    if isinstance(phi, OnceWithin):
        lo = max(0, t - phi.n)
        return any(m.holds(phi.beta, tr[u]) for u in range(lo, t + 1))
    if isinstance(phi, Once):
        return any(m.holds(phi.beta, tr[u]) for u in range(t + 1))
    raise TypeError(f"not a past formula: {phi!r}")


def timed_verdict(m: SystemModel, tr: Trace, phi: PastFormula) -> tuple[bool, ...]:
    """The formula's truth value at every time point of the trace."""
    return tuple(eval_past(m, tr, phi, t) for t in range(len(tr)))


# -- bounded per-run memory ---------------------------------------------------

def memory_init(delay: Delay, beta_now: bool):
    if isinstance(delay, ExactDelay):
        return (beta_now,)
    if isinstance(delay, BoundedDelay):
        return 0 if beta_now else delay.n + 1
    return beta_now


def memory_update(delay: Delay, mem, beta_now: bool):
    if isinstance(delay, ExactDelay):
        window = mem + (beta_now,)
        return window[-(delay.n + 1):]
    if isinstance(delay, BoundedDelay):
        return 0 if beta_now else min(mem + 1, delay.n + 1)
    return mem or beta_now


def memory_satisfies(delay: Delay, mem) -> bool:
    """Whether the past formula of the delay kind holds, given the memory."""
    if isinstance(delay, ExactDelay):
        return len(mem) == delay.n + 1 and mem[0]
    if isinstance(delay, BoundedDelay):
        return mem <= delay.n
    return bool(mem)


# -- belief propagation -------------------------------------------------------

# A tracker is a (delay, beta) pair; a belief member is (state id, memories)
# with one memory value per tracker.  All members of a belief share the
# observation of the step that produced them.

Tracker = tuple[Delay, Expr]
BeliefMember = tuple[str, tuple]
Belief = frozenset


def trackers_for(specs: Iterable[AlarmSpec]) -> tuple[Tracker, ...]:
    return tuple((s.delay, s.beta) for s in specs)


def _init_member(m: SystemModel, sid: str, trackers: tuple[Tracker, ...]) -> BeliefMember:
    val = m.states[sid]
    return sid, tuple(memory_init(d, b.evaluate(val)) for d, b in trackers)


def _step_member(m: SystemModel, member: BeliefMember, nxt: str,
                 trackers: tuple[Tracker, ...]) -> BeliefMember:
    val = m.states[nxt]
    _, mems = member
    return nxt, tuple(memory_update(d, mem, b.evaluate(val))
                      for (d, b), mem in zip(trackers, mems))


def initial_beliefs(m: SystemModel, trackers: tuple[Tracker, ...]) -> dict[tuple, Belief]:
    """Initial states grouped by observation; one belief per observation."""
    groups: dict[tuple, set] = {}
    for sid in m.initial:
        groups.setdefault(m.observation(sid), set()).add(_init_member(m, sid, trackers))
    return {obs: frozenset(members) for obs, members in groups.items()}


def belief_step(m: SystemModel, belief: Belief, obs: tuple,
                trackers: tuple[Tracker, ...]) -> Belief:
    """Successor belief under the next observation; may be empty."""
    out = set()
    for member in belief:
        sid = member[0]
        for nxt in m.successors(sid):
            if m.observation(nxt) == obs:
                out.add(_step_member(m, member, nxt, trackers))
    return frozenset(out)


def belief_certain(belief: Belief, index: int, trackers: tuple[Tracker, ...]) -> bool:
    """The tracked condition is known iff it holds in every belief member."""
    delay = trackers[index][0]
    return all(memory_satisfies(delay, mems[index]) for _, mems in belief)


def belief_chain(m: SystemModel, obs_seq: list[tuple],
                 trackers: tuple[Tracker, ...]) -> list[Belief]:
    """Beliefs after each prefix of an observation sequence."""
    entries = initial_beliefs(m, trackers)
    if obs_seq[0] not in entries:
        raise TraceError("no initial state matches the first observation")
    chain = [entries[obs_seq[0]]]
    for i, obs in enumerate(obs_seq[1:], start=1):
        nxt = belief_step(m, chain[-1], obs, trackers)
        if not nxt:
            raise TraceError(f"observation at step {i} is not producible")
        chain.append(nxt)
    return chain


def eval_knowledge(m: SystemModel, tr: Trace, t: int, phi: PastFormula) -> bool:
    """True iff phi holds at time t on every run of m producing the same
    observations as tr on steps 0..t (synchronous perfect recall)."""
    m.require_trace(tr)
    if not (0 <= t < len(tr)):
        raise IndexError(f"time index {t} out of range for trace of length {len(tr)}")
    delay = _delay_of(phi)
    trackers = ((delay, as_expr(phi.beta)),)
    obs_seq = [m.observation(s) for s in tr.steps[: t + 1]]
    chain = belief_chain(m, obs_seq, trackers)
    return belief_certain(chain[-1], 0, trackers)


def knowledge_counterexample(m: SystemModel, tr: Trace, t: int,
                             phi: PastFormula) -> Trace | None:
    """The lexicographically least obs-equivalent run on which phi fails at
    t, or None when phi is known (no such run exists)."""
    delay = _delay_of(phi)
    trackers = ((delay, as_expr(phi.beta)),)
    obs_seq = [m.observation(s) for s in tr.steps[: t + 1]]
    chain = belief_chain(m, obs_seq, trackers)
    bad = sorted(member for member in chain[-1]
                 if not memory_satisfies(delay, member[1][0]))
    if not bad:
        return None
    return _reconstruct(m, chain, trackers, bad[0])


def _reconstruct(m: SystemModel, chain: list[Belief],
                 trackers: tuple[Tracker, ...], target: BeliefMember) -> Trace:
    """Walk a belief chain backwards to a concrete witness run ending in the
    target member, choosing lexicographically least predecessors."""
    states = [target[0]]
    current = target
    for i in range(len(chain) - 1, 0, -1):
        preds = sorted(
            member for member in chain[i - 1]
            if (member[0], current[0]) in m.transitions
            and _step_member(m, member, current[0], trackers) == current)
        current = preds[0]
        states.append(current[0])
    states.reverse()
    return Trace(tuple(states))


# -- pattern instantiation ----------------------------------------------------

@dataclass(frozen=True)
class Cond:
    """A state condition evaluated at the current time point."""
    expr: Expr

    def __str__(self):
        return f"({self.expr})"


@dataclass(frozen=True)
class AlarmRef:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class KnowThat:
    body: PastFormula

    def __str__(self):
        return f"K {self.body}"


@dataclass(frozen=True)
class NextShift:
    body: object
    n: int

    def __str__(self):
        return f"X^{self.n} {self.body}"


@dataclass(frozen=True)
class WithinFuture:
    body: object
    n: int

    def __str__(self):
        return f"F<={self.n} {self.body}"


@dataclass(frozen=True)
class Eventually:
    body: object

    def __str__(self):
        return f"F {self.body}"


@dataclass(frozen=True)
class Implies:
    left: object
    right: object

    def __str__(self):
        return f"({self.left} -> {self.right})"


@dataclass(frozen=True)
class Always:
    body: object

    def __str__(self):
        return f"G {self.body}"


@dataclass(frozen=True)
class PatternFormula:
    """The instantiated requirement for one alarm: a correctness conjunct,
    a completeness conjunct, and (for maximal specifications) a maximality
    conjunct."""

    correctness: Always
    completeness: Always
    maximality: Always | None

    def conjuncts(self) -> dict[str, Always]:
        out = {"correctness": self.correctness, "completeness": self.completeness}
        if self.maximality is not None:
            out["maximality"] = self.maximality
        return out

    def __str__(self):
        return " & ".join(str(c) for c in self.conjuncts().values())


def instantiate_pattern(spec: AlarmSpec) -> PatternFormula:
    """Build the requirement formula for one alarm specification.

    Correctness: the alarm implies its past condition.  Completeness: the
    condition implies the alarm fires within its delay; for trace-local
    specifications the obligation is guarded by achievability of certainty
    within the same delay.  Maximality: certainty forces the alarm."""
    A = AlarmRef(spec.name)
    beta = Cond(spec.beta)
    past = past_formula(spec.delay, spec.beta)
    correctness = Always(Implies(A, past))
    if isinstance(spec.delay, ExactDelay):
        raise_within = NextShift(A, spec.delay.n)
        know_within = NextShift(KnowThat(past), spec.delay.n)
    elif isinstance(spec.delay, BoundedDelay):
        raise_within = WithinFuture(A, spec.delay.n)
        know_within = WithinFuture(KnowThat(past), spec.delay.n)
    else:
        raise_within = Eventually(A)
        know_within = Eventually(KnowThat(past))
    obligation = Implies(beta, raise_within)
    if spec.diag == TRACE:
        completeness = Always(Implies(Implies(beta, know_within), obligation))
    else:
        completeness = Always(obligation)
    maximality = Always(Implies(KnowThat(past), A)) if spec.maximal else None
    return PatternFormula(correctness, completeness, maximality)
