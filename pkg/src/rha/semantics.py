"""Concrete semantics: time steps, edge steps, run replay and effects."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Protocol, Sequence

from .arith import fmt_rational
from .model import Edge, Location

Valuation = Mapping[str, Fraction]


class AutomatonLike(Protocol):
    variables: tuple[str, ...]

    def location(self, name: str) -> Location: ...

    def edge(self, name: str) -> Edge: ...


@dataclass(frozen=True)
class State:
    loc: str
    val: tuple[tuple[str, Fraction], ...]

    @staticmethod
    def of(loc: str, val: Mapping[str, Fraction | int | str]) -> State:
        return State(loc, tuple(sorted((k, Fraction(v)) for k, v in val.items())))

    @property
    def v(self) -> dict[str, Fraction]:
        return dict(self.val)

    def __getitem__(self, var: str) -> Fraction:
        for k, q in self.val:
            if k == var:
                return q
        raise KeyError(var)

    def __str__(self) -> str:
        inner = ", ".join(f"{k}={fmt_rational(q)}" for k, q in self.val)
        return f"({self.loc}, {inner})"


@dataclass(frozen=True)
class TimedStep:
    delay: Fraction
    rates: tuple[tuple[str, Fraction], ...]
    edge: Edge

    @staticmethod
    def of(delay, rates: Mapping[str, Fraction | int], edge: Edge) -> TimedStep:
        return TimedStep(Fraction(delay), tuple(sorted((k, Fraction(r)) for k, r in rates.items())), edge)

    @property
    def r(self) -> dict[str, Fraction]:
        return dict(self.rates)


TimedPath = tuple[TimedStep, ...]


class ReplayError(Exception):
    """A step of a timed path could not be replayed."""

    def __init__(self, index: int, reason: str):
        self.index = index
        self.reason = reason
        super().__init__(f"step {index}: {reason}")


class StepError(ValueError):
    pass


@dataclass(frozen=True)
class Run:
    states: tuple[State, ...]
    steps: TimedPath

    def __post_init__(self):
        assert len(self.states) == len(self.steps) + 1

    @property
    def first(self) -> State:
        return self.states[0]

    @property
    def last(self) -> State:
        return self.states[-1]

    @property
    def duration(self) -> Fraction:
        return sum((s.delay for s in self.steps), Fraction(0))

    @property
    def length(self) -> int:
        return len(self.steps) + 1

    @property
    def n(self) -> int:
        return len(self.steps)

    def slice(self, k: int, l: int) -> Run:
        """The sub-run from state ``k`` to state ``l`` (both inclusive)."""
        return Run(self.states[k:l + 1], self.steps[k:l])

    def concat(self, other: Run) -> Run:
        if self.last != other.first:
            raise ValueError("runs do not connect")
        return Run(self.states + other.states[1:], self.steps + other.steps)

    def crossing(self, i: int) -> dict[str, Fraction]:
        """The valuation just before the ``i``-th edge (1-based) fires."""
        s, st = self.states[i - 1].v, self.steps[i - 1]
        r = st.r
        return {x: s[x] + st.delay * r[x] for x in s}


def time_step(a: AutomatonLike, s: State, delay, rates: Mapping[str, Fraction]) -> State:
    delay = Fraction(delay)
    if delay < 0:
        raise StepError(f"negative delay {delay}")
    loc = a.location(s.loc)
    for x in a.variables:
        if not loc.rate(x).contains(rates[x]):
            raise StepError(f"rate {fmt_rational(rates[x])} for {x} outside {loc.rate(x)} in {s.loc}")
    val = s.v
    bad = loc.inv.violated(val)
    if bad:
        raise StepError(f"invariant {bad} of {s.loc} violated at delay start")
    nxt = {x: val[x] + delay * Fraction(rates[x]) for x in a.variables}
    bad = loc.inv.violated(nxt)
    if bad:
        raise StepError(f"invariant {bad} of {s.loc} violated after delay {fmt_rational(delay)}")
    return State.of(s.loc, nxt)


def edge_step(a: AutomatonLike, s: State, e: Edge) -> State:
    if e.src != s.loc:
        raise StepError(f"edge {e.name} leaves {e.src}, not {s.loc}")
    val = s.v
    bad = e.guard.violated(val)
    if bad:
        raise StepError(f"guard {bad} of edge {e.name} fails")
    nxt = {x: Fraction(0) if x in e.reset else val[x] for x in a.variables}
    bad = a.location(e.trg).inv.violated(nxt)
    if bad:
        raise StepError(f"invariant {bad} of {e.trg} violated after edge {e.name}")
    return State.of(e.trg, nxt)


def run_of(a: AutomatonLike, s0: State, path: Sequence[TimedStep]) -> Run:
    """Replay ``path`` from ``s0``; raises :class:`ReplayError` at the first failing step."""
    states = [s0]
    bad = a.location(s0.loc).inv.violated(s0.v)
    if bad:
        raise ReplayError(0, f"initial state violates invariant {bad}")
    s = s0
    for k, st in enumerate(path, start=1):
        try:
            s = edge_step(a, time_step(a, s, st.delay, st.r), st.edge)
        except StepError as exc:
            raise ReplayError(k, str(exc)) from None
        states.append(s)
    return Run(tuple(states), tuple(path))


def try_run_of(a: AutomatonLike, s0: State, path: Sequence[TimedStep]) -> Run | None:
    try:
        return run_of(a, s0, path)
    except ReplayError:
        return None


def effect(path: Iterable[TimedStep], variables: Iterable[str] | None = None) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {x: Fraction(0) for x in variables} if variables is not None else {}
    for st in path:
        for x, r in st.rates:
            out[x] = out.get(x, Fraction(0)) + r * st.delay
    return out


def duration(path: Iterable[TimedStep]) -> Fraction:
    return sum((st.delay for st in path), Fraction(0))


# ------------------------------------------------------------------ JSON traces

def _q(v: Fraction) -> str:
    return fmt_rational(v)


def run_to_json(run: Run) -> dict:
    return {
        "states": [{"loc": s.loc, "val": {k: _q(v) for k, v in s.val}} for s in run.states],
        "steps": [
            {"delay": _q(st.delay), "rates": {k: _q(v) for k, v in st.rates}, "edge": st.edge.name}
            for st in run.steps
        ],
        "duration": _q(run.duration),
    }


def run_from_json(a: AutomatonLike, obj: Mapping) -> Run:
    """Rebuild and replay a serialized run against ``a``."""
    s0 = obj["states"][0]
    first = State.of(s0["loc"], {k: Fraction(v) for k, v in s0["val"].items()})
    path = [
        TimedStep.of(Fraction(st["delay"]), {k: Fraction(v) for k, v in st["rates"].items()}, a.edge(st["edge"]))
        for st in obj["steps"]
    ]
    return run_of(a, first, path)


def dump_run(run: Run) -> str:
    return json.dumps(run_to_json(run), indent=2, sort_keys=True)
