"""The region-labelled automaton Reg(H').

Locations pair a base location with a region vector recording, per variable,
the integral region on entry; ``0=`` and ``0+`` both mean "value 0" but also
record whether the variable is still 0 when the next edge fires.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

from .arith import EQ, LE, LT, Polyhedron, constraint, is_empty
from .model import Automaton, Edge, Interval, Location, Rect, add_self_loops
from .semantics import Run, State, TimedStep, run_of

ZERO_EQ, ZERO_PLUS, OPEN, POINT, TAIL = "0=", "0+", "open", "point", "tail"


@dataclass(frozen=True, order=True)
class RegionLabel:
    """One of ``0=``, ``0+``, ``(a-1,a)``, ``[a,a]`` or ``(cmax,oo)``."""

    rank: int  # position in the natural order, used for sorting only
    kind: str
    a: int = 0

    @staticmethod
    def zero_eq() -> RegionLabel:
        return RegionLabel(0, ZERO_EQ)

    @staticmethod
    def zero_plus() -> RegionLabel:
        return RegionLabel(1, ZERO_PLUS)

    @staticmethod
    def open(a: int) -> RegionLabel:
        return RegionLabel(2 * a, OPEN, a)

    @staticmethod
    def point(a: int) -> RegionLabel:
        return RegionLabel(2 * a + 1, POINT, a)

    @staticmethod
    def tail(cmax: int) -> RegionLabel:
        return RegionLabel(2 * cmax + 2, TAIL, cmax)

    @property
    def is_zero(self) -> bool:
        return self.kind in (ZERO_EQ, ZERO_PLUS)

    @property
    def interval(self) -> Interval:
        if self.is_zero:
            return Interval.point(0)
        if self.kind == OPEN:
            return Interval(Fraction(self.a - 1), True, Fraction(self.a), True)
        if self.kind == POINT:
            return Interval.point(self.a)
        return Interval(Fraction(self.a), True, None, False)

    def contains(self, v: Fraction) -> bool:
        return self.interval.contains(v)

    def __str__(self) -> str:
        if self.is_zero:
            return self.kind
        if self.kind == OPEN:
            return f"({self.a - 1},{self.a})"
        if self.kind == POINT:
            return f"[{self.a},{self.a}]"
        return f"({self.a},oo)"


def all_labels(cmax: int) -> list[RegionLabel]:
    """The ``2*cmax+3`` labels over ``cmax``."""
    out = [RegionLabel.zero_eq(), RegionLabel.zero_plus()]
    for a in range(1, cmax + 1):
        out += [RegionLabel.open(a), RegionLabel.point(a)]
    out.append(RegionLabel.tail(cmax))
    return out


def label_of_value(v: Fraction, cmax: int, moving: bool = False) -> RegionLabel:
    """Label of a value; zero becomes ``0+`` iff the variable will move before the next edge."""
    if v < 0:
        raise ValueError("regions are defined for non-negative values")
    if v == 0:
        return RegionLabel.zero_plus() if moving else RegionLabel.zero_eq()
    if v > cmax:
        return RegionLabel.tail(cmax)
    f = math.floor(v)
    return RegionLabel.point(f) if f == v else RegionLabel.open(f + 1)


@dataclass(frozen=True)
class RegionVector:
    items: tuple[tuple[str, RegionLabel], ...]

    @staticmethod
    def of(mapping: Mapping[str, RegionLabel]) -> RegionVector:
        return RegionVector(tuple(sorted(mapping.items())))

    def __getitem__(self, var: str) -> RegionLabel:
        for v, lab in self.items:
            if v == var:
                return lab
        raise KeyError(var)

    @property
    def as_dict(self) -> dict[str, RegionLabel]:
        return dict(self.items)

    def contains(self, val: Mapping[str, Fraction]) -> bool:
        return all(lab.contains(val[v]) for v, lab in self.items)

    def rect(self) -> Rect:
        return Rect.of({v: lab.interval for v, lab in self.items})

    def __str__(self) -> str:
        return "{" + ",".join(f"{v}:{lab}" for v, lab in self.items) + "}"


def region_of(val: Mapping[str, Fraction], moving: Mapping[str, bool], cmax: int) -> RegionVector:
    return RegionVector.of({x: label_of_value(Fraction(v), cmax, moving.get(x, False)) for x, v in val.items()})


def _rate_items(rates: Rect, variables: Iterable[str]) -> tuple[tuple[str, Interval], ...]:
    return tuple((x, rates.get(x)) for x in sorted(variables))


@lru_cache(maxsize=100_000)
def _tsucc(r1: RegionVector, rates: tuple[tuple[str, Interval], ...], r2: RegionVector) -> bool:
    if all(r1[x].interval.intersect(r2[x].interval) is not None for x, _ in rates):
        return True  # zero delay
    # positive delay: per variable a + d = b with t*lo <~ d <~ t*hi
    cs = [constraint({"t": 1}, ">", 0)]
    names = ["t"]
    for x, iv in rates:
        a, b, d = f"a_{x}", f"b_{x}", f"d_{x}"
        names += [a, b, d]
        cs += r1[x].interval.constraints(a) + r2[x].interval.constraints(b)
        cs.append(constraint({b: 1, a: -1, d: -1}, EQ, 0))
        if iv.is_point:
            cs.append(constraint({d: 1, "t": -iv.lo}, EQ, 0))
            continue
        if iv.lo is not None:
            cs.append(constraint({d: 1, "t": -iv.lo}, ">" if iv.lo_strict else ">=", 0))
        if iv.hi is not None:
            cs.append(constraint({d: 1, "t": -iv.hi}, LT if iv.hi_strict else LE, 0))
    return not is_empty(Polyhedron.of(names, cs))


def time_successor(r1: RegionVector, rates: Rect | Mapping[str, Fraction | Interval], r2: RegionVector) -> bool:
    """Is there ``v1 in r1``, ``v2 in r2``, ``t >= 0`` and admissible rates with ``v2 = v1 + t*rate``?"""
    xs = [v for v, _ in r1.items]
    if isinstance(rates, Rect):
        items = _rate_items(rates, xs)
    else:
        items = tuple(
            (x, rates[x] if isinstance(rates[x], Interval) else Interval.point(rates[x])) for x in sorted(xs)
        )
    return _tsucc(r1, items, r2)


def _var_successors(lab: RegionLabel, iv: Interval, cmax: int) -> list[RegionLabel]:
    """Labels a single variable can reach by time elapse from ``lab``."""
    out = []
    for l2 in all_labels(cmax):
        if lab.interval.intersect(l2.interval) is not None:
            out.append(l2)
        elif iv.hi is not None and iv.hi == 0:
            continue
        elif l2.rank > lab.rank:
            out.append(l2)
    return out


class RegionAutomaton:
    """Lazily built Reg(H') over a base automaton (self-loops are added here)."""

    def __init__(self, base: Automaton, with_self_loops: bool = True):
        self.base = add_self_loops(base) if with_self_loops else base
        self.variables = self.base.variables
        self.cmax = int(base.cmax)
        self._locs: dict[str, tuple[str, RegionVector]] = {}
        self._loc_objs: dict[str, Location] = {}
        self._edges: dict[str, Edge] = {}
        self._back: dict[str, Edge] = {}
        self._out: dict[str, tuple[Edge, ...]] = {}
        self._keys: dict[tuple, Edge] = {}
        self._dead: set[str] = set()

    # -- locations
    @staticmethod
    def loc_name(base_loc: str, r: RegionVector) -> str:
        return f"{base_loc}@{r}"

    def register(self, base_loc: str, r: RegionVector) -> str:
        name = self.loc_name(base_loc, r)
        if name not in self._locs:
            self._locs[name] = (base_loc, r)
            loc = self.base.location(base_loc)
            extra = Rect.of({x: Interval.point(0) for x, lab in r.items if lab.kind == ZERO_EQ})
            inv = loc.inv.conj(extra)
            if inv is None:
                # the invariant excludes 0 for a variable labelled 0=: no state lives here
                self._dead.add(name)
                inv = loc.inv
            self._loc_objs[name] = Location(name, loc.rates, inv)
        return name

    def split(self, name: str) -> tuple[str, RegionVector]:
        return self._locs[name]

    def location(self, name: str) -> Location:
        return self._loc_objs[name]

    @property
    def location_names(self) -> list[str]:
        return list(self._locs)

    def init_locations(self, base_locs: Iterable[str] | None = None) -> list[str]:
        """Init x {0=,0+}^X."""
        base_locs = self.base.init if base_locs is None else base_locs
        zs = [RegionLabel.zero_eq(), RegionLabel.zero_plus()]
        out = []
        for l in base_locs:
            for combo in itertools.product(zs, repeat=len(self.variables)):
                name = self.register(l, RegionVector.of(dict(zip(self.variables, combo))))
                if name not in self._dead:
                    out.append(name)
        return out

    def location_bound(self) -> int:
        return len(self.base.locations) * (2 * self.cmax + 3) ** len(self.variables)

    # -- edges
    def edge(self, name: str) -> Edge:
        return self._edges[name]

    def base_edge(self, e: Edge | str) -> Edge:
        return self._back[e if isinstance(e, str) else e.name]

    def edge_for(self, base_edge: Edge, r: RegionVector, r2: RegionVector, r3: RegionVector) -> Edge | None:
        src = self.register(base_edge.src, r)
        self.edges_from(src)
        return self._keys.get((base_edge.name, r, r2, r3))

    def edges_from(self, name: str) -> tuple[Edge, ...]:
        if name in self._out:
            return self._out[name]
        base_loc, r = self._locs[name]
        loc = self.base.location(base_loc)
        xs = self.variables
        rates = loc.rates
        per_var = [_var_successors(r[x], rates.get(x), self.cmax) for x in xs]
        g0 = Rect.of(
            {x: Interval.point(0) if r[x].kind == ZERO_EQ else Interval(Fraction(0), True, None, False)
             for x in xs if r[x].is_zero}
        )
        out: list[Edge] = []
        for e in self.base.edges_from(base_loc):
            for combo in itertools.product(*per_var):
                if any(x in e.reset and lab.kind == ZERO_PLUS for x, lab in zip(xs, combo)):
                    continue  # same guard as the 0= variant
                r2 = RegionVector(tuple(zip(xs, combo)))
                if not time_successor(r, rates, r2):
                    continue
                guard = e.guard.conj(r2.rect())
                guard = guard.conj(g0) if guard is not None else None
                if guard is None:
                    continue
                reset_vars = [x for x in xs if x in e.reset]
                zs = [RegionLabel.zero_eq(), RegionLabel.zero_plus()]
                for choice in itertools.product(zs, repeat=len(reset_vars)):
                    d = r2.as_dict
                    d.update(zip(reset_vars, choice))
                    r3 = RegionVector.of(d)
                    trg = self.register(e.trg, r3)
                    if trg in self._dead:
                        continue
                    ename = f"{e.name}[{name}|{r2}|{trg}]"
                    ne = Edge(ename, name, guard, e.reset, trg, synthetic=e.synthetic)
                    self._edges[ename] = ne
                    self._back[ename] = e
                    self._keys[(e.name, r, r2, r3)] = ne
                    out.append(ne)
        self._out[name] = tuple(out)
        return self._out[name]

    def explore(self, start: Iterable[str] | None = None, limit: int | None = None) -> list[str]:
        """Register every region location reachable in the graph from ``start``."""
        todo = list(self.init_locations() if start is None else start)
        seen = set(todo)
        while todo:
            n = todo.pop()
            for e in self.edges_from(n):
                if e.trg not in seen:
                    seen.add(e.trg)
                    todo.append(e.trg)
                    if limit is not None and len(seen) > limit:
                        raise RuntimeError("region exploration limit exceeded")
        return sorted(seen)

    def full_product(self) -> list[str]:
        labels = all_labels(self.cmax)
        names = []
        for loc in self.base.locations:
            for combo in itertools.product(labels, repeat=len(self.variables)):
                names.append(self.register(loc.name, RegionVector(tuple(zip(self.variables, combo)))))
        return names

    def to_automaton(self, names: Iterable[str], init: Iterable[str] = ()) -> Automaton:
        names = sorted(set(names))
        keep = set(names)
        edges = [e for n in names for e in self.edges_from(n) if e.trg in keep]
        return Automaton(
            f"reg_{self.base.name}",
            self.variables,
            tuple(self.location(n) for n in names),
            tuple(edges),
            tuple(i for i in init if i in keep),
        )


def build_region_automaton(a: Automaton, full: bool = False) -> tuple[RegionAutomaton, Automaton]:
    """Return the lazy builder together with a concrete automaton.

    With ``full`` the whole product ``Loc x Reg`` is materialized; otherwise
    only locations reachable in the graph from ``Init'``.
    """
    ra = RegionAutomaton(a)
    init = ra.init_locations()
    names = ra.full_product() if full else ra.explore(init)
    return ra, ra.to_automaton(names, init)


def lift_run(ra: RegionAutomaton, run: Run) -> Run:
    """Label a run of H' with regions, following the appendix rule."""
    xs = ra.variables
    n = run.n
    vecs = []
    for i, s in enumerate(run.states):
        val = s.v
        nxt = run.steps[i] if i < n else None
        moving = {x: nxt is not None and nxt.delay > 0 and nxt.r[x] != 0 for x in xs}
        vecs.append(region_of(val, moving, ra.cmax))
    first = State(ra.register(run.first.loc, vecs[0]), run.first.val)
    steps = []
    for i, st in enumerate(run.steps, start=1):
        base = st.edge
        cross = run.crossing(i)
        r2 = {x: vecs[i][x] if x not in base.reset else label_of_value(cross[x], ra.cmax) for x in xs}
        e = ra.edge_for(base, vecs[i - 1], RegionVector.of(r2), vecs[i])
        if e is None:
            raise AssertionError(f"lift_run: no region edge for step {i} ({base.name})")
        steps.append(TimedStep(st.delay, st.rates, e))
    return run_of(ra, first, steps)


def project_run(ra: RegionAutomaton, run: Run) -> Run:
    states = tuple(State(ra.split(s.loc)[0], s.val) for s in run.states)
    steps = tuple(TimedStep(st.delay, st.rates, ra.base_edge(st.edge)) for st in run.steps)
    return Run(states, steps)


def region_consistency_violations(ra: RegionAutomaton, run: Run) -> list[str]:
    """The three clauses of region consistency, checked exactly."""
    out = []
    for i, s in enumerate(run.states):
        _, r = ra.split(s.loc)
        if not r.contains(s.v):
            out.append(f"state {i}: valuation outside {r}")
        if i == run.n:
            continue
        cross = run.crossing(i + 1)
        for x, lab in r.items:
            if lab.kind == ZERO_EQ and cross[x] != 0:
                out.append(f"state {i}: {x} labelled 0= but {cross[x]} at next edge")
            if lab.kind == ZERO_PLUS and not cross[x] > 0:
                out.append(f"state {i}: {x} labelled 0+ but {cross[x]} at next edge")
    return out
