"""Symbolic post/pre operators and time-bounded reach/co-reach fixpoints."""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .arith import (
    EQ,
    LinConstraint,
    Polyhedron,
    PolyUnion,
    canonicalize,
    constraint,
    eliminate,
    includes,
    is_empty,
)
from .contraction import bound_F
from .model import Automaton, Edge, Interval, Location

CLOCK = "_t"


class FixpointError(RuntimeError):
    """The iteration cap was reached before stabilization."""

    def __init__(self, message: str, trace: "FixpointTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class SymRegion:
    """Location -> union of polyhedra over the automaton variables plus the clock."""

    variables: tuple[str, ...]
    items: tuple[tuple[str, PolyUnion], ...]

    @staticmethod
    def of(a: Automaton, mapping: Mapping[str, PolyUnion | Polyhedron | Iterable[Polyhedron]] = ()) -> SymRegion:
        vs = region_vars(a)
        mapping = dict(mapping)
        for loc in mapping:
            if not a.has_location(loc):
                raise KeyError(f"unknown location {loc}")
        items = []
        for loc in a.location_names:
            v = mapping.get(loc)
            if v is None:
                u = PolyUnion.empty(vs)
            elif isinstance(v, PolyUnion):
                u = v
            elif isinstance(v, Polyhedron):
                u = PolyUnion.of(vs, [v.extend(vs)])
            else:
                u = PolyUnion.of(vs, [p.extend(vs) for p in v])
            items.append((loc, u))
        return SymRegion(vs, tuple(items))

    def __getitem__(self, loc: str) -> PolyUnion:
        for k, u in self.items:
            if k == loc:
                return u
        raise KeyError(loc)

    @property
    def locations(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.items)

    def map(self, fn) -> SymRegion:
        return SymRegion(self.variables, tuple((k, fn(k, u)) for k, u in self.items))

    def union(self, other: SymRegion) -> SymRegion:
        return self.map(lambda k, u: canonicalize(u.union(other[k])))

    def intersect(self, p: Polyhedron) -> SymRegion:
        q = p.extend(self.variables)
        return self.map(lambda k, u: canonicalize(u.intersect(q)))

    def is_empty(self) -> bool:
        return all(u.is_empty() for _, u in self.items)

    def size(self) -> int:
        return sum(len(u) for _, u in self.items)

    def contains(self, loc: str, point: Mapping[str, Fraction]) -> bool:
        return self[loc].contains(point)

    def to_json(self) -> dict:
        return {
            "variables": list(self.variables),
            "regions": {k: u.to_json() for k, u in self.items},
            "polyhedra": [{"loc": k, "constraints": str(d)} for k, u in self.items for d in u.disjuncts],
        }

    def __str__(self) -> str:
        return "\n".join(f"{k}: {u}" for k, u in self.items)


def region_vars(a: Automaton) -> tuple[str, ...]:
    if CLOCK in a.variables:
        raise ValueError(f"variable name {CLOCK} is reserved for the time-measuring clock")
    return tuple(sorted((*a.variables, CLOCK)))


def included(big: SymRegion, small: SymRegion) -> bool:
    return all(includes(big[k], small[k]) for k in big.locations)


def equivalent(a: SymRegion, b: SymRegion) -> bool:
    return included(a, b) and included(b, a)


def project(u: PolyUnion, keep: Iterable[str]) -> PolyUnion:
    keep = set(keep)
    drop = [v for v in u.variables if v not in keep]
    return canonicalize(PolyUnion.of(sorted(keep), [eliminate(d, drop) for d in u.disjuncts]))


# ------------------------------------------------------------------ operators

def _with(p: Polyhedron, cs: Iterable[LinConstraint]) -> Polyhedron:
    return Polyhedron.of(p.variables, [*p.constraints, *cs])


def _forget(p: Polyhedron, vs: Iterable[str]) -> Polyhedron:
    """Existentially quantify ``vs`` but keep them as (free) dimensions."""
    return Polyhedron.of(p.variables, eliminate(p, vs).constraints)


def _rate_bounds(lhs: Mapping[str, int], d: str, iv: Interval, strict_ok: bool) -> list[LinConstraint]:
    """``d*lo <~ lhs <~ d*hi``; strict endpoints only when strict_ok (positive delay)."""
    if iv.is_point:
        return [constraint({**lhs, d: -iv.lo}, EQ, 0)]
    out = []
    if iv.lo is not None:
        rel = ">" if iv.lo_strict and strict_ok else ">="
        out.append(constraint({**lhs, d: -iv.lo}, rel, 0))
    if iv.hi is not None:
        rel = "<" if iv.hi_strict and strict_ok else "<="
        out.append(constraint({**lhs, d: -iv.hi}, rel, 0))
    return out


def _strict(loc: Location, xs: Iterable[str]) -> bool:
    return any(loc.rate(x).lo_strict or loc.rate(x).hi_strict for x in xs)


def _time_image(d: Polyhedron, loc: Location, xs: tuple[str, ...], forward: bool) -> list[Polyhedron]:
    """Time successors (forward) or predecessors of one polyhedron inside ``loc``."""
    vs = d.variables
    other = {v: f"o:{v}" for v in vs}
    delta = "_delta"
    base = [*d.rename(other).constraints, *loc.inv.constraints(other), *loc.inv.constraints()]
    # forward: x = x' + delta*r, backward: x' = x + delta*r; the clock has rate 1
    sign = 1 if forward else -1
    branches = []
    if _strict(loc, xs):
        # open rate endpoints: either no time passes or delta > 0 with strict bounds
        branches.append([constraint({delta: 1}, EQ, 0), *(constraint({v: 1, other[v]: -1}, EQ, 0) for v in vs)])
        positive = True
    else:
        positive = False
    cs = [constraint({delta: 1}, ">" if positive else ">=", 0)]
    for x in (*xs, CLOCK):
        iv = Interval.point(1) if x == CLOCK else loc.rate(x)
        cs += _rate_bounds({x: sign, other[x]: -sign}, delta, iv, positive)
    branches.append(cs)
    out = []
    for cs in branches:
        P = Polyhedron.of([*vs, *other.values(), delta], [*base, *cs])
        img = eliminate(P, [*other.values(), delta])
        if not is_empty(img):
            out.append(img)
    return out


def _edge_post(d: Polyhedron, e: Edge, a: Automaton) -> Polyhedron | None:
    p = _with(d, [*e.guard.constraints(), *a.location(e.src).inv.constraints()])
    if e.reset:
        p = _forget(p, sorted(e.reset))
        p = _with(p, [constraint({x: 1}, EQ, 0) for x in sorted(e.reset)])
    p = _with(p, a.location(e.trg).inv.constraints())
    return None if is_empty(p) else p


def _edge_pre(d: Polyhedron, e: Edge, a: Automaton) -> Polyhedron | None:
    p = _with(d, [*a.location(e.trg).inv.constraints(), *(constraint({x: 1}, EQ, 0) for x in sorted(e.reset))])
    if is_empty(p):
        return None
    if e.reset:
        p = _forget(p, sorted(e.reset))
    p = _with(p, [*e.guard.constraints(), *a.location(e.src).inv.constraints()])
    return None if is_empty(p) else p


def post_sharp(R: SymRegion, a: Automaton) -> SymRegion:
    """Edge successors and time successors of ``R``, both with source and target invariants."""
    xs = a.variables
    acc: dict[str, list[Polyhedron]] = {k: [] for k in R.locations}
    for loc in R.locations:
        for d in R[loc].disjuncts:
            acc[loc] += _time_image(d, a.location(loc), xs, True)
            for e in a.edges_from(loc):
                p = _edge_post(d, e, a)
                if p is not None:
                    acc[e.trg].append(p)
    return SymRegion(R.variables, tuple((k, canonicalize(PolyUnion(R.variables, tuple(acc[k])))) for k in R.locations))


def pre_sharp(R: SymRegion, a: Automaton) -> SymRegion:
    """Edge predecessors and time predecessors of ``R``."""
    xs = a.variables
    acc: dict[str, list[Polyhedron]] = {k: [] for k in R.locations}
    for loc in R.locations:
        for d in R[loc].disjuncts:
            acc[loc] += _time_image(d, a.location(loc), xs, False)
    for e in a.edges:
        for d in R[e.trg].disjuncts:
            p = _edge_pre(d, e, a)
            if p is not None:
                acc[e.src].append(p)
    return SymRegion(R.variables, tuple((k, canonicalize(PolyUnion(R.variables, tuple(acc[k])))) for k in R.locations))


# ------------------------------------------------------------------ fixpoints

@dataclass
class FixpointTrace:
    iterates: list[SymRegion]
    stabilized: bool
    iterations: int
    cap: int | None = None

    @property
    def result(self) -> SymRegion:
        return self.iterates[-1]


def iteration_cap(a: Automaton, T) -> int:
    env = os.environ.get("RHA_ITER_CAP")
    if env:
        return int(env)
    return bound_F(a, T).depth


def clock_window(vs: Iterable[str], T) -> Polyhedron:
    return Polyhedron.of(vs, [constraint({CLOCK: 1}, ">=", 0), constraint({CLOCK: 1}, "<=", Fraction(T))])


def _iterate(R0: SymRegion, a: Automaton, op, window: Polyhedron | None, cap: int | None, strict_cap: bool) -> FixpointTrace:
    cur = R0.intersect(window) if window is not None else R0
    trace = FixpointTrace([cur], False, 0, cap)
    delta = cur
    while True:
        if cap is not None and trace.iterations >= cap:
            if strict_cap:
                raise FixpointError(f"no stabilization after {cap} iterations", trace)
            return trace
        img = op(delta, a)
        if window is not None:
            img = img.intersect(window)
        # keep only disjuncts that add something; post distributes over unions
        fresh = img.map(
            lambda k, u: PolyUnion(u.variables, tuple(d for d in u.disjuncts if not includes(cur[k], PolyUnion(u.variables, (d,)))))
        )
        trace.iterations += 1
        if fresh.is_empty():
            trace.iterates.append(cur)
            trace.stabilized = True
            return trace
        cur = cur.union(fresh)
        trace.iterates.append(cur)
        delta = fresh


def reach_T(R0: SymRegion, a: Automaton, T, cap: int | None = None) -> FixpointTrace:
    """Least fixpoint of (R0 | Post(Y)) & 0 <= t <= T, iterated semi-naively."""
    cap = iteration_cap(a, T) if cap is None else cap
    return _iterate(R0, a, post_sharp, clock_window(R0.variables, T), cap, True)


def coreach_T(R0: SymRegion, a: Automaton, T, cap: int | None = None) -> FixpointTrace:
    cap = iteration_cap(a, T) if cap is None else cap
    return _iterate(R0, a, pre_sharp, clock_window(R0.variables, T), cap, True)


def iterate_unbounded(R0: SymRegion, a: Automaton, n: int, backward: bool = False) -> FixpointTrace:
    """``n`` Kleene iterates without the time window (may never stabilize)."""
    return _iterate(R0, a, pre_sharp if backward else post_sharp, None, n, False)


def initial_region(a: Automaton, init: Mapping[str, Polyhedron] | None = None) -> SymRegion:
    """Start region with the clock at 0; defaults to the zero valuation in the initial locations."""
    vs = region_vars(a)
    if init is None:
        zero = [constraint({x: 1}, EQ, 0) for x in a.variables]
        init = {l: Polyhedron.of(a.variables, zero) for l in a.init}
    m = {}
    for loc, P in init.items():
        cs = [*P.constraints, constraint({CLOCK: 1}, EQ, 0), *a.location(loc).inv.constraints()]
        m[loc] = Polyhedron.of(vs, cs)
    return SymRegion.of(a, m)


def goal_region(a: Automaton, goal: str, region: Polyhedron | None = None) -> SymRegion:
    vs = region_vars(a)
    cs = list(region.constraints) if region is not None else []
    return SymRegion.of(a, {goal: Polyhedron.of(vs, [*cs, *a.location(goal).inv.constraints()])})


def reaches(a: Automaton, goal: str, T, init: Mapping[str, Polyhedron] | None = None,
            region: Polyhedron | None = None, cap: int | None = None) -> bool:
    """Goal membership in the forward fixpoint."""
    tr = reach_T(initial_region(a, init), a, T, cap)
    u = tr.result[goal]
    if region is not None:
        u = u.intersect(region.extend(u.variables))
    return not u.is_empty()
