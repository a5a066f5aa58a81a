"""Time-bounded reachability by search over edge sequences with exact path constraints."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .arith import (
    EQ,
    LE,
    LinConstraint,
    Polyhedron,
    constraint,
    eliminate,
    is_empty,
    is_included,
    sample_point,
)
from .contraction import bound_F
from .model import Automaton, Edge, Interval, Location, add_self_loops
from .semantics import Run, State, TimedStep, run_of

TAU = "_tau"


class Verdict(enum.Enum):
    YES = "YES"
    NO = "NO"
    DEPTH_EXHAUSTED = "DEPTH_EXHAUSTED"


@dataclass(frozen=True)
class Query:
    automaton: Automaton
    goal: str
    T: Fraction
    init: tuple[tuple[str, Polyhedron], ...] = ()
    goal_region: Polyhedron | None = None
    depth: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "T", Fraction(self.T))
        if self.T < 0:
            raise ValueError("time bound must be non-negative")
        if not self.automaton.has_location(self.goal):
            raise ValueError(f"goal location {self.goal} is not declared")
        if not self.init:
            xs = self.automaton.variables
            zero = Polyhedron.of(xs, [constraint({x: 1}, EQ, 0) for x in xs])
            object.__setattr__(self, "init", tuple((l, zero) for l in self.automaton.init))


@dataclass
class Result:
    verdict: Verdict
    witness: Run | None = None
    depth: int = 0
    nodes: int = 0
    completeness_depth: int = 0
    path: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.verdict is Verdict.YES


# ------------------------------------------------------------------ Phi(E)

def _rate_constraints(d: str, t: str, iv: Interval) -> list[LinConstraint]:
    """``t*lo <~ d <~ t*hi`` keeping the strictness of the rate interval."""
    if iv.is_point:
        return [constraint({d: 1, t: -iv.lo}, EQ, 0)]
    out = []
    if iv.lo is not None:
        out.append(constraint({d: 1, t: -iv.lo}, ">" if iv.lo_strict else ">=", 0))
    if iv.hi is not None:
        out.append(constraint({d: 1, t: -iv.hi}, "<" if iv.hi_strict else "<=", 0))
    return out


def _has_strict_rate(loc: Location, xs: Iterable[str]) -> bool:
    return any(loc.rate(x).lo_strict or loc.rate(x).hi_strict for x in xs)


@dataclass(frozen=True)
class PathConstraint:
    polyhedron: Polyhedron
    edges: tuple[Edge, ...]

    def var(self, kind: str, x: str, i: int) -> str:
        return f"{kind}{i}_{x}"


def phi_of(
    E: Sequence[Edge],
    a: Automaton,
    T,
    start: str | None = None,
    init: Polyhedron | None = None,
    zero_delays: Iterable[int] = (),
) -> PathConstraint:
    """Phi(E) over ``v<i>_x`` (valuation after step i), ``w<i>_x`` (before edge i) and ``t<i>``.

    Steps listed in ``zero_delays`` (1-based) are fixed to delay 0; this is how
    strict rate endpoints admit an instantaneous crossing.
    """
    xs = a.variables
    zero = set(zero_delays)
    first = start if start is not None else (E[0].src if E else a.init[0])
    for k in range(1, len(E)):
        if E[k - 1].trg != E[k].src:
            raise ValueError(f"edge {E[k].name} does not continue from {E[k - 1].trg}")
    if E and E[0].src != first:
        raise ValueError(f"path starts in {E[0].src}, expected {first}")
    names = [f"v0_{x}" for x in xs]
    cs: list[LinConstraint] = []
    if init is None:
        cs += [constraint({f"v0_{x}": 1}, EQ, 0) for x in xs]
    else:
        cs += init.rename({x: f"v0_{x}" for x in xs}).constraints
    loc = a.location(first)
    cs += loc.inv.constraints({x: f"v0_{x}" for x in xs})
    budget: dict[str, int] = {}
    for i, e in enumerate(E, start=1):
        loc = a.location(e.src)
        t = f"t{i}"
        names.append(t)
        budget[t] = 1
        cs.append(constraint({t: 1}, ">=", 0))
        pre = {x: f"w{i}_{x}" for x in xs}
        post = {x: f"v{i}_{x}" for x in xs}
        names += list(pre.values()) + list(post.values())
        for x in xs:
            prev = f"v{i - 1}_{x}"
            if i in zero:
                cs.append(constraint({pre[x]: 1, prev: -1}, EQ, 0))
                continue
            iv = loc.rate(x)
            if iv.is_point:
                cs.append(constraint({pre[x]: 1, prev: -1, t: -iv.lo}, EQ, 0))
                continue
            if iv.lo is not None:
                cs.append(constraint({pre[x]: 1, prev: -1, t: -iv.lo}, ">" if iv.lo_strict else ">=", 0))
            if iv.hi is not None:
                cs.append(constraint({pre[x]: 1, prev: -1, t: -iv.hi}, "<" if iv.hi_strict else "<=", 0))
        if i in zero:
            cs.append(constraint({t: 1}, EQ, 0))
        cs += loc.inv.constraints(pre)
        cs += e.guard.constraints(pre)
        for x in xs:
            if x in e.reset:
                cs.append(constraint({post[x]: 1}, EQ, 0))
            else:
                cs.append(constraint({post[x]: 1, pre[x]: -1}, EQ, 0))
        cs += a.location(e.trg).inv.constraints(post)
    if budget:
        cs.append(constraint(budget, LE, Fraction(T)))
    elif Fraction(T) < 0:
        cs.append(constraint({}, LE, -1))
    return PathConstraint(Polyhedron.of(names, cs), tuple(E))


# ------------------------------------------------------------------ search

@dataclass
class _Node:
    loc: str
    poly: Polyhedron  # over X and TAU: entry valuation and elapsed time
    parent: "_Node | None" = None
    edge: Edge | None = None
    step: Polyhedron | None = None  # over p:/q:/n: variables and _d
    zero: bool = False
    depth: int = 0
    start_poly: Polyhedron | None = None


class _Stepper:
    def __init__(self, a: Automaton, T: Fraction):
        self.a = a
        self.T = T
        self.xs = a.variables
        self.nvars = tuple(sorted((*self.xs, TAU)))
        self.prev = {v: f"p:{v}" for v in self.nvars}
        self.new = {v: f"n:{v}" for v in self.nvars}
        self.back = {f"n:{v}": v for v in self.nvars}
        self._templates: dict[tuple[str, bool], tuple[list[str], list[LinConstraint]]] = {}

    def template(self, e: Edge, zero: bool) -> tuple[list[str], list[LinConstraint]]:
        key = (e.name, zero)
        if key in self._templates:
            return self._templates[key]
        xs = self.xs
        loc = self.a.location(e.src)
        d = "_d"
        pre = {x: f"q:{x}" for x in xs}
        names = [d, *self.prev.values(), *pre.values(), *self.new.values()]
        cs: list[LinConstraint] = []
        if zero:
            cs.append(constraint({d: 1}, EQ, 0))
            cs += [constraint({pre[x]: 1, self.prev[x]: -1}, EQ, 0) for x in xs]
        else:
            cs += self.flow(loc, pre, d)
        cs += loc.inv.constraints(pre)
        cs += e.guard.constraints(pre)
        for x in xs:
            if x in e.reset:
                cs.append(constraint({self.new[x]: 1}, EQ, 0))
            else:
                cs.append(constraint({self.new[x]: 1, pre[x]: -1}, EQ, 0))
        cs.append(constraint({self.new[TAU]: 1, self.prev[TAU]: -1, d: -1}, EQ, 0))
        cs.append(constraint({self.new[TAU]: 1}, LE, self.T))
        cs += self.a.location(e.trg).inv.constraints({x: self.new[x] for x in xs})
        self._templates[key] = (names, cs)
        return names, cs

    def flow(self, loc: Location, post: dict[str, str], d: str) -> list[LinConstraint]:
        """Delay ``d >= 0`` in ``loc`` taking each ``p:x`` to ``post[x]``."""
        cs = [constraint({d: 1}, ">=", 0)]
        for x in self.xs:
            iv = loc.rate(x)
            if iv.is_point:
                cs.append(constraint({post[x]: 1, self.prev[x]: -1, d: -iv.lo}, EQ, 0))
                continue
            if iv.lo is not None:
                cs.append(constraint({post[x]: 1, self.prev[x]: -1, d: -iv.lo}, ">" if iv.lo_strict else ">=", 0))
            if iv.hi is not None:
                cs.append(constraint({post[x]: 1, self.prev[x]: -1, d: -iv.hi}, "<" if iv.hi_strict else "<=", 0))
        return cs

    def final_delay(self, node: _Node, region: Polyhedron) -> Polyhedron:
        """States of ``region`` reached by waiting in ``node.loc`` after arrival, within the bound."""
        loc = self.a.location(node.loc)
        fin = {x: f"f:{x}" for x in self.xs}
        names = ["_d", *self.prev.values(), *fin.values()]
        cs = [*node.poly.rename(self.prev).constraints, *self.flow(loc, fin, "_d")]
        cs += loc.inv.constraints(fin)
        cs.append(constraint({self.prev[TAU]: 1, "_d": 1}, LE, self.T))
        cs += region.rename(fin).constraints
        return Polyhedron.of(names, cs)

    def step(self, node: _Node, e: Edge, zero: bool) -> tuple[Polyhedron, Polyhedron] | None:
        names, cs = self.template(e, zero)
        full = Polyhedron.of(names, [*node.poly.rename(self.prev).constraints, *cs])
        if full.is_syntactically_false:
            return None
        drop = [v for v in full.variables if not v.startswith("n:")]
        img = eliminate(full, drop)
        if is_empty(img):
            return None
        return img.rename(self.back), full


def _goal_hit(node: _Node, goal: str, region: Polyhedron | None) -> Polyhedron | None:
    if node.loc != goal:
        return None
    p = node.poly
    if region is not None:
        p = Polyhedron.of(p.variables, [*p.constraints, *region.constraints])
    return None if is_empty(p) else p


def decide(q: Query, subsume: bool = True, max_nodes: int | None = None) -> Result:
    """Breadth-first deepening over edge sequences; each node carries the projection of Phi."""
    a = q.automaton
    st = _Stepper(a, q.T)
    complete = bound_F(a, q.T).depth
    limit = complete if q.depth is None else min(q.depth, complete)
    frontier: list[_Node] = []
    for loc, P in q.init:
        cs = [*P.extend([TAU]).constraints, constraint({TAU: 1}, EQ, 0)]
        cs += a.location(loc).inv.constraints()
        poly = Polyhedron.of(st.nvars, cs)
        if not is_empty(poly):
            frontier.append(_Node(loc, poly, start_poly=poly))
    seen: dict[str, list[Polyhedron]] = {}
    nodes = 0
    depth = 0
    region = q.goal_region.extend([TAU]) if q.goal_region is not None else None
    while frontier:
        kept = []
        for node in frontier:
            if subsume:
                prev = seen.setdefault(node.loc, [])
                if any(is_included(node.poly, p) for p in prev):
                    continue
                prev.append(node.poly)
            nodes += 1
            hit = _goal_hit(node, q.goal, region)
            late = None
            if hit is None and node.loc == q.goal and region is not None:
                late = st.final_delay(node, region)
                if is_empty(late):
                    late = None
            if hit is not None or late is not None:
                w = extract_witness(a, node, hit, st, late)
                return Result(Verdict.YES, w, depth, nodes, complete, tuple(e.name for e in _edges_of(node)))
            kept.append(node)
        if max_nodes is not None and nodes > max_nodes:
            return Result(Verdict.DEPTH_EXHAUSTED, None, depth, nodes, complete)
        if depth >= limit:
            if not kept:
                break
            verdict = Verdict.NO if limit >= complete else Verdict.DEPTH_EXHAUSTED
            return Result(verdict, None, depth, nodes, complete)
        nxt = []
        for node in kept:
            loc = a.location(node.loc)
            zeros = (False, True) if _has_strict_rate(loc, a.variables) else (False,)
            for e in a.edges_from(node.loc):
                for z in zeros:
                    res = st.step(node, e, z)
                    if res is None:
                        continue
                    img, full = res
                    nxt.append(_Node(e.trg, img, node, e, full, z, depth + 1))
        frontier = nxt
        depth += 1
    return Result(Verdict.NO, None, depth, nodes, complete)


def _edges_of(node: _Node) -> list[Edge]:
    out = []
    while node.parent is not None:
        out.append(node.edge)
        node = node.parent
    return out[::-1]


def _chain(node: _Node) -> list[_Node]:
    out = [node]
    while out[-1].parent is not None:
        out.append(out[-1].parent)
    return out[::-1]


def extract_witness(
    a: Automaton, node: _Node, hit: Polyhedron | None, st: _Stepper, late: Polyhedron | None = None
) -> Run:
    """Back-substitute a rational model of Phi along the node chain and replay it.

    With ``late`` the goal region is met only after waiting in the goal location; the
    wait is appended as a step along that location's synthetic self-loop.
    """
    chain = _chain(node)
    if late is not None:
        final = sample_point(late)
        assert final is not None
        point = {v: final[st.prev[v]] for v in st.nvars}
    else:
        final = None
        point = sample_point(hit)
    assert point is not None
    points = [point]
    details = []
    for k in range(len(chain) - 1, 0, -1):
        child, parent = chain[k], chain[k - 1]
        fix = [constraint({st.new[v]: 1}, EQ, point[v]) for v in st.nvars]
        prev_cs = parent.poly.rename(st.prev).constraints
        P = Polyhedron.of(child.step.variables, [*child.step.constraints, *fix, *prev_cs])
        m = sample_point(P)
        if m is None:
            raise AssertionError("witness back-substitution failed: inconsistent step polyhedron")
        details.append(m)
        point = {v: m[st.prev[v]] for v in st.nvars}
        points.append(point)
    points.reverse()
    details.reverse()
    xs = a.variables
    s0 = State.of(chain[0].loc, {x: points[0][x] for x in xs})
    steps = []
    for k, m in enumerate(details, start=1):
        node_k = chain[k]
        loc = a.location(node_k.parent.loc)
        t = m["_d"]
        rates = {}
        for x in xs:
            iv = loc.rate(x)
            if t > 0:
                rates[x] = (m[f"q:{x}"] - m[f"p:{x}"]) / t
            else:
                rates[x] = iv.pick()
        steps.append(TimedStep.of(t, rates, node_k.edge))
    E = [n.edge for n in chain[1:]]
    zero = [k for k, n in enumerate(chain[1:], start=1) if n.zero]
    init_poly = Polyhedron.of(xs, eliminate(chain[0].poly, [TAU]).constraints)
    phi = phi_of(E, a, st.T, start=chain[0].loc, init=init_poly, zero_delays=zero)
    assign = {f"v0_{x}": points[0][x] for x in xs}
    for k, m in enumerate(details, start=1):
        assign[f"t{k}"] = m["_d"]
        for x in xs:
            assign[f"w{k}_{x}"] = m[f"q:{x}"]
            assign[f"v{k}_{x}"] = m[f"n:{x}"]
    if not phi.polyhedron.contains(assign):
        raise AssertionError("extracted point does not satisfy Phi(E)")
    if final is not None:
        h1 = add_self_loops(a)
        loop = next(e for e in h1.edges if e.synthetic and e.src == node.loc)
        d = final["_d"]
        loc = a.location(node.loc)
        rates = {x: (final[f"f:{x}"] - final[f"p:{x}"]) / d if d > 0 else loc.rate(x).pick() for x in xs}
        steps.append(TimedStep.of(d, rates, loop))
        a = h1
    run = run_of(a, s0, steps)
    if run.duration > st.T:
        raise AssertionError("witness exceeds the time bound")
    return run


def check(
    a: Automaton,
    goal: str,
    T,
    init: Sequence[tuple[str, Polyhedron]] = (),
    goal_region: Polyhedron | None = None,
    depth: int | None = None,
) -> Result:
    return decide(Query(a, goal, Fraction(T), tuple(init), goal_region, depth))
