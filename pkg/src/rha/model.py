"""Rectangular hybrid automata with non-negative rates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

from .arith import EQ, LE, LT, LinConstraint, Polyhedron, constraint, fmt_rational


@dataclass(frozen=True)
class Interval:
    """A non-empty interval; ``None`` bounds are infinite."""

    lo: Fraction | None = None
    lo_strict: bool = False
    hi: Fraction | None = None
    hi_strict: bool = False

    def __post_init__(self):
        if self.lo is not None and not isinstance(self.lo, Fraction):
            object.__setattr__(self, "lo", Fraction(self.lo))
        if self.hi is not None and not isinstance(self.hi, Fraction):
            object.__setattr__(self, "hi", Fraction(self.hi))
        if self.lo is None and self.lo_strict:
            object.__setattr__(self, "lo_strict", False)
        if self.hi is None and self.hi_strict:
            object.__setattr__(self, "hi_strict", False)
        if self.lo is not None and self.hi is not None:
            if self.lo > self.hi:
                raise ValueError(f"empty interval: lower {self.lo} > upper {self.hi}")
            if self.lo == self.hi and (self.lo_strict or self.hi_strict):
                raise ValueError("degenerate interval with a strict bound is empty")

    @staticmethod
    def point(a) -> Interval:
        return Interval(Fraction(a), False, Fraction(a), False)

    @staticmethod
    def closed(a, b) -> Interval:
        return Interval(Fraction(a), False, Fraction(b), False)

    @property
    def is_point(self) -> bool:
        return self.lo is not None and self.lo == self.hi

    @property
    def is_top(self) -> bool:
        return self.lo is None and self.hi is None

    def contains(self, v) -> bool:
        if self.lo is not None and (v < self.lo or (self.lo_strict and v == self.lo)):
            return False
        if self.hi is not None and (v > self.hi or (self.hi_strict and v == self.hi)):
            return False
        return True

    def intersect(self, other: Interval) -> Interval | None:
        lo, ls = self.lo, self.lo_strict
        if other.lo is not None and (lo is None or other.lo > lo or (other.lo == lo and other.lo_strict)):
            lo, ls = other.lo, other.lo_strict
        hi, hs = self.hi, self.hi_strict
        if other.hi is not None and (hi is None or other.hi < hi or (other.hi == hi and other.hi_strict)):
            hi, hs = other.hi, other.hi_strict
        if lo is not None and hi is not None and (lo > hi or (lo == hi and (ls or hs))):
            return None
        return Interval(lo, ls, hi, hs)

    def pick(self) -> Fraction:
        """A canonical member: the lower bound when closed, else something inside."""
        if self.lo is not None and not self.lo_strict:
            return self.lo
        if self.lo is not None and self.hi is not None:
            return (self.lo + self.hi) / 2
        if self.lo is not None:
            return self.lo + 1
        if self.hi is not None:
            return self.hi if not self.hi_strict else self.hi - 1
        return Fraction(0)

    def constraints(self, var: str) -> list[LinConstraint]:
        if self.is_point:
            return [constraint({var: 1}, EQ, self.lo)]
        out = []
        if self.lo is not None:
            out.append(constraint({var: 1}, ">" if self.lo_strict else ">=", self.lo))
        if self.hi is not None:
            out.append(constraint({var: 1}, LT if self.hi_strict else LE, self.hi))
        return out

    def endpoints(self) -> list[Fraction]:
        return [b for b in (self.lo, self.hi) if b is not None]

    def __str__(self) -> str:
        lo = "-oo" if self.lo is None else fmt_rational(self.lo)
        hi = "oo" if self.hi is None else fmt_rational(self.hi)
        lb = "(" if self.lo is None or self.lo_strict else "["
        rb = ")" if self.hi is None or self.hi_strict else "]"
        return f"{lb}{lo},{hi}{rb}"


TOP = Interval()


@dataclass(frozen=True)
class Rect:
    """A conjunction ``x in I`` per variable; absent variables are unconstrained."""

    items: tuple[tuple[str, Interval], ...] = ()

    @staticmethod
    def of(mapping: Mapping[str, Interval] | Iterable[tuple[str, Interval]] = ()) -> Rect:
        pairs = mapping.items() if isinstance(mapping, Mapping) else mapping
        merged: dict[str, Interval] = {}
        for v, iv in pairs:
            if v in merged:
                m = merged[v].intersect(iv)
                if m is None:
                    raise ValueError(f"unsatisfiable constraints on {v}")
                merged[v] = m
            else:
                merged[v] = iv
        return Rect(tuple(sorted((v, iv) for v, iv in merged.items() if not iv.is_top)))

    @cached_property
    def as_dict(self) -> dict[str, Interval]:
        return dict(self.items)

    def get(self, var: str) -> Interval:
        return self.as_dict.get(var, TOP)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.items)

    def holds(self, val: Mapping[str, Fraction]) -> bool:
        return all(iv.contains(val[v]) for v, iv in self.items)

    def violated(self, val: Mapping[str, Fraction]) -> str | None:
        for v, iv in self.items:
            if not iv.contains(val[v]):
                return f"{v} in {iv}"
        return None

    def constraints(self, rename: Mapping[str, str] | None = None) -> list[LinConstraint]:
        out = []
        for v, iv in self.items:
            out.extend(iv.constraints(rename.get(v, v) if rename else v))
        return out

    def polyhedron(self, variables: Iterable[str]) -> Polyhedron:
        return Polyhedron.of(variables, self.constraints())

    def conj(self, other: Rect) -> Rect | None:
        try:
            return Rect.of([*self.items, *other.items])
        except ValueError:
            return None

    @property
    def is_true(self) -> bool:
        return not self.items

    def __str__(self) -> str:
        if not self.items:
            return "true"
        parts = []
        for v, iv in self.items:
            if iv.is_point:
                parts.append(f"{v} = {fmt_rational(iv.lo)}")
                continue
            if iv.lo is not None:
                parts.append(f"{v} {'>' if iv.lo_strict else '>='} {fmt_rational(iv.lo)}")
            if iv.hi is not None:
                parts.append(f"{v} {'<' if iv.hi_strict else '<='} {fmt_rational(iv.hi)}")
        return " & ".join(parts)


RectGuard = Rect
TRUE = Rect()


@dataclass(frozen=True)
class Location:
    name: str
    rates: Rect
    inv: Rect = TRUE

    def rate(self, var: str) -> Interval:
        return self.rates.get(var)


@dataclass(frozen=True)
class Edge:
    name: str
    src: str
    guard: Rect
    reset: frozenset[str]
    trg: str
    synthetic: bool = False


@dataclass(frozen=True)
class Validation:
    diagnostics: tuple[str, ...]
    singular: bool
    notes: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.diagnostics


@dataclass(frozen=True)
class Automaton:
    name: str
    variables: tuple[str, ...]
    locations: tuple[Location, ...]
    edges: tuple[Edge, ...]
    init: tuple[str, ...]
    meta: tuple[tuple[str, str], ...] = field(default=(), compare=False)

    @cached_property
    def _loc_index(self) -> dict[str, Location]:
        return {l.name: l for l in self.locations}

    @cached_property
    def _edge_index(self) -> dict[str, Edge]:
        return {e.name: e for e in self.edges}

    @cached_property
    def _out(self) -> dict[str, tuple[Edge, ...]]:
        out: dict[str, list[Edge]] = {l.name: [] for l in self.locations}
        for e in self.edges:
            out.setdefault(e.src, []).append(e)
        return {k: tuple(v) for k, v in out.items()}

    def location(self, name: str) -> Location:
        return self._loc_index[name]

    def has_location(self, name: str) -> bool:
        return name in self._loc_index

    def edge(self, name: str) -> Edge:
        return self._edge_index[name]

    def edges_from(self, loc: str) -> tuple[Edge, ...]:
        return self._out.get(loc, ())

    @property
    def location_names(self) -> tuple[str, ...]:
        return tuple(l.name for l in self.locations)

    @cached_property
    def singular(self) -> bool:
        return all(loc.rate(x).is_point for loc in self.locations for x in self.variables)

    @cached_property
    def rmax(self) -> Fraction:
        return constants(self)[0]

    @cached_property
    def cmax(self) -> Fraction:
        return constants(self)[1]


def validate(a: Automaton) -> Validation:
    diags: list[str] = []
    notes: list[str] = []
    xs = set(a.variables)
    if len(xs) != len(a.variables):
        diags.append("duplicate variable declaration")
    names = [l.name for l in a.locations]
    if len(set(names)) != len(names):
        diags.append("duplicate location name")
    enames = [e.name for e in a.edges]
    if len(set(enames)) != len(enames):
        diags.append("duplicate edge name")
    for loc in a.locations:
        for v in loc.rates.variables - xs:
            diags.append(f"location {loc.name}: rate for undeclared variable {v}")
        for v in loc.inv.variables - xs:
            diags.append(f"location {loc.name}: invariant on undeclared variable {v}")
        for v in a.variables:
            iv = loc.rate(v)
            if iv.is_top and v not in loc.rates.variables:
                diags.append(f"location {loc.name}: missing rate for variable {v}")
            elif iv.lo is None or iv.lo < 0:
                diags.append(f"location {loc.name}: negative rate for variable {v} ({iv})")
    for e in a.edges:
        for end in (e.src, e.trg):
            if not a.has_location(end):
                diags.append(f"edge {e.name}: undeclared location {end}")
        for v in e.guard.variables - xs:
            diags.append(f"edge {e.name}: guard on undeclared variable {v}")
        for v in e.reset - xs:
            diags.append(f"edge {e.name}: reset of undeclared variable {v}")
    if not a.init:
        diags.append("no initial location")
    for l in a.init:
        if not a.has_location(l):
            diags.append(f"init: undeclared location {l}")
    for c in _all_constants(a):
        if c.denominator != 1:
            notes.append(f"non-integer constant {fmt_rational(c)}")
            break
    singular = not diags and a.singular
    return Validation(tuple(diags), singular, tuple(notes))


def _all_constants(a: Automaton) -> list[Fraction]:
    out = []
    for loc in a.locations:
        for _, iv in loc.rates.items + loc.inv.items:
            out.extend(iv.endpoints())
    for e in a.edges:
        for _, iv in e.guard.items:
            out.extend(iv.endpoints())
    return out


def constants(a: Automaton) -> tuple[Fraction, Fraction]:
    """``(rmax, cmax)``; cmax ranges over rates and guards and is at least 1."""
    rates = [b for loc in a.locations for _, iv in loc.rates.items for b in iv.endpoints()]
    rmax = max(rates, default=Fraction(0))
    consts = rates + [b for e in a.edges for _, iv in e.guard.items for b in iv.endpoints()]
    c = max((abs(b) for b in consts), default=Fraction(0))
    cmax = Fraction(max(1, math.ceil(c)))
    return Fraction(rmax), cmax


def self_loop_name(loc: str) -> str:
    return f"loop_{loc}"


def add_self_loops(a: Automaton) -> Automaton:
    """H': one synthetic ``(l, true, {}, l)`` loop per location."""
    have = {e.src for e in a.edges if e.synthetic and e.src == e.trg}
    taken = {e.name for e in a.edges}
    extra = []
    for loc in a.locations:
        if loc.name in have:
            continue
        name = self_loop_name(loc.name)
        while name in taken:
            name += "'"
        taken.add(name)
        extra.append(Edge(name, loc.name, TRUE, frozenset(), loc.name, synthetic=True))
    return replace(a, edges=a.edges + tuple(extra))


def initial_polyhedron(a: Automaton, loc: str) -> Polyhedron:
    """The Problem-1 default start: the zero valuation (if the invariant admits it)."""
    return Polyhedron.of(a.variables, [constraint({x: 1}, EQ, 0) for x in a.variables])


def to_json(a: Automaton) -> dict:
    def rect(r: Rect) -> dict:
        return {v: str(iv) for v, iv in r.items}

    return {
        "name": a.name,
        "variables": list(a.variables),
        "locations": [{"name": l.name, "rates": rect(l.rates), "inv": rect(l.inv)} for l in a.locations],
        "edges": [
            {
                "name": e.name,
                "src": e.src,
                "guard": rect(e.guard),
                "reset": sorted(e.reset),
                "trg": e.trg,
                "synthetic": e.synthetic,
            }
            for e in a.edges
        ],
        "init": list(a.init),
    }
