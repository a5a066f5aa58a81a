"""Exact linear constraints, convex polyhedra and finite unions of them.

Everything here is exact: coefficients are normalized to coprime integers,
bounds are :class:`fractions.Fraction`.  Existential projection uses
Fourier-Motzkin elimination with equality substitution, and emptiness is
decided by projecting every variable away.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

Number = int | Fraction

LE, LT, EQ = "<=", "<", "="
_RELS = (LE, LT, EQ)


class DimensionError(ValueError):
    """Operands live over different variable sets."""


def _frac(v: Number | str) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def fmt_rational(q: Fraction) -> str:
    q = _frac(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True, order=True)
class LinConstraint:
    """``sum(coeffs) rel bound`` with ``rel`` one of ``<=``, ``<``, ``=``.

    Build instances through :func:`constraint`, which normalizes: the
    coefficients are coprime integers, equalities have a positive leading
    coefficient, and ``>=``/``>`` are flipped.
    """

    coeffs: tuple[tuple[str, int], ...]
    rel: str
    bound: Fraction

    @property
    def coefficients(self) -> dict[str, Fraction]:
        return {v: Fraction(c) for v, c in self.coeffs}

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    def coeff(self, var: str) -> int:
        for v, c in self.coeffs:
            if v == var:
                return c
        return 0

    @property
    def is_trivial(self) -> bool:
        return not self.coeffs

    @property
    def truth(self) -> bool:
        """Truth value of a trivial constraint ``0 rel bound``."""
        b = self.bound
        return b >= 0 if self.rel == LE else b > 0 if self.rel == LT else b == 0

    def lhs(self, point: Mapping[str, Number]) -> Fraction:
        return sum((c * _frac(point[v]) for v, c in self.coeffs), Fraction(0))

    def holds(self, point: Mapping[str, Number]) -> bool:
        s = self.lhs(point)
        if self.rel == LE:
            return s <= self.bound
        if self.rel == LT:
            return s < self.bound
        return s == self.bound

    def negations(self) -> list[LinConstraint]:
        """Constraints whose disjunction is the complement of ``self``."""
        neg = {v: -c for v, c in self.coeffs}
        if self.rel == LE:
            return [constraint(neg, LT, -self.bound)]
        if self.rel == LT:
            return [constraint(neg, LE, -self.bound)]
        pos = dict(self.coeffs)
        return [constraint(pos, LT, self.bound), constraint(neg, LT, -self.bound)]

    def rename(self, mapping: Mapping[str, str]) -> LinConstraint:
        return constraint({mapping.get(v, v): c for v, c in self.coeffs}, self.rel, self.bound)

    def substitute(self, var: str, expr: Mapping[str, Fraction], const: Fraction) -> LinConstraint:
        """Replace ``var`` by ``sum(expr) + const``."""
        a = self.coeff(var)
        if not a:
            return self
        acc: dict[str, Fraction] = {v: Fraction(c) for v, c in self.coeffs if v != var}
        for v, c in expr.items():
            acc[v] = acc.get(v, Fraction(0)) + a * c
        return constraint(acc, self.rel, self.bound - a * const)

    def __str__(self) -> str:
        if not self.coeffs:
            return f"0 {self.rel} {fmt_rational(self.bound)}"
        coeffs, rel, bound = self.coeffs, self.rel, self.bound
        if rel != EQ and all(c < 0 for _, c in coeffs):
            # -x <= -1 reads better as x >= 1
            coeffs = tuple((v, -c) for v, c in coeffs)
            rel, bound = (">=" if rel == LE else ">"), -bound
        parts = []
        for i, (v, c) in enumerate(coeffs):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            term = v if mag == 1 else f"{mag}*{v}"
            if i == 0:
                parts.append(term if c > 0 else f"-{term}")
            else:
                parts.append(f"{sign} {term}")
        return f"{' '.join(parts)} {rel} {fmt_rational(bound)}"

    def to_json(self) -> dict:
        return {
            "coeffs": {v: str(c) for v, c in self.coeffs},
            "rel": self.rel,
            "bound": fmt_rational(self.bound),
        }

    @staticmethod
    def from_json(obj: Mapping) -> LinConstraint:
        return constraint({v: Fraction(c) for v, c in obj["coeffs"].items()}, obj["rel"], Fraction(obj["bound"]))


FALSE = LinConstraint((), LT, Fraction(0))


def constraint(coeffs: Mapping[str, Number], rel: str, bound: Number) -> LinConstraint:
    """Normalize ``coeffs . x rel bound`` into a :class:`LinConstraint`."""
    bound = _frac(bound)
    items = {v: _frac(c) for v, c in coeffs.items() if c != 0}
    if rel in (">=", ">"):
        items = {v: -c for v, c in items.items()}
        bound = -bound
        rel = LE if rel == ">=" else LT
    elif rel == "==":
        rel = EQ
    if rel not in _RELS:
        raise ValueError(f"unknown relation {rel!r}")
    if not items:
        triv = LinConstraint((), rel, bound)
        return LinConstraint((), LE, Fraction(0)) if triv.truth else FALSE
    den = math.lcm(*(c.denominator for c in items.values()))
    ints = {v: int(c * den) for v, c in items.items()}
    g = math.gcd(*ints.values())
    scale = Fraction(den, g)
    keys = sorted(ints)
    if rel == EQ and ints[keys[0]] < 0:
        g = -g
        scale = -scale
    return LinConstraint(tuple((v, ints[v] // g) for v in keys), rel, bound * scale)


def _dominates(a: LinConstraint, b: LinConstraint) -> bool:
    """Same left-hand side, ``a`` at least as tight as ``b``."""
    if a.bound != b.bound:
        return a.bound < b.bound
    return a.rel == LT or b.rel == LE


def _normalize(constraints: Iterable[LinConstraint]) -> tuple[LinConstraint, ...] | None:
    """Deduplicate and merge constraints; ``None`` signals a syntactic contradiction."""
    ineq: dict[tuple, LinConstraint] = {}
    eqs: dict[tuple, LinConstraint] = {}
    for c in constraints:
        if c.is_trivial:
            if not c.truth:
                return None
            continue
        if c.rel == EQ:
            old = eqs.get(c.coeffs)
            if old is not None and old.bound != c.bound:
                return None
            eqs[c.coeffs] = c
        else:
            old = ineq.get(c.coeffs)
            if old is None or _dominates(c, old):
                ineq[c.coeffs] = c
    # opposite inequality pairs: L <= b and -L <= -b
    for key, c in list(ineq.items()):
        if key not in ineq:
            continue
        nkey = tuple((v, -k) for v, k in key)
        d = ineq.get(nkey)
        if d is None:
            continue
        lo = -d.bound  # L >= lo
        if lo > c.bound or (lo == c.bound and (c.rel == LT or d.rel == LT)):
            return None
        if lo == c.bound:
            e = constraint(dict(key), EQ, c.bound)
            old = eqs.get(e.coeffs)
            if old is not None and old.bound != e.bound:
                return None
            eqs[e.coeffs] = e
            del ineq[key]
            del ineq[nkey]
    for e in eqs.values():
        for key in (e.coeffs, tuple((v, -k) for v, k in e.coeffs)):
            c = ineq.get(key)
            if c is None:
                continue
            b = e.bound if key == e.coeffs else -e.bound
            if b < c.bound or (b == c.bound and c.rel == LE):
                del ineq[key]
            else:
                return None
    return tuple(sorted([*eqs.values(), *ineq.values()]))


@dataclass(frozen=True)
class Polyhedron:
    """A convex polyhedron over an explicit, ordered variable set."""

    variables: tuple[str, ...]
    constraints: tuple[LinConstraint, ...]

    @staticmethod
    def of(variables: Iterable[str], constraints: Iterable[LinConstraint] = ()) -> Polyhedron:
        vs = tuple(sorted(set(variables)))
        cs = list(constraints)
        vset = set(vs)
        for c in cs:
            extra = c.variables - vset
            if extra:
                raise DimensionError(f"constraint {c} uses undeclared {sorted(extra)}")
        norm = _normalize(cs)
        return Polyhedron(vs, (FALSE,) if norm is None else norm)

    @staticmethod
    def top(variables: Iterable[str]) -> Polyhedron:
        return Polyhedron.of(variables)

    @staticmethod
    def bottom(variables: Iterable[str]) -> Polyhedron:
        return Polyhedron.of(variables, [FALSE])

    @property
    def is_syntactically_false(self) -> bool:
        return self.constraints == (FALSE,)

    def with_constraints(self, extra: Iterable[LinConstraint]) -> Polyhedron:
        return Polyhedron.of(self.variables, [*self.constraints, *extra])

    def extend(self, variables: Iterable[str]) -> Polyhedron:
        """Embed into a larger variable set (new variables unconstrained)."""
        return Polyhedron.of(set(self.variables) | set(variables), self.constraints)

    def rename(self, mapping: Mapping[str, str]) -> Polyhedron:
        return Polyhedron.of(
            (mapping.get(v, v) for v in self.variables),
            (c.rename(mapping) for c in self.constraints),
        )

    def contains(self, point: Mapping[str, Number]) -> bool:
        return all(c.holds(point) for c in self.constraints)

    def __str__(self) -> str:
        if not self.constraints:
            return "true"
        return " & ".join(str(c) for c in self.constraints)

    def to_json(self) -> list:
        return [c.to_json() for c in self.constraints]


def conjoin(a: Polyhedron, b: Polyhedron) -> Polyhedron:
    if a.variables != b.variables:
        raise DimensionError(f"variable sets differ: {a.variables} vs {b.variables}")
    return Polyhedron.of(a.variables, [*a.constraints, *b.constraints])


def _eliminate_once(cs: Sequence[LinConstraint], var: str) -> tuple[LinConstraint, ...] | None:
    for e in cs:
        a = e.coeff(var) if e.rel == EQ else 0
        if a:
            # var = (bound - rest) / a
            expr = {v: Fraction(-c, a) for v, c in e.coeffs if v != var}
            const = e.bound / a
            return _normalize(c.substitute(var, expr, const) for c in cs if c is not e)
    pos, neg, rest = [], [], []
    for c in cs:
        k = c.coeff(var)
        (pos if k > 0 else neg if k < 0 else rest).append(c)
    out = list(rest)
    for p in pos:
        kp = p.coeff(var)
        for n in neg:
            kn = -n.coeff(var)
            acc: dict[str, int] = {}
            for v, c in p.coeffs:
                acc[v] = acc.get(v, 0) + kn * c
            for v, c in n.coeffs:
                acc[v] = acc.get(v, 0) + kp * c
            rel = LT if LT in (p.rel, n.rel) else LE
            out.append(constraint(acc, rel, kn * p.bound + kp * n.bound))
    return _normalize(out)


def _pick_var(cs: Sequence[LinConstraint], vars_: Iterable[str]) -> str:
    best, best_cost = None, None
    for v in sorted(vars_):
        for c in cs:
            if c.rel == EQ and c.coeff(v):
                return v
        p = sum(1 for c in cs if c.coeff(v) > 0)
        n = sum(1 for c in cs if c.coeff(v) < 0)
        cost = p * n - p - n
        if best_cost is None or cost < best_cost:
            best, best_cost = v, cost
    assert best is not None
    return best


def _project(cs: tuple[LinConstraint, ...], vars_: set[str]) -> tuple[LinConstraint, ...] | None:
    todo = set(vars_)
    while todo:
        if cs == (FALSE,):
            return None
        present = {v for c in cs for v, _ in c.coeffs} & todo
        if not present:
            break
        v = _pick_var(cs, present)
        todo.discard(v)
        res = _eliminate_once(cs, v)
        if res is None:
            return None
        cs = res
    return cs


def eliminate(p: Polyhedron, vars_: Iterable[str]) -> Polyhedron:
    """Existentially project ``vars_`` out of ``p``."""
    drop = set(vars_)
    missing = drop - set(p.variables)
    if missing:
        raise DimensionError(f"cannot eliminate undeclared {sorted(missing)}")
    keep = [v for v in p.variables if v not in drop]
    cs = _project(p.constraints, drop)
    if cs is None:
        return Polyhedron.bottom(keep)
    return Polyhedron.of(keep, cs)


@lru_cache(maxsize=200_000)
def _empty(cs: tuple[LinConstraint, ...]) -> bool:
    vs = {v for c in cs for v, _ in c.coeffs}
    res = _project(cs, vs)
    return res is None or any(not c.truth for c in res)


def is_empty(p: Polyhedron) -> bool:
    """True iff no rational valuation satisfies ``p``."""
    if p.is_syntactically_false:
        return True
    return _empty(p.constraints)


def _pick_value(lo: Fraction | None, lo_strict: bool, hi: Fraction | None, hi_strict: bool) -> Fraction:
    if lo is not None and hi is not None:
        if lo == hi:
            return lo
        if not lo_strict:
            return lo
        return (lo + hi) / 2
    if lo is not None:
        return lo + 1 if lo_strict else lo
    if hi is not None:
        return hi - 1 if hi_strict else min(hi, Fraction(0))
    return Fraction(0)


def sample_point(p: Polyhedron) -> dict[str, Fraction] | None:
    """A rational point of ``p`` built by back-substitution, or ``None``."""
    if is_empty(p):
        return None
    stages: list[tuple[str, tuple[LinConstraint, ...]]] = []
    cs = p.constraints
    todo = set(p.variables)
    while todo:
        present = {v for c in cs for v, _ in c.coeffs} & todo
        if not present:
            break
        v = _pick_var(cs, present)
        todo.discard(v)
        stages.append((v, cs))
        nxt = _eliminate_once(cs, v)
        assert nxt is not None, "projection of a non-empty polyhedron became empty"
        cs = nxt
    point: dict[str, Fraction] = {v: Fraction(0) for v in todo}
    for v, cs in reversed(stages):
        lo = hi = None
        lo_s = hi_s = False
        fixed = None
        for c in cs:
            a = c.coeff(v)
            if not a:
                continue
            rest = sum((k * point[u] for u, k in c.coeffs if u != v), Fraction(0))
            val = (c.bound - rest) / a
            if c.rel == EQ:
                fixed = val
                break
            strict = c.rel == LT
            if a > 0:  # v <= val
                if hi is None or val < hi or (val == hi and strict):
                    hi, hi_s = val, strict
            else:  # v >= val
                if lo is None or val > lo or (val == lo and strict):
                    lo, lo_s = val, strict
        point[v] = fixed if fixed is not None else _pick_value(lo, lo_s, hi, hi_s)
    assert p.contains(point), "back-substitution produced a point outside the polyhedron"
    return point


def is_included(a: Polyhedron, b: Polyhedron) -> bool:
    """Convex inclusion ``a ⊆ b``."""
    if a.variables != b.variables:
        raise DimensionError(f"variable sets differ: {a.variables} vs {b.variables}")
    if is_empty(a):
        return True
    for c in b.constraints:
        for n in c.negations():
            if not is_empty(a.with_constraints([n])):
                return False
    return True


def minimize(p: Polyhedron) -> Polyhedron:
    """Drop inequalities implied by the remaining constraints."""
    if is_empty(p):
        return Polyhedron.bottom(p.variables)
    kept = list(p.constraints)
    i = 0
    while i < len(kept):
        c = kept[i]
        if c.rel != EQ:
            others = kept[:i] + kept[i + 1:]
            probe = Polyhedron.of(p.variables, [*others, *c.negations()])
            if is_empty(probe):
                kept = others
                continue
        i += 1
    return Polyhedron.of(p.variables, kept)


@dataclass(frozen=True)
class PolyUnion:
    """A finite union of polyhedra over a common variable set."""

    variables: tuple[str, ...]
    disjuncts: tuple[Polyhedron, ...]

    @staticmethod
    def of(variables: Iterable[str], disjuncts: Iterable[Polyhedron] = ()) -> PolyUnion:
        vs = tuple(sorted(set(variables)))
        ds = tuple(disjuncts)
        for d in ds:
            if d.variables != vs:
                raise DimensionError(f"disjunct over {d.variables}, union over {vs}")
        return PolyUnion(vs, ds)

    @staticmethod
    def empty(variables: Iterable[str]) -> PolyUnion:
        return PolyUnion.of(variables)

    @staticmethod
    def top(variables: Iterable[str]) -> PolyUnion:
        return PolyUnion.of(variables, [Polyhedron.top(variables)])

    def contains(self, point: Mapping[str, Number]) -> bool:
        return any(d.contains(point) for d in self.disjuncts)

    def is_empty(self) -> bool:
        return all(is_empty(d) for d in self.disjuncts)

    def union(self, other: PolyUnion) -> PolyUnion:
        if self.variables != other.variables:
            raise DimensionError("variable sets differ")
        return PolyUnion(self.variables, self.disjuncts + other.disjuncts)

    def intersect(self, p: Polyhedron) -> PolyUnion:
        return PolyUnion(self.variables, tuple(conjoin(d, p) for d in self.disjuncts))

    def __len__(self) -> int:
        return len(self.disjuncts)

    def __str__(self) -> str:
        if not self.disjuncts:
            return "false"
        return " | ".join(f"({d})" for d in self.disjuncts)

    def to_json(self) -> list:
        return [d.to_json() for d in self.disjuncts]

    @staticmethod
    def from_json(variables: Iterable[str], obj: Sequence) -> PolyUnion:
        vs = list(variables)
        return PolyUnion.of(vs, [Polyhedron.of(vs, [LinConstraint.from_json(c) for c in d]) for d in obj])


def canonicalize(u: PolyUnion) -> PolyUnion:
    """Drop empty disjuncts and disjuncts included in another one."""
    live = [d for d in u.disjuncts if not is_empty(d)]
    kept: list[Polyhedron] = []
    for i, d in enumerate(live):
        covered = False
        for j, other in enumerate(live):
            if i == j:
                continue
            if is_included(d, other):
                # ties between equal disjuncts keep the earliest
                if not is_included(other, d) or j < i:
                    covered = True
                    break
        if not covered:
            kept.append(d)
    return PolyUnion(u.variables, tuple(kept))


def subtract(d: Polyhedron, a: PolyUnion) -> list[Polyhedron]:
    """``d \\ a`` as a list of non-empty polyhedra (DNF of ``d ∧ ¬a``)."""
    pieces = [d] if not is_empty(d) else []
    for p in a.disjuncts:
        if not pieces:
            break
        nxt: list[Polyhedron] = []
        for q in pieces:
            if is_included(q, p):
                continue
            for c in p.constraints:
                for n in c.negations():
                    r = q.with_constraints([n])
                    if not is_empty(r):
                        nxt.append(r)
        pieces = canonicalize(PolyUnion(d.variables, tuple(nxt))).disjuncts if len(nxt) > 1 else nxt
    return list(pieces)


def includes(a: PolyUnion, b: PolyUnion) -> bool:
    """True iff every point of ``b`` lies in ``a``."""
    if a.variables != b.variables:
        raise DimensionError(f"variable sets differ: {a.variables} vs {b.variables}")
    for d in b.disjuncts:
        if is_empty(d):
            continue
        if any(is_included(d, p) for p in a.disjuncts):
            continue
        if subtract(d, a):
            return False
    return True


# ---------------------------------------------------------------- text syntax

_TERM = re.compile(r"\s*([+-]?)\s*(?:(\d+(?:/\d+)?)\s*\*?\s*)?([A-Za-z_][A-Za-z0-9_']*)?")
_REL = re.compile(r"(<=|>=|==|=|<|>)")


def parse_linear(text: str) -> tuple[dict[str, Fraction], Fraction]:
    """Parse ``2*x - y + 1/2`` into (coefficients, constant)."""
    coeffs: dict[str, Fraction] = {}
    const = Fraction(0)
    s = text.strip()
    if not s:
        raise ValueError("empty expression")
    pos = 0
    first = True
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse {s[pos:]!r}")
        sign, num, var = m.groups()
        if not sign and not first:
            raise ValueError(f"missing operator before {s[pos:m.end()].strip()!r}")
        if num is None and var is None:
            raise ValueError(f"dangling sign in {text!r}")
        k = Fraction(num) if num is not None else Fraction(1)
        if sign == "-":
            k = -k
        if var is None:
            const += k
        else:
            coeffs[var] = coeffs.get(var, Fraction(0)) + k
        pos = m.end()
        while pos < len(s) and s[pos].isspace():
            pos += 1
        first = False
    return coeffs, const


def parse_constraint(text: str) -> LinConstraint:
    """Parse ``lhs REL rhs`` where both sides are linear expressions."""
    parts = _REL.split(text)
    if len(parts) != 3:
        raise ValueError(f"expected exactly one relation in {text!r}")
    lhs, rel, rhs = parts
    lc, lk = parse_linear(lhs)
    rc, rk = parse_linear(rhs)
    coeffs = dict(lc)
    for v, c in rc.items():
        coeffs[v] = coeffs.get(v, Fraction(0)) - c
    return constraint(coeffs, "=" if rel == "==" else rel, rk - lk)


def parse_conjunction(text: str) -> list[LinConstraint]:
    """Parse ``c1 & c2 & ...``; ``true`` or the empty string is the empty list."""
    s = text.strip()
    if s in ("", "true"):
        return []
    return [parse_constraint(a) for a in re.split(r"&&|&|\band\b|,", s) if a.strip()]
