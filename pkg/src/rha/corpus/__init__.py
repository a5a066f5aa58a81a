"""Bundled example automata and the golden regression suite."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Callable

from ..arith import Polyhedron, PolyUnion, includes, parse_conjunction
from ..model import Automaton
from ..syntax import parse

FILES = ("fig1.rha", "gasburner.rha", "bounded.rha")


def source(name: str) -> str:
    if not name.endswith(".rha"):
        name += ".rha"
    return resources.files(__package__).joinpath(name).read_text()


def load(name: str) -> Automaton:
    return parse(source(name))


def path(name: str):
    if not name.endswith(".rha"):
        name += ".rha"
    return resources.files(__package__).joinpath(name)


def poly(a_or_vars, text: str) -> Polyhedron:
    vs = a_or_vars.variables if hasattr(a_or_vars, "variables") else a_or_vars
    return Polyhedron.of(vs, parse_conjunction(text))


def gasburner_init(a: Automaton) -> dict[str, Polyhedron]:
    """Every location, y = t = 0, x anywhere its invariant allows.

    The location with the one-second invariant gets ``0 <= x <= 1`` and the
    other ``x >= 0``.
    """
    return {
        "not_leaking": poly(a, "0 <= x, x <= 1, y = 0, t = 0"),
        "leaking": poly(a, "x >= 0, y = 0, t = 0"),
    }


# ------------------------------------------------------------------ golden cases

@dataclass(frozen=True)
class GoldenCase:
    name: str
    file: str
    provenance: str  # PAPER, DERIVED or TRIVIAL
    expected: object
    compute: Callable[[Automaton], object]
    description: str = ""


@dataclass
class GoldenResult:
    case: GoldenCase
    actual: object
    passed: bool
    error: str | None = None

    def report(self) -> str:
        if self.passed:
            return f"{self.case.name}: {self.actual}"
        return f"{self.case.name}: expected {self.case.expected}, got {self.actual}" + (
            f" ({self.error})" if self.error else ""
        )


def point_values(u: PolyUnion, var: str) -> list[Fraction] | None:
    """The values of ``var`` in ``u`` when it is a finite set of points, else None."""
    from ..fixpoint import project

    proj = project(u, [var])
    out = []
    for d in proj.disjuncts:
        eqs = [c for c in d.constraints if c.rel == "="]
        if not eqs:
            return None
        c = eqs[0]
        out.append(c.bound / c.coeff(var))
    return sorted(set(out))


def _fig1_slice(a: Automaton):
    from ..fixpoint import initial_region, reach_T

    tr = reach_T(initial_region(a), a, 3)
    u = tr.result["l1"]
    u = u.intersect(poly(u.variables, "x = 0"))
    return [str(v) for v in point_values(u, "y")]


def _fig1_check(a: Automaton):
    from ..boundedreach import check

    out = {f"l1@T={T}": check(a, "l1", T).verdict.value for T in (1, 2, 3)}
    g = poly(a, "y = 1/4")
    for T in (1, 2):
        out[f"l1,y=1/4@T={T}"] = check(a, "l1", T, goal_region=g).verdict.value
    return out


def _fig1_bound(a: Automaton):
    from ..contraction import bound_F

    return bound_F(a, 2).paper


def _gas_leak(a: Automaton):
    from ..fixpoint import initial_region, reach_T

    tr = reach_T(initial_region(a, gasburner_init(a)), a, 60)
    res = tr.result
    cap = PolyUnion.of(res.variables, [poly(res.variables, "t <= 3")])
    ok = all(includes(cap, res[l].intersect(poly(res.variables, "y = 60"))) for l in res.locations)
    return {"stabilized": tr.stabilized, "t<=3 at y=60": ok}


def _bounded_growth(a: Automaton):
    from ..fixpoint import included, initial_region, iterate_unbounded, reach_T

    tr = iterate_unbounded(initial_region(a), a, 10)
    its = tr.iterates
    strict = all(included(its[i + 1], its[i]) and not included(its[i], its[i + 1]) for i in range(10))
    return {"strictly increasing x10": strict, "T=2 stabilizes": reach_T(initial_region(a), a, 2).stabilized}


CASES: tuple[GoldenCase, ...] = (
    GoldenCase("fig1-reach-slice", "fig1.rha", "PAPER", ["1/8", "1/4", "1/2"], _fig1_slice,
               "x = 0 slice of the T=3 reach set at l1"),
    GoldenCase("fig1-check", "fig1.rha", "PAPER",
               {"l1@T=1": "YES", "l1@T=2": "YES", "l1@T=3": "YES", "l1,y=1/4@T=1": "NO", "l1,y=1/4@T=2": "YES"},
               _fig1_check, "durations (n-1)+1/2^n"),
    GoldenCase("fig1-bound", "fig1.rha", "TRIVIAL", 1200000, _fig1_bound, "printed F(H,T) at T=2"),
    GoldenCase("gasburner-leak", "gasburner.rha", "PAPER", {"stabilized": True, "t<=3 at y=60": True}, _gas_leak,
               "leakage at most T/20 for T=60"),
    GoldenCase("bounded-growth", "bounded.rha", "DERIVED",
               {"strictly increasing x10": True, "T=2 stabilizes": True}, _bounded_growth,
               "unbounded iterates never stabilize, the time-bounded ones do"),
)


def run_golden(case: GoldenCase) -> GoldenResult:
    try:
        actual = case.compute(load(case.file))
    except Exception as exc:  # reported, not raised: the suite keeps going
        return GoldenResult(case, None, False, f"{type(exc).__name__}: {exc}")
    return GoldenResult(case, actual, actual == case.expected)


def run_all(cases=CASES) -> tuple[list[GoldenResult], str]:
    """Run the suite; returns the results and a TAP transcript."""
    results = [run_golden(c) for c in cases]
    lines = ["TAP version 13", f"1..{len(results)}"]
    for k, r in enumerate(results, start=1):
        status = "ok" if r.passed else "not ok"
        lines.append(f"{status} {k} - {r.case.name} [{r.case.provenance}] {r.case.description}")
        if not r.passed:
            lines.append(f"  # {r.report()}")
    return results, "\n".join(lines) + "\n"
