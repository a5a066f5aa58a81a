"""Random type-1/type-2 runs of region automata, shared by the contraction suites."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import sympy

from rha.contraction import compute_S, contract_type2, split_type0, split_type2, type2_violations
from rha.model import Edge, Rect
from rha.randgen import random_automaton, random_run
from rha.regionize import RegionAutomaton, lift_run
from rha.semantics import Run, TimedStep, effect

# Fig. 2: l0..l8 with l3 = l7, l4 = l2, l5 = l0, l6 = l2
FIG2_LOCS = ["A", "B", "C", "D", "C", "A", "C", "D", "E"]
FIG2_CHOICE = (3, 7, {4: 2, 5: 0, 6: 2})


def symbolic_path(locs):
    """A timed path through ``locs`` with positive symbolic delays t1, t2, ..."""
    ts = sympy.symbols(f"t1:{len(locs)}", positive=True)
    steps = []
    for k in range(1, len(locs)):
        e = Edge(f"e{k}", locs[k - 1], Rect.of({}), frozenset(), locs[k])
        steps.append(TimedStep(ts[k - 1], (("x", Fraction(1)),), e))
    return ts, steps


def symbolic_fig2():
    ts, steps = symbolic_path(FIG2_LOCS)
    return ts, steps, FIG2_CHOICE


@dataclass
class Outcome:
    pieces: int = 0
    contracted: int = 0  # pieces that actually got shorter
    failures: list[str] | None = None

    def fail(self, msg: str) -> None:
        self.failures = (self.failures or []) + [msg]


def random_instance(seed: int, steps: int = 14):
    rng = random.Random(seed)
    a = random_automaton(rng, max_locs=3, max_vars=2, cmax=2, rmax=2, singular=True)
    ra = RegionAutomaton(a)
    run = random_run(rng, ra.base, rng.randint(0, steps))
    return ra, run


def check_seed(seed: int, out: Outcome | None = None) -> Outcome:
    """Run every type-2 piece of a random run through contract_type2 and check the stated bounds."""
    out = out or Outcome()
    ra, run = random_instance(seed)
    nx = len(ra.variables)
    for t1 in split_type0(ra.base, run):
        lifted = lift_run(ra, t1)
        s = compute_S(lifted)
        if len(s) > 3 * nx:
            out.fail(f"seed {seed}: |S| = {len(s)} > 3|X|")
        for kind, piece in split_type2(lifted).pieces:
            if kind != "type2":
                continue
            out.pieces += 1
            check_piece(ra, piece, seed, out)
    return out


def check_piece(ra: RegionAutomaton, piece: Run, seed: int, out: Outcome) -> None:
    bad = type2_violations(piece)
    if bad:
        out.fail(f"seed {seed}: not type-2: {bad}")
        return
    try:
        c = contract_type2(ra, piece)
    except AssertionError as exc:
        out.fail(f"seed {seed}: contraction failed: {exc}")
        return
    xs = ra.variables
    nloc = len({s.loc for s in piece.states})
    if c.first != piece.first or c.last != piece.last:
        out.fail(f"seed {seed}: endpoints changed")
    if c.duration != piece.duration:
        out.fail(f"seed {seed}: duration {c.duration} != {piece.duration}")
    if effect(c.steps, xs) != effect(piece.steps, xs):
        out.fail(f"seed {seed}: effect changed")
    if c.length > 8 * nloc**2 * len(xs):
        out.fail(f"seed {seed}: length {c.length} > 8*{nloc}^2*{len(xs)}")
    if c.length < piece.length:
        out.contracted += 1
