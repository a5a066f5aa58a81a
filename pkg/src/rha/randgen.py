"""Random small automata and random runs for the property suites."""

from __future__ import annotations

import random
from fractions import Fraction

from .model import Automaton, Edge, Interval, Location, Rect, TRUE, add_self_loops
from .semantics import Run, State, TimedStep, run_of

VAR_NAMES = ("x", "y")


def _interval(rng: random.Random, cmax: int, kind: str) -> Interval:
    c = Fraction(rng.randint(0, cmax))
    if kind == "le":
        return Interval(None, False, c, False)
    if kind == "lt":
        return Interval(None, False, c, True) if c > 0 else Interval(None, False, Fraction(1), True)
    if kind == "ge":
        return Interval(c, False, None, False)
    if kind == "gt":
        return Interval(c, True, None, False)
    return Interval.point(c)


def _rect(rng: random.Random, xs, cmax: int, p: float, kinds=("le", "lt", "ge", "gt", "eq")) -> Rect:
    items = []
    for x in xs:
        if rng.random() < p:
            items.append((x, _interval(rng, cmax, rng.choice(kinds))))
    try:
        return Rect.of(items)
    except ValueError:
        return TRUE


def _rate(rng: random.Random, rmax: int, singular: bool) -> Interval:
    if singular:
        return Interval.point(rng.randint(0, rmax))
    a = rng.randint(0, rmax)
    b = rng.randint(a, rmax)
    if a == b:
        return Interval.point(a)
    return Interval(Fraction(a), rng.random() < 0.25, Fraction(b), rng.random() < 0.25)


def random_automaton(
    rng: random.Random,
    max_locs: int = 3,
    max_vars: int = 2,
    cmax: int = 2,
    rmax: int = 2,
    singular: bool = True,
    max_edges: int = 5,
) -> Automaton:
    """A random SHA (or RHA when ``singular`` is false) with non-negative rates.

    Invariants are upper bounds only so that the zero valuation starts inside.
    """
    n = rng.randint(1, max_locs)
    xs = VAR_NAMES[: rng.randint(1, max_vars)]
    locs = []
    for i in range(n):
        rates = Rect.of({x: _rate(rng, rmax, singular) for x in xs})
        inv = _rect(rng, xs, cmax, 0.4, ("le",))
        if any(iv.hi == 0 for _, iv in inv.items):
            inv = TRUE
        locs.append(Location(f"l{i}", rates, inv))
    edges = []
    for k in range(rng.randint(1, max_edges)):
        src, trg = rng.randrange(n), rng.randrange(n)
        guard = _rect(rng, xs, cmax, 0.5)
        reset = frozenset(x for x in xs if rng.random() < 0.4)
        edges.append(Edge(f"e{k + 1}", f"l{src}", guard, reset, f"l{trg}"))
    return Automaton("random", tuple(xs), tuple(locs), tuple(edges), ("l0",))


# ------------------------------------------------------------------ runs

def _delay_window(v: Fraction, r: Fraction, iv: Interval):
    """Delays d >= 0 with v + r*d in iv, as (lo, lo_strict, hi, hi_strict) or None."""
    if r == 0:
        return (Fraction(0), False, None, False) if iv.contains(v) else None
    lo, ls, hi, hs = Fraction(0), False, None, False
    if iv.lo is not None:
        b = (iv.lo - v) / r
        if b > lo or (b == lo and iv.lo_strict):
            lo, ls = b, iv.lo_strict
    if iv.hi is not None:
        hi, hs = (iv.hi - v) / r, iv.hi_strict
    if hi is not None and (hi < lo or (hi == lo and (ls or hs))):
        return None
    return lo, ls, hi, hs


def _meet(w1, w2):
    if w1 is None or w2 is None:
        return None
    try:
        iv = Interval(w1[0], w1[1], w1[2], w1[3]).intersect(Interval(w2[0], w2[1], w2[2], w2[3]))
    except ValueError:
        return None
    return None if iv is None else (iv.lo, iv.lo_strict, iv.hi, iv.hi_strict)


def _candidates(win, rng: random.Random, horizon: Fraction) -> list[Fraction]:
    lo, ls, hi, hs = win
    iv = Interval(lo, ls, hi, hs)
    out = [q for q in (lo, hi) if q is not None and iv.contains(q) and q <= horizon]
    top = min(hi, horizon) if hi is not None else horizon
    for m in (1, 2, 3):
        k0 = int(lo * 2**m)
        for k in range(k0, k0 + 9):
            q = Fraction(k, 2**m)
            if q > top:
                break
            if iv.contains(q):
                out.append(q)
    if hi is not None and hi > lo and (lo + hi) / 2 <= horizon:
        out.append((lo + hi) / 2)
    return sorted(set(out))


def _rate_choices(iv: Interval) -> list[Fraction]:
    out = [q for q, strict in ((iv.lo, iv.lo_strict), (iv.hi, iv.hi_strict)) if q is not None and not strict]
    if iv.lo is not None and iv.hi is not None and iv.lo != iv.hi:
        out.append((iv.lo + iv.hi) / 2)
    return out or [iv.pick()]


def random_run(
    rng: random.Random,
    a: Automaton,
    steps: int,
    horizon: Fraction = Fraction(2),
    start: State | None = None,
) -> Run:
    """A random run of ``a``: rates at interval endpoints/midpoints, delays dyadic or on thresholds."""
    s = start or State.of(a.init[0], {x: 0 for x in a.variables})
    path: list[TimedStep] = []
    cur = s
    for _ in range(steps):
        loc = a.location(cur.loc)
        options = []
        for e in a.edges_from(cur.loc):
            rates = {x: rng.choice(_rate_choices(loc.rate(x))) for x in a.variables}
            win = (Fraction(0), False, None, False)
            val = cur.v
            for x in a.variables:
                win = _meet(win, _delay_window(val[x], rates[x], loc.inv.get(x)))
                win = _meet(win, _delay_window(val[x], rates[x], e.guard.get(x)))
                tiv = a.location(e.trg).inv.get(x)
                if x in e.reset:
                    if not tiv.contains(Fraction(0)):
                        win = None
                else:
                    win = _meet(win, _delay_window(val[x], rates[x], tiv))
            if win is None:
                continue
            ds = _candidates(win, rng, horizon)
            if ds:
                options.append((e, rates, ds))
        if not options:
            break
        e, rates, ds = rng.choice(options)
        st = TimedStep.of(rng.choice(ds), rates, e)
        nxt = run_of(a, cur, [st])
        path.append(st)
        cur = nxt.last
    return run_of(a, s, path)


def random_h1_run(rng: random.Random, a: Automaton, steps: int, horizon: Fraction = Fraction(2)) -> tuple[Automaton, Run]:
    """A random run of H' (the automaton with synthetic self-loops)."""
    h1 = add_self_loops(a)
    return h1, random_run(rng, h1, steps, horizon)
