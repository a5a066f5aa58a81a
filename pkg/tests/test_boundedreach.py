from __future__ import annotations

import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from rha.arith import Polyhedron, is_empty, parse_conjunction
from rha.boundedreach import Query, Verdict, check, decide, phi_of
from rha.randgen import random_automaton
from rha.semantics import run_of
from rha.syntax import parse


def y_is(a, value):
    return Polyhedron.of(a.variables, parse_conjunction(f"y = {value}"))


def test_phi_single_edge_forces_delay(fig1):
    phi = phi_of([fig1.edge("e01")], fig1, 1)
    p = phi.polyhedron
    assert not is_empty(p)
    assert is_empty(p.with_constraints(parse_conjunction("t1 < 1/2")))
    assert is_empty(p.with_constraints(parse_conjunction("t1 > 1/2")))


def test_phi_budget(fig1):
    E = [fig1.edge("e01"), fig1.edge("e10")]
    assert is_empty(phi_of(E, fig1, F(1, 2)).polyhedron)
    assert not is_empty(phi_of(E, fig1, 1).polyhedron)


def test_phi_empty_path(fig1):
    assert not is_empty(phi_of([], fig1, 0).polyhedron)


def test_phi_disconnected(fig1):
    with pytest.raises(ValueError):
        phi_of([fig1.edge("e01"), fig1.edge("e01")], fig1, 3)


@pytest.mark.parametrize("T", [1, 2, 3])
def test_fig1_goal_l1(fig1, T):
    r = check(fig1, "l1", T)
    assert r.verdict is Verdict.YES
    w = r.witness
    assert w.last.loc == "l1" and w.last.v == {"x": 0, "y": F(1, 2)}
    assert w.duration == F(1, 2)


def test_fig1_refined_goal(fig1):
    assert check(fig1, "l1", 1, goal_region=y_is(fig1, "1/4")).verdict is Verdict.NO
    r = check(fig1, "l1", 2, goal_region=y_is(fig1, "1/4"))
    assert r.verdict is Verdict.YES
    assert r.path == ("e01", "e10", "e01")
    assert r.witness.duration == F(5, 4) and r.witness.last.v == {"x": 0, "y": F(1, 4)}


def test_witness_replays(fig1):
    r = check(fig1, "l1", 3, goal_region=y_is(fig1, "1/8"))
    w = r.witness
    again = run_of(fig1, w.first, w.steps)
    assert again == w and w.duration <= 3 and w.length == 6


def test_depth_exhausted(fig1):
    r = check(fig1, "l1", 2, goal_region=y_is(fig1, "1/4"), depth=1)
    assert r.verdict is Verdict.DEPTH_EXHAUSTED
    assert r.completeness_depth > 1


def test_goal_is_init_zero_time(fig1):
    r = check(fig1, "l0", 0)
    assert r.verdict is Verdict.YES and r.witness.length == 1 and r.witness.duration == 0


def test_negative_bound_rejected(fig1):
    with pytest.raises(ValueError):
        Query(fig1, "l1", -1)
    with pytest.raises(ValueError):
        Query(fig1, "nowhere", 1)


def test_interval_rate_recovered():
    a = parse(
        "var x, y; init l; loc l { rate: x in [1, 2], y = 1; } loc m { rate: x = 0, y = 0; }"
        " edge go: l -> m { guard: x = 3/2 & y = 1; }"
    )
    r = check(a, "m", 1)
    assert r.verdict is Verdict.YES
    step = r.witness.steps[0]
    assert step.delay == 1 and step.r["x"] == F(3, 2)


def test_open_rate_zero_delay():
    a = parse("var x; init l; loc l { rate: x in (0, 1); } loc m { rate: x = 0; } edge go: l -> m { guard: x = 0; }")
    r = check(a, "m", 1)
    assert r.verdict is Verdict.YES and r.witness.duration == 0
    b = parse("var x; init l; loc l { rate: x in (0, 1); } loc m { rate: x = 0; } edge go: l -> m { guard: x = 1; }")
    assert check(b, "m", 1).verdict is Verdict.NO
    assert check(b, "m", 2).verdict is Verdict.YES


def test_unreachable_location_is_no():
    a = parse("var x; init l; loc l { rate: x = 1; } loc m { rate: x = 1; } edge go: l -> m { guard: x >= 3; }")
    assert check(a, "m", 2).verdict is Verdict.NO
    assert check(a, "m", 3).verdict is Verdict.YES


def test_custom_init(fig1):
    init = [("l0", Polyhedron.of(fig1.variables, parse_conjunction("x = 1 & y = 0")))]
    r = check(fig1, "l1", 0, init=init)
    assert r.verdict is Verdict.YES and r.witness.duration == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9), st.integers(0, 2))
def test_monotone_in_T(seed, T):
    rng = random.Random(seed)
    a = random_automaton(rng, singular=rng.random() < 0.5)
    goal = rng.choice(a.locations).name
    lo = decide(Query(a, goal, T, depth=5))
    hi = decide(Query(a, goal, T + 1, depth=5))
    if lo.verdict is Verdict.YES:
        assert hi.verdict is Verdict.YES
        assert lo.witness.duration <= T and lo.witness.last.loc == goal
    if hi.verdict is Verdict.NO:
        assert lo.verdict is Verdict.NO


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_prefix_pruning(seed):
    rng = random.Random(seed)
    a = random_automaton(rng)
    loc = a.init[0]
    E = []
    for _ in range(5):
        out = a.edges_from(loc)
        if not out:
            break
        E.append(rng.choice(out))
        loc = E[-1].trg
    for k in range(len(E)):
        if is_empty(phi_of(E[:k], a, 2).polyhedron):
            assert is_empty(phi_of(E[: k + 1], a, 2).polyhedron)


def test_goal_region_met_after_waiting():
    a = parse(
        "var x; init l0; loc l0 { rate: x in [1,2]; inv: x <= 1; } loc l1 { rate: x = 2; }"
        " edge e: l0 -> l1 { reset: {x}; }"
    )
    region = Polyhedron.of(["x"], parse_conjunction("x = 2"))
    r = decide(Query(a, "l1", F(3), goal_region=region, depth=4))
    assert r.verdict is Verdict.YES
    w = r.witness
    assert w.last.loc == "l1" and w.last.v == {"x": 2} and w.duration <= 3
    assert w.steps[-1].edge.synthetic
    assert decide(Query(a, "l1", F(1, 2), goal_region=region, depth=4)).verdict is not Verdict.YES
