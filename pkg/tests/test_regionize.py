from __future__ import annotations

import random
from fractions import Fraction as F

from hypothesis import given, settings, strategies as st

from rha.model import Interval
from rha.randgen import random_automaton, random_run
from rha.regionize import (
    ZERO_EQ,
    ZERO_PLUS,
    RegionAutomaton,
    RegionLabel,
    RegionVector,
    all_labels,
    build_region_automaton,
    label_of_value,
    lift_run,
    project_run,
    region_consistency_violations,
    time_successor,
)
from rha.semantics import State, TimedStep, run_of

Z, ZP, O, P = RegionLabel.zero_eq(), RegionLabel.zero_plus(), RegionLabel.open, RegionLabel.point


def vec(**labels):
    return RegionVector.of(labels)


def test_label_count_and_order():
    labs = all_labels(2)
    assert len(labs) == 7
    assert [str(l) for l in labs] == ["0=", "0+", "(0,1)", "[1,1]", "(1,2)", "[2,2]", "(2,oo)"]
    assert labs == sorted(labs)


def test_zero_labels_share_the_value_zero():
    assert Z.contains(F(0)) and ZP.contains(F(0))
    assert not ZP.contains(F(1, 100))


def test_label_of_value():
    assert label_of_value(F(0), 2) == Z
    assert label_of_value(F(0), 2, moving=True) == ZP
    assert label_of_value(F(3, 2), 2) == O(2)
    assert label_of_value(F(2), 2) == P(2)
    assert label_of_value(F(5), 2) == RegionLabel.tail(2)


def test_time_successor_zero_rate_zero_plus():
    assert time_successor(vec(x=Z), {"x": 0}, vec(x=ZP))


def test_time_successor_identity():
    r = vec(x=O(1), y=P(2))
    assert time_successor(r, {"x": 1, "y": 0}, r)


def test_time_successor_needs_shared_delay():
    # y needs t = 1 to get from [1,1] to [2,2] but x would leave (0,1)
    r1 = vec(x=O(1), y=P(1))
    r2 = vec(x=O(1), y=P(2))
    assert not time_successor(r1, {"x": 1, "y": 1}, r2)
    assert time_successor(r1, {"x": 0, "y": 1}, r2)


def test_time_successor_interval_rate():
    assert time_successor(vec(x=Z), {"x": Interval(F(0), False, F(1), False)}, vec(x=RegionLabel.tail(2)))
    assert not time_successor(vec(x=P(1)), {"x": 1}, vec(x=O(1)))


def test_single_location_five_regions():
    from rha.syntax import parse

    a = parse("var x; init l; loc l { rate: x = 1; inv: x <= 1; }")
    ra = RegionAutomaton(a)
    assert len(ra.full_product()) == 5
    assert ra.location_bound() == 5


def test_fig1_region_counts(fig1):
    ra, full = build_region_automaton(fig1, full=True)
    assert len(full.locations) == 98 == ra.location_bound()
    _, lazy = build_region_automaton(fig1)
    assert len(lazy.locations) <= 98
    assert set(lazy.init) == set(ra.init_locations())


def test_zero_eq_adds_invariant(fig1):
    ra = RegionAutomaton(fig1)
    name = ra.register("l0", vec(x=Z, y=ZP))
    inv = ra.location(name).inv
    assert inv.get("x") == Interval.point(0)


def test_reset_targets_are_zero_labels(fig1):
    ra = RegionAutomaton(fig1)
    start = ra.init_locations()
    for n in ra.explore(start):
        for e in ra.edges_from(n):
            _, r3 = ra.split(e.trg)
            for x in e.reset:
                assert r3[x].kind in (ZERO_EQ, ZERO_PLUS)
            base = ra.base_edge(e)
            assert e.guard.conj(base.guard) == e.guard  # strengthening only


def fig1_run(a):
    ra = RegionAutomaton(a)
    h1 = ra.base
    path = [
        TimedStep.of(F(1, 2), {"x": 2, "y": 1}, h1.edge("e01")),
    ]
    return ra, run_of(h1, State.of("l0", {"x": 0, "y": 0}), path)


def test_lift_fig1(fig1):
    ra, run = fig1_run(fig1)
    lifted = lift_run(ra, run)
    base, r = ra.split(lifted.last.loc)
    assert base == "l1" and lifted.last.v == {"x": 0, "y": F(1, 2)}
    assert r["x"].is_zero and r["y"] == O(1)
    assert project_run(ra, lifted) == run
    assert region_consistency_violations(ra, lifted) == []


def test_lift_empty_run(fig1):
    ra = RegionAutomaton(fig1)
    run = run_of(ra.base, State.of("l0", {"x": 0, "y": 0}), [])
    lifted = lift_run(ra, run)
    assert lifted.length == 1
    assert project_run(ra, lifted) == run


def lifted_random(seed):
    rng = random.Random(seed)
    a = random_automaton(rng, singular=rng.random() < 0.5)
    ra = RegionAutomaton(a)
    run = random_run(rng, ra.base, rng.randint(0, 8))
    return ra, run, lift_run(ra, run)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9))
def test_region_consistency(seed):
    ra, _, lifted = lifted_random(seed)
    assert region_consistency_violations(ra, lifted) == []


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9))
def test_lift_preserves_run(seed):
    ra, run, lifted = lifted_random(seed)
    assert lifted.duration == run.duration and lifted.length == run.length
    assert lifted.first.v == run.first.v and lifted.last.v == run.last.v
    assert project_run(ra, lifted) == run
