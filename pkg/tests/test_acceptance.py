"""Acceptance criteria, one test each.  Tolerances: exact rationals everywhere, runtime limits as listed."""

from __future__ import annotations

import json
import random
import time
from fractions import Fraction as F

import sympy

from conftest import MACHINES
from runs import Outcome, check_seed, symbolic_fig2
from rha import cli, corpus
from rha.arith import Polyhedron, PolyUnion, constraint, includes, parse_conjunction
from rha.boundedreach import Query, Verdict, decide
from rha.contraction import bound_F, cnt_once
from rha.corpus import gasburner_init, point_values
from rha.fixpoint import included, initial_region, iterate_unbounded, reach_T, reaches
from rha.randgen import random_automaton, random_run
from rha.regionize import RegionAutomaton, lift_run, region_consistency_violations
from rha.syntax import parse
from rha.tmreduce import compile_tm, encode, parse_tm, tm_simulate

SECONDS_1 = 10
SECONDS_2 = 300
SECONDS_3 = 60
SECONDS_7 = 600
SECONDS_8 = 600


def test_criterion_1_fig1_reach_and_check(capsys):
    t0 = time.perf_counter()
    assert cli.main(["reach", "fig1.rha", "--bound", "3", "--json"]) == 0
    obj = json.loads(capsys.readouterr().out)
    vs = obj["variables"]
    at_l1 = PolyUnion.from_json(vs, obj["regions"]["l1"])
    sl = at_l1.intersect(Polyhedron.of(vs, parse_conjunction("x = 0")))
    assert point_values(sl, "y") == [F(1, 8), F(1, 4), F(1, 2)]
    for T in (1, 2, 3):
        assert cli.main(["check", "fig1.rha", "--goal", "l1", "--bound", str(T)]) == 0
    assert cli.main(["check", "fig1.rha", "--goal", "l1: y = 1/4", "--bound", "1"]) == 1
    assert cli.main(["check", "fig1.rha", "--goal", "l1: y = 1/4", "--bound", "2"]) == 0
    capsys.readouterr()
    assert time.perf_counter() - t0 < SECONDS_1


def test_criterion_2_gas_burner_leak():
    t0 = time.perf_counter()
    a = corpus.load("gasburner")
    tr = reach_T(initial_region(a, gasburner_init(a)), a, 60)
    assert tr.stabilized and tr.iterations <= tr.cap
    print(f"gas burner: stabilized after {tr.iterations} iterations")
    res = tr.result
    leak = PolyUnion.of(res.variables, [Polyhedron.of(res.variables, parse_conjunction("t <= 3"))])
    at60 = Polyhedron.of(res.variables, parse_conjunction("y = 60"))
    for loc in res.locations:
        assert includes(leak, res[loc].intersect(at60))
    assert not all(res[loc].intersect(at60).is_empty() for loc in res.locations)
    assert time.perf_counter() - t0 < SECONDS_2


def test_criterion_3_bounded_invariant():
    t0 = time.perf_counter()
    a = corpus.load("bounded")
    its = iterate_unbounded(initial_region(a), a, 10).iterates
    assert len(its) == 11
    for i in range(len(its)):
        for j in range(i + 1, len(its)):
            assert included(its[j], its[i]) and not included(its[i], its[j])
    assert reach_T(initial_region(a), a, 2).stabilized
    assert time.perf_counter() - t0 < SECONDS_3


def test_criterion_4_contraction_theorems():
    out = Outcome()
    for seed in range(1000):
        check_seed(seed, out)
    assert out.failures is None, out.failures[:5]
    assert out.pieces >= 1000 and out.contracted > 0


def test_criterion_5_fig2_golden():
    t, path, choice = symbolic_fig2()
    res = cnt_once(path, choice)
    assert len(res) == 4
    want = [t[0] + t[5], t[1], t[2] + t[4] + t[6], t[3] + t[7]]
    assert [sympy.expand(s.delay - w) for s, w in zip(res, want)] == [0, 0, 0, 0]
    assert [s.edge.name for s in res] == ["e1", "e2", "e3", "e8"]


def test_criterion_6_region_consistency():
    runs = 0
    for seed in range(1000):
        rng = random.Random(seed)
        a = random_automaton(rng, singular=rng.random() < 0.5)
        ra = RegionAutomaton(a)
        run = random_run(rng, ra.base, rng.randint(0, 10))
        lifted = lift_run(ra, run)
        assert region_consistency_violations(ra, lifted) == [], seed
        runs += 1
    assert runs >= 1000


def random_goal(rng, a):
    goal = rng.choice(a.locations).name
    if rng.random() < 0.5 or not a.variables:
        return goal, None
    x = rng.choice(a.variables)
    rel = rng.choice(["=", ">=", "<="])
    return goal, Polyhedron.of(a.variables, [constraint({x: 1}, rel, F(rng.randint(0, 4), 2))])


def test_criterion_7_cross_engine():
    t0 = time.perf_counter()
    agree = conclusive = 0
    for seed in range(250):
        rng = random.Random(seed)
        a = random_automaton(rng, max_locs=3, max_vars=2, cmax=2, rmax=2, singular=rng.random() < 0.5)
        T = rng.randint(0, 3)
        goal, region = random_goal(rng, a)
        r = decide(Query(a, goal, T, goal_region=region, depth=8))
        if r.verdict is Verdict.DEPTH_EXHAUSTED:
            continue
        conclusive += 1
        fix = reaches(a, goal, T, region=region)
        assert (r.verdict is Verdict.YES) == fix, (seed, r.verdict, fix)
        agree += 1
    assert conclusive >= 200 and agree == conclusive
    assert time.perf_counter() - t0 < SECONDS_7


TM_CASES = [
    ("flip", "0", True),
    ("flip", "11", True),
    ("guess", "001", True),  # nondeterministic
    ("guess", "000", False),
    ("never", "01", False),
    ("parity", "11", True),
    ("parity", "10", False),
    ("bounce", "0", True),
    ("bounce", "01", False),
]


def test_criterion_8_tm_reduction():
    t0 = time.perf_counter()
    assert (encode("001010").l1, encode("001010").c1) == (F(1, 64), F(5, 16))
    names = set()
    for name, word, accepts in TM_CASES:
        m = parse_tm((MACHINES / f"{name}.tm").read_text())
        xi = m.xi(len(word))
        assert xi <= 16
        sim = tm_simulate(m, word, xi)
        assert sim == accepts
        inst = compile_tm(m, word)
        assert inst.T == 7 * xi
        r = decide(inst.query())
        assert (r.verdict is Verdict.YES) == sim and r.verdict is not Verdict.DEPTH_EXHAUSTED, (name, word)
        names.add(name)
    assert len(names) >= 5
    assert time.perf_counter() - t0 < SECONDS_8


def test_criterion_9_bound_F():
    one = parse("var x; init l; loc l { rate: x = 1; inv: x <= 1; }")
    assert bound_F(one, 1).paper == 432
    assert bound_F(one, 0).paper == 24 * 1 * 1 * 3**2
    assert bound_F(corpus.load("fig1"), 2).paper == 1_200_000
