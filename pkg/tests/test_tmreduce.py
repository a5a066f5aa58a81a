from __future__ import annotations

import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from conftest import MACHINES
from rha.arith import EQ, Polyhedron, constraint
from rha.boundedreach import Verdict, check, decide
from rha.tmreduce import (
    AUX,
    BLANK,
    ENC,
    GOAL,
    STEP,
    VARS,
    Transition,
    TuringMachine,
    block_duration,
    compile_tm,
    control,
    decode,
    decode_state,
    encode,
    format_tm,
    gadget,
    parse_poly,
    parse_tm,
    tm_simulate,
    transition_ops,
)

bits = st.text(alphabet="01", max_size=12)


def machine(name):
    return parse_tm((MACHINES / f"{name}.tm").read_text())


def test_paper_encoding_pair():
    e = encode("001010")
    assert (e.l1, e.c1) == (F(1, 64), F(5, 16))


def test_empty_word():
    e = encode("", "")
    assert (e.l1, e.c1, e.l2, e.c2) == (1, 0, 1, 0)


def test_right_half_msb_first():
    e = encode("", "10")
    assert e.l2 == F(1, 4) and e.c2 == F(1, 2)


@settings(max_examples=1000, deadline=None)
@given(bits, bits)
def test_decode_round_trip(w1, w2):
    assert decode(encode(w1, w2)) == (w1, w2)


def test_encode_rejects_blanks():
    with pytest.raises(ValueError):
        encode("0#1")


# ------------------------------------------------------------------ gadgets

def run_gadget(kind, target, x0, others=None):
    a, entry, out = gadget(kind, target)
    val = {v: F(0) for v in VARS}
    val.update(others or {})
    val[target] = F(x0)
    init = Polyhedron.of(VARS, [constraint({v: 1}, EQ, q) for v, q in val.items()])
    return check(a, out, 3, init=[(entry, init)]), val


@pytest.mark.parametrize(
    "kind, x0, x1, dur",
    [
        ("mul2", F(3, 10), F(3, 5), 1),
        ("mul2", 0, 0, 1),
        ("div2", F(3, 10), F(3, 20), 1),
        ("add_half", F(1, 4), F(3, 4), F(1, 2)),
        ("sub_half", F(7, 10), F(1, 5), F(1, 2)),
        ("sub_half", F(1, 2), 0, F(1, 2)),
    ],
)
def test_gadget_effect(kind, x0, x1, dur):
    others = {"l1": F(1, 4), "l2": F(1, 2), "c2": F(1, 2)}
    r, val = run_gadget(kind, "c1", x0, others)
    assert r.verdict is Verdict.YES
    last = r.witness.last.v
    assert last["c1"] == x1
    assert r.witness.duration == dur
    for v in ENC:
        if v != "c1":
            assert last[v] == val[v]


def test_sub_half_deadlocks_below_half():
    assert run_gadget("sub_half", "c2", F(3, 10))[0].verdict is Verdict.NO
    assert run_gadget("sub_half", "c2", 0)[0].verdict is Verdict.NO


def test_gadget_target_checked():
    with pytest.raises(ValueError):
        gadget("mul2", "x")
    with pytest.raises(ValueError):
        gadget("triple", "c1")


def test_gadget_rates_leave_others_still():
    a, _, _ = gadget("mul2", "l2")
    for loc in a.locations:
        for v in ENC:
            if v != "l2":
                assert loc.rate(v).hi == 0


# ------------------------------------------------------------------ machines

def test_parse_and_format_round_trip():
    m = machine("flip")
    assert m.q0 == "s" and m.accepting == {"f"} and m.poly == (2,)
    assert parse_tm(format_tm(m)) == m


def test_parse_poly():
    assert parse_poly("2*n+1") == (1, 2)
    assert parse_poly("n^2 + 3") == (3, 0, 1)
    with pytest.raises(ValueError):
        parse_poly("n-1")


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_tm("q0 s\ns 0 -> 2 R s\n")
    with pytest.raises(ValueError):
        parse_tm("F f\n")


def test_simulator_examples():
    flip = machine("flip")
    assert tm_simulate(flip, "0", 2)
    assert not tm_simulate(flip, "0", 1)
    no_accept = TuringMachine(flip.states, flip.q0, frozenset(), flip.transitions, flip.poly)
    assert not tm_simulate(no_accept, "0", 10)
    trivial = TuringMachine(("a",), "a", frozenset({"a"}), ())
    assert tm_simulate(trivial, "", 0)


def test_left_move_blocked_at_leftmost():
    m = parse_tm("q0 s\nF f\np 1\ns 0 -> 0 L f\n")
    assert not tm_simulate(m, "0", 2)
    assert decide(compile_tm(m, "0").query()).verdict is Verdict.NO


@pytest.mark.parametrize("read, write, move", list(itertools.product(["0", "1", BLANK], ["0", "1"], ["L", "R"])))
def test_block_fits_step_budget(read, write, move):
    for _, ops in transition_ops(Transition("a", read, write, move, "b")):
        assert block_duration(ops) <= STEP


def test_left_transition_structure():
    t = Transition("q1", "1", "0", "L", "q2")
    branches = transition_ops(t)
    assert [b for b, _ in branches] == ["0", "1"]
    zero, one = (ops for _, ops in branches)
    assert zero == [("sub_half", "c2"), ("mul2", "c1"), ("mul2", "l1"), ("div2", "l2"), ("div2", "c2")]
    assert one[1] == ("sub_half", "c1") and one[-1] == ("add_half", "c2")
    m = TuringMachine(("q1", "q2"), "q1", frozenset({"q2"}), (t,), (1,))
    a = compile_tm(m, "1").automaton
    first = [e for e in a.edges if e.src == control("q1") and e.trg != GOAL][0]
    assert first.reset == {"x"} and first.guard.get("l1").hi == 1 and first.guard.get("l1").hi_strict
    read = a.edges_from(first.trg)[0]
    assert read.guard.get("l2").hi == F(1, 2) and read.guard.get("c2").lo == F(1, 2)


def test_compiled_automaton_is_singular_and_nonnegative():
    inst = compile_tm(machine("guess"), "01")
    a = inst.automaton
    assert a.singular
    assert all(loc.rate(v).lo >= 0 for loc in a.locations for v in a.variables)
    assert inst.T == 7 * 4 and inst.goal == GOAL


def test_witness_decodes_to_configurations():
    m = machine("flip")
    inst = compile_tm(m, "0")
    r = decide(inst.query())
    assert r.verdict is Verdict.YES
    at_control = [(s, k) for k, s in enumerate(r.witness.states) if s.loc.startswith("q_")]
    tapes = [decode_state(s.v) for s, _ in at_control]
    assert tapes == [("", "0"), ("1", ""), ("", "10")]
    times = [sum(st.delay for st in r.witness.steps[:k]) for _, k in at_control]
    assert times == [0, STEP, 2 * STEP]
    assert all(s.v[v] >= 0 for s in r.witness.states for v in AUX)


@pytest.mark.parametrize(
    "name, word",
    [("flip", "0"), ("guess", "001"), ("guess", "000"), ("parity", "10"), ("bounce", "01")],
)
def test_compile_matches_simulator(name, word):
    m = machine(name)
    inst = compile_tm(m, word)
    r = decide(inst.query())
    assert r.verdict is not Verdict.DEPTH_EXHAUSTED
    assert (r.verdict is Verdict.YES) == tm_simulate(m, word, m.xi(len(word)))
