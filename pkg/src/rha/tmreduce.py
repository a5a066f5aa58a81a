"""Encoding exponential-time Turing machines into time-bounded reachability of SHA.

Tape halves are kept in four variables: ``l1, c1`` for the part left of the
head (most significant bit rightmost) and ``l2, c2`` for the part from the head
on (most significant bit leftmost).  Blanks are implicit: ``w2`` empty means the
head reads ``#``.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .arith import EQ, Polyhedron, constraint
from .model import Automaton, Edge, Interval, Location, Rect, TRUE

BLANK = "#"
ENC = ("l1", "c1", "l2", "c2")
AUX = ("x", "z", "u")  # step timer, gadget auxiliary, div2 padding timer
VARS = ENC + AUX
STEP = 7
GOAL = "accept"


# ------------------------------------------------------------------ machines

@dataclass(frozen=True)
class Transition:
    state: str
    read: str
    write: str
    move: str
    target: str

    def __str__(self) -> str:
        return f"{self.state} {self.read} -> {self.write} {self.move} {self.target}"


@dataclass(frozen=True)
class TuringMachine:
    states: tuple[str, ...]
    q0: str
    accepting: frozenset[str]
    transitions: tuple[Transition, ...]
    poly: tuple[int, ...] = (0,)  # coefficients of p, lowest degree first

    def __post_init__(self):
        for t in self.transitions:
            if t.read not in ("0", "1", BLANK):
                raise ValueError(f"bad read symbol {t.read!r} in {t}")
            if t.write not in ("0", "1"):
                raise ValueError(f"transition {t} must write 0 or 1")
            if t.move not in ("L", "R"):
                raise ValueError(f"bad move {t.move!r} in {t}")
            for q in (t.state, t.target):
                if q not in self.states:
                    raise ValueError(f"undeclared state {q}")
        if self.q0 not in self.states:
            raise ValueError(f"undeclared initial state {self.q0}")

    def p(self, n: int) -> int:
        return sum(c * n**k for k, c in enumerate(self.poly))

    def xi(self, n: int) -> int:
        return 2 ** self.p(n)

    def moves(self, q: str, sym: str) -> list[Transition]:
        return [t for t in self.transitions if t.state == q and t.read == sym]


_POLY_TERM = re.compile(r"^(\d+)?\*?(n(?:\^(\d+))?)?$")


def parse_poly(text: str) -> tuple[int, ...]:
    """``2*n+1``, ``n^2 + 3``: integer polynomial in ``n``."""
    coeffs: dict[int, int] = {}
    for raw in text.replace(" ", "").split("+"):
        m = _POLY_TERM.match(raw)
        if not raw or not m or (m.group(1) is None and m.group(2) is None):
            raise ValueError(f"bad polynomial term {raw!r}")
        c = int(m.group(1)) if m.group(1) else 1
        k = 0 if not m.group(2) else int(m.group(3) or 1)
        coeffs[k] = coeffs.get(k, 0) + c
    deg = max(coeffs)
    return tuple(coeffs.get(k, 0) for k in range(deg + 1))


def parse_tm(text: str) -> TuringMachine:
    q0 = None
    acc: list[str] = []
    poly = (0,)
    trans = []
    states: list[str] = []

    def note(q):
        if q not in states:
            states.append(q)

    for no, line in enumerate(text.splitlines(), start=1):
        line = _strip_comment(line)
        parts = line.split()
        if not parts:
            continue
        head = parts[0]
        if head == "q0" and len(parts) == 2:
            q0 = parts[1]
            note(q0)
        elif head == "F":
            acc += parts[1:]
            for q in parts[1:]:
                note(q)
        elif head == "p":
            poly = parse_poly(" ".join(parts[1:]))
        elif len(parts) == 6 and parts[2] == "->":
            q, r, _, wr, mv, q2 = parts
            note(q)
            note(q2)
            trans.append(Transition(q, r, wr, mv, q2))
        else:
            raise ValueError(f"line {no}: cannot parse {line.strip()!r}")
    if q0 is None:
        raise ValueError("missing 'q0' line")
    return TuringMachine(tuple(states), q0, frozenset(acc), tuple(trans), poly)


def _strip_comment(line: str) -> str:
    # '#' doubles as the blank symbol; only '//' or a leading '#' start a comment
    if line.lstrip().startswith("#"):
        return ""
    return line.split("//", 1)[0]


def format_tm(m: TuringMachine) -> str:
    terms = [f"{c}*n^{k}" if k else str(c) for k, c in enumerate(m.poly) if c]
    out = [f"q0 {m.q0}", "F " + " ".join(sorted(m.accepting)), "p " + (" + ".join(terms) or "0")]
    out += [str(t) for t in m.transitions]
    return "\n".join(out) + "\n"


def tm_simulate(m: TuringMachine, w: str, max_steps: int) -> bool:
    """Breadth-first search of the configuration graph for an accepting state within ``max_steps``."""
    start = (m.q0, "", w)
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        (q, w1, w2), k = queue.popleft()
        if q in m.accepting:
            return True
        if k == max_steps:
            continue
        for nxt in tm_successors(m, q, w1, w2):
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, k + 1))
    return False


def tm_successors(m: TuringMachine, q: str, w1: str, w2: str) -> list[tuple[str, str, str]]:
    sym = w2[0] if w2 else BLANK
    rest = w2[1:]
    out = []
    for t in m.moves(q, sym):
        if t.move == "R":
            out.append((t.target, w1 + t.write, rest))
        elif w1:
            out.append((t.target, w1[:-1], w1[-1] + t.write + rest))
    return out


# ------------------------------------------------------------------ encoding

@dataclass(frozen=True)
class TapeEncoding:
    l1: Fraction
    c1: Fraction
    l2: Fraction
    c2: Fraction

    def as_dict(self) -> dict[str, Fraction]:
        return {"l1": self.l1, "c1": self.c1, "l2": self.l2, "c2": self.c2}


def val_left(w: str) -> Fraction:
    """Most significant bit rightmost."""
    return sum((Fraction(int(b), 2 ** (len(w) - i)) for i, b in enumerate(w)), Fraction(0))


def val_right(w: str) -> Fraction:
    """Most significant bit leftmost."""
    return sum((Fraction(int(b), 2 ** (i + 1)) for i, b in enumerate(w)), Fraction(0))


def encode(w1: str, w2: str = "") -> TapeEncoding:
    for w in (w1, w2):
        if set(w) - {"0", "1"}:
            raise ValueError(f"not a bit word: {w!r}")
    return TapeEncoding(Fraction(1, 2 ** len(w1)), val_left(w1), Fraction(1, 2 ** len(w2)), val_right(w2))


def _length(l: Fraction) -> int:
    n = 0
    while l < 1:
        l *= 2
        n += 1
    if l != 1:
        raise ValueError(f"{l} is not a power of 1/2")
    return n


def decode_left(l: Fraction, c: Fraction) -> str:
    n = _length(Fraction(l))
    bits = []
    c = Fraction(c)
    for _ in range(n):
        b = int(c >= Fraction(1, 2))
        bits.append(str(b))
        c = 2 * c - b
    if c != 0:
        raise ValueError("value does not fit the length")
    return "".join(reversed(bits))


def decode_right(l: Fraction, c: Fraction) -> str:
    n = _length(Fraction(l))
    bits = []
    c = Fraction(c)
    for _ in range(n):
        b = int(c >= Fraction(1, 2))
        bits.append(str(b))
        c = 2 * c - b
    if c != 0:
        raise ValueError("value does not fit the length")
    return "".join(bits)


def decode(enc: TapeEncoding) -> tuple[str, str]:
    return decode_left(enc.l1, enc.c1), decode_right(enc.l2, enc.c2)


# ------------------------------------------------------------------ automaton builder

def _rates(active: dict[str, int]) -> Rect:
    return Rect.of({v: Interval.point(active.get(v, 0)) for v in VARS})


HALF = Fraction(1, 2)


class _Builder:
    def __init__(self):
        self.locations: list[Location] = []
        self.edges: list[Edge] = []
        self._n = 0

    def loc(self, name: str, active: dict[str, int], inv: Rect = TRUE) -> str:
        self.locations.append(Location(name, _rates(active), inv))
        return name

    def fresh(self, prefix: str) -> str:
        self._n += 1
        return f"{prefix}_{self._n}"

    def edge(self, src: str, trg: str, guard: Rect = TRUE, reset: Iterable[str] = ()) -> None:
        self.edges.append(Edge(f"e{len(self.edges) + 1}", src, guard, frozenset(reset), trg))

    def junction(self, prefix: str) -> str:
        return self.loc(self.fresh(prefix), {"x": 1})

    def gadget(self, kind: str, v: str, entry: str, prefix: str) -> str:
        """Append a gadget acting on ``v`` after ``entry``; returns the exit junction."""
        if v not in ENC:
            raise ValueError(f"gadget target must be one of {ENC}")
        out = self.junction(prefix)
        le1 = lambda var: Rect.of({var: Interval(None, False, Fraction(1), False)})
        eq1 = lambda var: Rect.of({var: Interval.point(1)})
        if kind == "mul2":
            a = self.loc(self.fresh(f"{prefix}_mul2_{v}"), {v: 1, "z": 1, "x": 1}, le1(v))
            b = self.loc(self.fresh(f"{prefix}_mul2_{v}"), {v: 2, "z": 1, "x": 1}, le1("z"))
            self.edge(entry, a, reset=["z"])
            self.edge(a, b, eq1(v), [v])
            self.edge(b, out, eq1("z"))
        elif kind == "div2":
            a = self.loc(self.fresh(f"{prefix}_div2_{v}"), {v: 1, "z": 1, "u": 1, "x": 1}, le1(v))
            b = self.loc(self.fresh(f"{prefix}_div2_{v}"), {v: 1, "z": 2, "u": 1, "x": 1}, le1("z"))
            pad = self.loc(self.fresh(f"{prefix}_div2_{v}"), {"u": 1, "x": 1}, le1("u"))
            self.edge(entry, a, reset=["z", "u"])
            self.edge(a, b, eq1(v), [v])
            self.edge(b, pad, eq1("z"))
            self.edge(pad, out, eq1("u"))
        elif kind == "add_half":
            a = self.loc(self.fresh(f"{prefix}_add_{v}"), {v: 1, "z": 2, "x": 1}, le1("z"))
            self.edge(entry, a, reset=["z"])
            self.edge(a, out, eq1("z"))
        elif kind == "sub_half":
            a = self.loc(self.fresh(f"{prefix}_sub_{v}"), {v: 1, "z": 2, "x": 1}, le1(v))
            b = self.loc(self.fresh(f"{prefix}_sub_{v}"), {v: 1, "z": 2, "x": 1}, le1("z"))
            self.edge(entry, a, reset=["z"])
            self.edge(a, b, eq1(v), [v])
            self.edge(b, out, eq1("z"))
        else:
            raise ValueError(f"unknown gadget {kind}")
        return out

    def chain(self, ops: Sequence[tuple[str, str]], entry: str, prefix: str) -> str:
        cur = entry
        for kind, v in ops:
            cur = self.gadget(kind, v, cur, prefix)
        return cur


GADGETS = ("mul2", "div2", "add_half", "sub_half")


def gadget(kind: str, target: str) -> tuple[Automaton, str, str]:
    """A stand-alone gadget automaton with its entry and exit locations."""
    b = _Builder()
    entry = b.junction("in")
    out = b.gadget(kind, target, entry, "g")
    a = Automaton(f"{kind}_{target}", VARS, tuple(b.locations), tuple(b.edges), (entry,))
    return a, entry, out


def _guard(**items: Interval) -> Rect:
    return Rect.of(items)


def _le(q) -> Interval:
    return Interval(None, False, Fraction(q), False)


def _lt(q) -> Interval:
    return Interval(None, False, Fraction(q), True)


def _ge(q) -> Interval:
    return Interval(Fraction(q), False, None, False)


READ = {
    "1": _guard(l2=_le(HALF), c2=_ge(HALF)),
    "0": _guard(l2=_le(HALF), c2=_lt(HALF)),
    BLANK: _guard(l2=Interval.point(1)),
}
NOT_LEFTMOST = _guard(l1=_lt(1))
LEFT_BIT = {"1": _guard(c1=_ge(HALF)), "0": _guard(c1=_lt(HALF))}


def transition_ops(t: Transition) -> list[tuple[str, list[tuple[str, str]]]]:
    """Gadget sequences for one transition, one entry per branch on the bit left of the head.

    The first component is the left-bit test ('' when no test is needed).
    """
    if t.move == "R":
        ops: list[tuple[str, str]] = []
        if t.read != BLANK:
            # drop the front bit of w2 (the written bit goes straight to w1)
            if t.read == "1":
                ops.append(("sub_half", "c2"))
            ops += [("mul2", "c2"), ("mul2", "l2")]
        ops += [("div2", "l1"), ("div2", "c1")]
        if t.write == "1":
            ops.append(("add_half", "c1"))
        return [("", ops)]
    write: list[tuple[str, str]] = []
    if t.read == BLANK:
        write.append(("div2", "l2"))
        if t.write == "1":
            write.append(("add_half", "c2"))
    elif t.read != t.write:
        write.append(("add_half" if t.write == "1" else "sub_half", "c2"))
    out = []
    for b in ("0", "1"):
        ops = list(write)
        if b == "1":
            ops.append(("sub_half", "c1"))
        ops += [("mul2", "c1"), ("mul2", "l1"), ("div2", "l2"), ("div2", "c2")]
        if b == "1":
            ops.append(("add_half", "c2"))
        out.append((b, ops))
    return out


def block_duration(ops: Sequence[tuple[str, str]]) -> Fraction:
    return sum((Fraction(1) if k in ("mul2", "div2") else HALF for k, _ in ops), Fraction(0))


def control(q: str) -> str:
    return f"q_{q}"


@dataclass(frozen=True)
class TMInstance:
    automaton: Automaton
    goal: str
    T: Fraction
    init: tuple[tuple[str, Polyhedron], ...]
    steps: int

    def query(self, depth: int | None = None):
        from .boundedreach import Query

        return Query(self.automaton, self.goal, self.T, self.init, None, depth)


def compile_tm(m: TuringMachine, w: str) -> TMInstance:
    """SHA whose goal is reachable within 7*xi(|w|) iff m accepts w within xi(|w|) steps."""
    b = _Builder()
    for q in m.states:
        b.loc(control(q), {})
    b.loc(GOAL, {})
    for q in sorted(m.accepting):
        b.edge(control(q), GOAL)
    for k, t in enumerate(m.transitions, start=1):
        pre = f"t{k}"
        start = b.junction(pre)
        b.edge(control(t.state), start, NOT_LEFTMOST if t.move == "L" else TRUE, ["x"])
        read = b.junction(pre)
        b.edge(start, read, READ[t.read])
        pad = b.loc(b.fresh(f"{pre}_pad"), {"x": 1}, _guard(x=_le(STEP)))
        for bit, ops in transition_ops(t):
            entry = read
            if bit:
                entry = b.junction(pre)
                b.edge(read, entry, LEFT_BIT[bit])
            end = b.chain(ops, entry, pre)
            b.edge(end, pad)
        b.edge(pad, control(t.target), _guard(x=Interval.point(STEP)))
    a = Automaton(f"tm_{w or 'eps'}", VARS, tuple(b.locations), tuple(b.edges), (control(m.q0),))
    enc = encode("", w)
    val = {**enc.as_dict(), **{v: Fraction(0) for v in AUX}}
    init = Polyhedron.of(VARS, [constraint({v: 1}, EQ, q) for v, q in val.items()])
    xi = m.xi(len(w))
    return TMInstance(a, GOAL, Fraction(STEP * xi), ((control(m.q0), init),), xi)


def decode_state(v) -> tuple[str, str]:
    """Tape halves from a valuation of the encoding variables."""
    return decode_left(v["l1"], v["c1"]), decode_right(v["l2"], v["c2"])
