"""Run splitting (type-0/1/2/3), contraction of timed paths and the length bound F(H,T)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .model import Automaton, Edge, add_self_loops, self_loop_name
from .regionize import RegionAutomaton, lift_run, project_run
from .semantics import ReplayError, Run, TimedStep, run_of


class ContractionError(AssertionError):
    """Replay of a contracted path failed; this contradicts the soundness theorem."""


# ------------------------------------------------------------------ type-0

def split_type0(h1: Automaton, run: Run, rmax: Fraction | None = None) -> list[Run]:
    """Cut a run of H' into pieces of duration ``< 1/rmax`` by inserting self-loops.

    ``h1`` must contain the synthetic self-loops.  The pieces all have the same
    duration ``D/(floor(D*rmax)+1)``, so there are ``floor(D*rmax)+1`` of them.
    """
    rmax = h1.rmax if rmax is None else Fraction(rmax)
    total = run.duration
    if rmax == 0 or total == 0:
        return [run]
    m = math.floor(total * rmax) + 1
    piece = total / m
    cuts = [piece * k for k in range(1, m)]
    loops = {e.src: e for e in h1.edges if e.synthetic and e.src == e.trg}
    steps: list[TimedStep] = []
    cut_positions: list[int] = []  # state indices in the new run
    elapsed = Fraction(0)
    ci = 0
    for st in run.steps:
        end = elapsed + st.delay
        offset = elapsed
        while ci < len(cuts) and cuts[ci] < end:
            c = cuts[ci]
            ci += 1
            if c > offset:
                loop = loops.get(st.edge.src)
                if loop is None:
                    raise ValueError(f"no synthetic self-loop at {st.edge.src}; apply add_self_loops first")
                steps.append(TimedStep(c - offset, st.rates, loop))
                offset = c
            cut_positions.append(len(steps))
        steps.append(TimedStep(end - offset, st.rates, st.edge))
        elapsed = end
    full = run_of(h1, run.first, steps)
    bounds = [0, *cut_positions, full.n]
    return [full.slice(bounds[k], bounds[k + 1]) for k in range(len(bounds) - 1)]


# ------------------------------------------------------------------ type-2 / type-3

def _floor(q: Fraction) -> int:
    return math.floor(q)


def _frac(q: Fraction) -> Fraction:
    return q - math.floor(q)


def compute_S(run: Run) -> list[int]:
    """Positions ``0 < i <= n`` where some variable changes region (except 0+ to (0,1))."""
    out = []
    for i in range(1, run.n + 1):
        a, b = run.states[i - 1].v, run.states[i].v
        for x in a:
            fa, fb = _floor(a[x]), _floor(b[x])
            if fa != fb or (fa > 0 and _frac(a[x]) == 0 < _frac(b[x])):
                out.append(i)
                break
    return out


@dataclass
class Decomposition:
    pieces: list[tuple[str, Run]] = field(default_factory=list)

    def of_kind(self, kind: str) -> list[Run]:
        return [r for k, r in self.pieces if k == kind]

    @property
    def separators(self) -> list[Run]:
        return self.of_kind("separator")

    def concat(self) -> Run:
        out = self.pieces[0][1]
        for _, r in self.pieces[1:]:
            out = out.concat(r)
        return out


def _split_at(run: Run, positions: Sequence[int], kind: str) -> Decomposition:
    d = Decomposition()
    prev = 0
    for p in sorted(set(positions)):
        d.pieces.append((kind, run.slice(prev, p - 1)))
        d.pieces.append(("separator", run.slice(p - 1, p)))
        prev = p
    d.pieces.append((kind, run.slice(prev, run.n)))
    return d


def split_type2(run: Run) -> Decomposition:
    return _split_at(run, compute_S(run), "type2")


def reset_positions(run: Run) -> tuple[list[int], list[int]]:
    """``(FR, LR)``: edge indices of first and last resets, over all variables."""
    first: dict[str, int] = {}
    last: dict[str, int] = {}
    for i, st in enumerate(run.steps, start=1):
        for x in st.edge.reset:
            first.setdefault(x, i)
            last[x] = i
    return sorted(set(first.values())), sorted(set(last.values()))


def split_type3(run: Run) -> Decomposition:
    fr, lr = reset_positions(run)
    return _split_at(run, sorted(set(fr) | set(lr)), "type3")


def type2_violations(run: Run) -> list[str]:
    """Per-variable trichotomy of type-2 runs."""
    out = []
    reset = {x for st in run.steps for x in st.edge.reset}
    for x in run.first.v:
        vals = [s[x] for s in run.states]
        if all(v == vals[0] for v in vals) and vals[0] >= 1 and vals[0].denominator == 1 and x not in reset:
            continue
        a = _floor(vals[0])
        if a >= 1 and x not in reset and all(_floor(v) == a and _frac(v) > 0 for v in vals):
            continue
        if all(0 <= v < 1 for v in vals):
            continue
        out.append(f"variable {x} breaks the type-2 trichotomy: {[str(v) for v in vals]}")
    return out


# ------------------------------------------------------------------ Cnt

def path_locations(path: Sequence[TimedStep]) -> list[str]:
    if not path:
        return []
    return [path[0].edge.src] + [st.edge.trg for st in path]


Choice = tuple[int, int, dict[int, int]]


def find_choice(locs: Sequence[str]) -> Choice | None:
    """Deterministic (i, j, h): smallest j, then largest i, h(p) the first matching index."""
    n = len(locs) - 1
    first: dict[str, int] = {}
    firsts: list[dict[str, int]] = []  # firsts[i] = first occurrences in locs[0:i]
    for k in range(n + 1):
        firsts.append(dict(first))
        first.setdefault(locs[k], k)
    for j in range(1, n):
        for i in range(j - 1, -1, -1):
            if locs[i] != locs[j]:
                continue
            pre = firsts[i]
            if all(locs[p] in pre for p in range(i + 1, j)):
                return i, j, {p: pre[locs[p]] for p in range(i + 1, j)}
    return None


def check_choice(locs: Sequence[str], choice: Choice) -> None:
    i, j, h = choice
    n = len(locs) - 1
    if not (0 <= i < j < n):
        raise ValueError(f"need 0 <= i < j < n, got i={i}, j={j}, n={n}")
    if locs[i] != locs[j]:
        raise ValueError("locations at i and j differ")
    if set(h) != set(range(i + 1, j)):
        raise ValueError("h must be defined exactly on i+1..j-1")
    for p, q in h.items():
        if not (0 <= q < i) or locs[p] != locs[q]:
            raise ValueError(f"h({p}) = {q} is not an earlier occurrence of the same location")


def contraction_map(n: int, choice: Choice) -> list[tuple[int, list[int]]]:
    """For each new step: (index of the kept edge, indices of the merged delays), 1-based."""
    i, j, h = choice
    out = []
    for p in range(1, i + 1):
        out.append((p, [p] + [k + 1 for k in sorted(h) if h[k] == p - 1]))
    out.append((j + 1, [i + 1, j + 1]))
    for p in range(i + 2, n - (j - i) + 1):
        out.append((p + j - i, [p + j - i]))
    return out


def merge_steps(steps: Sequence[TimedStep], edge: Edge) -> TimedStep:
    """Sum delays; rates become the delay-weighted average (first step's rates if no time passes)."""
    total = sum((s.delay for s in steps), Fraction(0))
    if total == 0:
        rates = steps[0].rates
    else:
        xs = [x for x, _ in steps[0].rates]
        acc = {x: Fraction(0) for x in xs}
        for s in steps:
            for x, r in s.rates:
                acc[x] += s.delay * r
        rates = tuple((x, acc[x] / total) for x in xs)
    return TimedStep(total, rates, edge)


def cnt_once(path: Sequence[TimedStep], choice: Choice | None = None) -> tuple[TimedStep, ...]:
    """One application of Cnt; returns ``path`` unchanged when no choice applies."""
    locs = path_locations(path)
    if choice is None:
        choice = find_choice(locs)
        if choice is None:
            return tuple(path)
    else:
        check_choice(locs, choice)
    return tuple(
        merge_steps([path[k - 1] for k in merged], path[e - 1].edge) for e, merged in contraction_map(len(path), choice)
    )


def cnt_star(path: Sequence[TimedStep]) -> tuple[TimedStep, ...]:
    cur = tuple(path)
    while True:
        nxt = cnt_once(cur)
        if len(nxt) == len(cur):
            return cur
        cur = nxt


def contract_type2(ra: RegionAutomaton, run: Run) -> Run:
    """Cnt of a type-2 run of the region automaton: Cnt* on each type-3 piece, separators kept."""
    dec = split_type3(run)
    path: list[TimedStep] = []
    for kind, piece in dec.pieces:
        path.extend(piece.steps if kind == "separator" else cnt_star(piece.steps))
    try:
        out = run_of(ra, run.first, path)
    except ReplayError as exc:
        raise ContractionError(f"contracted path does not replay: {exc}") from exc
    if out.last != run.last:
        raise ContractionError(f"contracted run ends in {out.last}, expected {run.last}")
    return out


# ------------------------------------------------------------------ bounds

@dataclass(frozen=True)
class BoundReport:
    paper: int
    internal: int

    @property
    def depth(self) -> int:
        return max(self.paper, self.internal)


def _sizes(a: Automaton, T) -> tuple[int, int, int, int]:
    nx = max(1, len(a.variables))
    nloc = len(a.locations)
    k = math.ceil(Fraction(T) * a.rmax) + 1
    return nx, nloc, k, int(a.cmax)


def bound_F(a: Automaton, T) -> BoundReport:
    """The printed F(H,T) and the internal bound built from the exact label count."""
    nx, nloc, k, cmax = _sizes(a, T)
    paper = 24 * k * nx**2 * nloc**2 * (2 * cmax + 1) ** (2 * nx)
    internal = 48 * k * nx**2 * (nloc * (2 * cmax + 3) ** nx) ** 2
    return BoundReport(paper, internal)


# ------------------------------------------------------------------ pipeline

@dataclass
class ContractReport:
    length_before: int
    length_after: int
    type1_pieces: int
    type2_pieces: int
    bound: BoundReport
    per_piece: list[tuple[int, int]] = field(default_factory=list)
    length_folded: int = 0  # after folding synthetic self-loops back into real edges

    def to_json(self) -> dict:
        return {
            "length_before": self.length_before,
            "length_after": self.length_after,
            "type1_pieces": self.type1_pieces,
            "type2_pieces": self.type2_pieces,
            "bound_paper": self.bound.paper,
            "bound_internal": self.bound.internal,
            "per_piece": [list(p) for p in self.per_piece],
            "length_folded": self.length_folded,
        }


def contract_run(a: Automaton, run: Run, T=None) -> tuple[Run, ContractReport]:
    """Full pipeline on a run of H: type-0 split, lift, type-2 split, contraction, projection to H'."""
    ra = RegionAutomaton(a)
    h1 = ra.base
    pieces = split_type0(h1, run_of(h1, run.first, run.steps))
    whole = pieces[0]
    for p in pieces[1:]:
        whole = whole.concat(p)
    lifted = lift_run(ra, whole)
    out_steps: list[TimedStep] = []
    n1 = n2 = 0
    per_piece = []
    pos = 0
    for p in pieces:
        n1 += 1
        seg = lifted.slice(pos, pos + p.n)
        pos += p.n
        for kind, q in split_type2(seg).pieces:
            if kind == "separator":
                out_steps.extend(q.steps)
                continue
            n2 += 1
            c = contract_type2(ra, q)
            per_piece.append((q.length, c.length))
            out_steps.extend(c.steps)
    contracted = run_of(ra, lifted.first, out_steps)
    assert contracted.last == lifted.last
    result = project_run(ra, contracted)
    T = run.duration if T is None else T
    folded = drop_self_loops(a, result)
    rep = ContractReport(run.length, result.length, n1, n2, bound_F(a, T), per_piece, folded.length)
    return result, rep


def drop_self_loops(a: Automaton, run: Run) -> Run:
    """Fold synthetic self-loop steps into the following step (valid by convexity)."""
    steps: list[TimedStep] = []
    pending: list[TimedStep] = []
    for st in run.steps:
        if st.edge.synthetic:
            pending.append(st)
            continue
        steps.append(merge_steps(pending + [st], st.edge) if pending else st)
        pending = []
    if pending:
        # trailing loops: keep a single loop carrying the remaining time
        steps.append(merge_steps(pending, pending[-1].edge))
    return run_of(add_self_loops(a) if pending else a, run.first, steps)


__all__ = [
    "BoundReport",
    "ContractionError",
    "Decomposition",
    "bound_F",
    "cnt_once",
    "cnt_star",
    "compute_S",
    "contract_run",
    "contract_type2",
    "contraction_map",
    "find_choice",
    "split_type0",
    "split_type2",
    "drop_self_loops",
    "split_type3",
    "self_loop_name",
]
