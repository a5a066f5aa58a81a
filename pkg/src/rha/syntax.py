"""Text format for automata.

    automaton fig1
    var x, y;
    init l0;
    loc l0 { inv: x <= 1; rate: x in [2,2], y = 1; }
    edge e01: l0 -> l1 { guard: x = 1; reset: {x}; }

Constants are integers (``p/q`` literals are accepted as an extension, used by
the Turing-machine compiler), ``oo`` is +infinity.  Diagonal atoms such as
``x - y <= 1`` are rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .arith import fmt_rational
from .model import Automaton, Edge, Interval, Location, Rect, TRUE


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


class ParseError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>(\#|//)[^\n]*)
    |(?P<str>"[^"\n]*")
    |(?P<num>\d+(/\d+)?)
    |(?P<id>[A-Za-z_][A-Za-z0-9_']*)
    |(?P<op><=|>=|==|->|&&|<|>|=|&|[-+*{}()\[\];:,])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    toks, line, start, pos = [], 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError([Diagnostic(line, pos - start + 1, f"unexpected character {text[pos]!r}")])
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(Tok(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - start + 1))
    return toks


_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "==": "="}
_RELOPS = {"<", "<=", "=", "==", ">=", ">"}
KEYWORDS = {"automaton", "var", "init", "loc", "edge", "inv", "rate", "guard", "reset", "in", "true", "oo", "and"}


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.diags: list[Diagnostic] = []

    # -- helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def advance(self) -> Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg: str, tok: Tok | None = None) -> None:
        t = tok or self.tok
        self.diags.append(Diagnostic(t.line, t.col, msg))

    def expect(self, text: str) -> Tok:
        t = self.tok
        if t.text != text:
            self.error(f"expected {text!r}, found {t.text or 'end of input'!r}")
            raise _Abort
        return self.advance()

    def ident(self) -> Tok:
        t = self.tok
        if t.kind == "str":
            self.advance()
            return Tok("id", t.text[1:-1], t.line, t.col)
        if t.kind != "id" or t.text in KEYWORDS:
            self.error(f"expected identifier, found {t.text or 'end of input'!r}")
            raise _Abort
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.tok.text == text:
            self.advance()
            return True
        return False

    def number(self) -> Fraction | None:
        """Signed rational or ``oo`` (returned as ``None``)."""
        neg = False
        if self.tok.text in ("-", "+"):
            neg = self.advance().text == "-"
        t = self.tok
        if t.text == "oo":
            self.advance()
            if neg:
                self.error("-oo is only meaningful as a lower bound", t)
            return None
        if t.kind != "num":
            self.error(f"expected number, found {t.text or 'end of input'!r}")
            raise _Abort
        self.advance()
        q = Fraction(t.text)
        return -q if neg else q

    # -- grammar
    def parse(self) -> Automaton:
        name = "automaton"
        variables: list[str] = []
        var_toks: dict[str, Tok] = {}
        init: list[Tok] = []
        locs: list[tuple[Tok, Rect, Rect, dict]] = []
        edges: list[tuple[Tok | None, Tok, Tok, Rect, list[Tok], Tok]] = []
        while self.tok.kind != "eof":
            try:
                t = self.tok
                if self.accept("automaton"):
                    name = self.ident().text
                    self.accept(";")
                elif self.accept("var"):
                    while True:
                        v = self.ident()
                        if v.text in var_toks:
                            self.error(f"duplicate variable {v.text}", v)
                        else:
                            var_toks[v.text] = v
                            variables.append(v.text)
                        if not self.accept(","):
                            break
                    self.expect(";")
                elif self.accept("init"):
                    while True:
                        init.append(self.ident())
                        if not self.accept(","):
                            break
                    self.expect(";")
                elif self.accept("loc"):
                    locs.append(self.location(set(variables)))
                elif self.accept("edge"):
                    edges.append(self.edge(set(variables)))
                else:
                    self.error(f"unexpected {t.text!r}")
                    raise _Abort
            except _Abort:
                self.recover()
        loc_names = {lt.text for lt, *_ in locs}
        locations = []
        seen: set[str] = set()
        for lt, rates, inv, rate_toks in locs:
            if lt.text in seen:
                self.error(f"duplicate location {lt.text}", lt)
            seen.add(lt.text)
            for v in variables:
                if v not in rate_toks:
                    self.error(f"location {lt.text}: missing rate for variable {v}", lt)
            locations.append(Location(lt.text, rates, inv))
        for it in init:
            if it.text not in loc_names:
                self.error(f"unknown location {it.text}", it)
        built = []
        names: set[str] = set()
        for k, (nt, src, trg, guard, reset, at) in enumerate(edges):
            for end in (src, trg):
                if end.text not in loc_names:
                    self.error(f"unknown location {end.text}", end)
            ename = nt.text if nt else f"e{k}"
            if ename in names:
                self.error(f"duplicate edge name {ename}", nt or at)
            names.add(ename)
            built.append(Edge(ename, src.text, guard, frozenset(r.text for r in reset), trg.text))
        if self.diags:
            raise ParseError(self.diags)
        return Automaton(name, tuple(variables), tuple(locations), tuple(built), tuple(t.text for t in init))

    def recover(self) -> None:
        depth = 0
        while self.tok.kind != "eof":
            t = self.advance()
            if t.text == "{":
                depth += 1
            elif t.text == "}":
                depth -= 1
                if depth <= 0:
                    return
            elif t.text == ";" and depth == 0:
                return

    def location(self, xs: set[str]):
        lt = self.ident()
        self.expect("{")
        inv: Rect = TRUE
        rates: dict[str, Interval] = {}
        rate_toks: dict = {}
        while not self.accept("}"):
            key = self.tok
            if self.accept("inv"):
                self.expect(":")
                inv = self.conjunction(xs)
            elif self.accept("rate"):
                self.expect(":")
                while True:
                    v = self.ident()
                    if v.text not in xs:
                        self.error(f"unknown identifier {v.text}", v)
                    if v.text in rate_toks:
                        self.error(f"rate for {v.text} given twice", v)
                    iv = self.rate_interval(v)
                    rate_toks[v.text] = v
                    if iv is not None:
                        rates[v.text] = iv
                    if not self.accept(","):
                        break
            else:
                self.error(f"expected 'inv' or 'rate', found {key.text!r}")
                raise _Abort
            self.expect(";")
        return lt, Rect.of(rates), inv, rate_toks

    def rate_interval(self, v: Tok) -> Interval | None:
        at = self.tok
        if self.accept("="):
            q = self.number()
            if q is None:
                self.error("rate cannot be infinite", at)
                return None
            iv = Interval.point(q)
        else:
            self.expect("in")
            iv = self.interval()
            if iv is None:
                return None
        if iv.lo is None or iv.lo < 0:
            self.error(f"negative rate for {v.text} ({iv})", at)
            return None
        return iv

    def interval(self) -> Interval | None:
        at = self.tok
        if self.tok.text not in ("[", "("):
            self.error("expected '[' or '('")
            raise _Abort
        ls = self.advance().text == "("
        neg_inf = False
        if self.tok.text == "-" and self.toks[self.i + 1].text == "oo":
            self.advance()
            self.advance()
            lo, neg_inf = None, True
        else:
            lo = self.number()
            if lo is None:
                self.error("lower bound cannot be +oo", at)
                return None
        self.expect(",")
        hi = self.number()
        if self.tok.text not in ("]", ")"):
            self.error("expected ']' or ')'")
            raise _Abort
        hs = self.advance().text == ")"
        del neg_inf
        try:
            return Interval(lo, ls, hi, hs)
        except ValueError as exc:
            self.error(str(exc), at)
            return None

    def conjunction(self, xs: set[str]) -> Rect:
        pairs: list[tuple[str, Interval]] = []
        at = self.tok
        while True:
            if not self.accept("true"):
                pairs.extend(self.atom(xs))
            if not (self.accept("&") or self.accept("&&") or self.accept("and") or self.accept(",")):
                break
        try:
            return Rect.of(pairs)
        except ValueError as exc:
            self.error(str(exc), at)
            return TRUE

    def _side(self) -> tuple[list[Tok], Fraction | None, Tok]:
        """A linear side: identifiers and a constant, used to detect diagonals."""
        start = self.tok
        idents: list[Tok] = []
        const: Fraction | None = None
        first = True
        while True:
            sign = None
            if self.tok.text in ("+", "-"):
                sign = self.advance()
            elif not first:
                break
            t = self.tok
            if t.kind == "num" and self.toks[self.i + 1].text == "*":
                self.advance()
                self.advance()
                idents.append(self.ident())
            elif t.kind == "num" or t.text == "oo":
                if sign is not None:
                    self.i -= 1
                q = self.number()
                const = q if const is None else const + (q or 0)
            elif t.kind == "id" and t.text not in KEYWORDS:
                idents.append(self.advance())
            else:
                self.error(f"expected variable or number, found {t.text or 'end of input'!r}")
                raise _Abort
            first = False
        return idents, const, start

    def atom(self, xs: set[str]) -> list[tuple[str, Interval]]:
        sides = [self._side()]
        ops: list[Tok] = []
        if self.tok.text == "in":
            self.advance()
            idents, const, st = sides[0]
            iv = self.interval()
            if len(idents) != 1 or const is not None:
                self.error("'in' expects a single variable on the left", st)
                return []
            return self.check_var(idents[0], xs) + ([(idents[0].text, iv)] if iv else [])
        while self.tok.text in _RELOPS:
            ops.append(self.advance())
            sides.append(self._side())
        if not ops:
            self.error(f"expected comparison operator, found {self.tok.text or 'end of input'!r}")
            raise _Abort
        out: list[tuple[str, Interval]] = []
        for k, op in enumerate(ops):
            (li, lc, lt), (ri, rc, _) = sides[k], sides[k + 1]
            idents = li + ri
            if len(idents) > 1:
                self.error("diagonal constraints unsupported (undecidable per paper)", lt)
                continue
            if not idents:
                self.error("comparison without a variable", lt)
                continue
            if (li and lc is not None) or (ri and rc is not None):
                self.error("diagonal constraints unsupported (undecidable per paper)", lt)
                continue
            var = idents[0]
            rel = op.text if li else _FLIP[op.text]
            bound = rc if li else lc
            if bound is None:
                self.error("comparison against infinity", op)
                continue
            out.extend(self.check_var(var, xs))
            if var.text in xs:
                out.append((var.text, _rel_interval(rel, bound)))
        return out

    def check_var(self, tok: Tok, xs: set[str]) -> list:
        if tok.text not in xs:
            self.error(f"unknown identifier {tok.text}", tok)
        return []

    def edge(self, xs: set[str]):
        at = self.tok
        name = None
        if self.toks[self.i + 1].text == ":":
            name = self.ident()
            self.expect(":")
        src = self.ident()
        self.expect("->")
        trg = self.ident()
        guard: Rect = TRUE
        reset: list[Tok] = []
        if self.accept("{"):
            while not self.accept("}"):
                key = self.tok
                if self.accept("guard"):
                    self.expect(":")
                    guard = self.conjunction(xs)
                elif self.accept("reset"):
                    self.expect(":")
                    self.expect("{")
                    while not self.accept("}"):
                        v = self.ident()
                        if v.text not in xs:
                            self.error(f"unknown identifier {v.text}", v)
                        reset.append(v)
                        self.accept(",")
                else:
                    self.error(f"expected 'guard' or 'reset', found {key.text!r}")
                    raise _Abort
                self.expect(";")
        else:
            self.expect(";")
        return name, src, trg, guard, [r for r in reset if r.text in xs], at


class _Abort(Exception):
    pass


def _rel_interval(rel: str, b: Fraction) -> Interval:
    if rel in ("=", "=="):
        return Interval.point(b)
    if rel == "<=":
        return Interval(None, False, b, False)
    if rel == "<":
        return Interval(None, False, b, True)
    if rel == ">=":
        return Interval(b, False, None, False)
    return Interval(b, True, None, False)


def parse(text: str) -> Automaton:
    """Parse an automaton; raises :class:`ParseError` with positioned diagnostics."""
    return _Parser(text).parse()


def parse_file(path) -> Automaton:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


_PLAIN = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


def fmt_name(name: str) -> str:
    return name if _PLAIN.match(name) and name not in KEYWORDS else f'"{name}"'


def _fmt_num(q: Fraction | None) -> str:
    return "oo" if q is None else fmt_rational(q)


def _fmt_rate(v: str, iv: Interval) -> str:
    if iv.is_point:
        return f"{v} = {fmt_rational(iv.lo)}"
    lb = "(" if iv.lo_strict else "["
    rb = ")" if iv.hi is None or iv.hi_strict else "]"
    return f"{v} in {lb}{_fmt_num(iv.lo)},{_fmt_num(iv.hi)}{rb}"


def format_automaton(a: Automaton) -> str:
    lines = [f"automaton {fmt_name(a.name)}"]
    if a.variables:
        lines.append(f"var {', '.join(a.variables)};")
    lines.append(f"init {', '.join(map(fmt_name, a.init))};")
    for loc in a.locations:
        body = []
        if not loc.inv.is_true:
            body.append(f"inv: {loc.inv};")
        if loc.rates.items:
            body.append("rate: " + ", ".join(_fmt_rate(v, iv) for v, iv in loc.rates.items) + ";")
        lines.append(f"loc {fmt_name(loc.name)} {{ {' '.join(body)} }}")
    for e in a.edges:
        body = []
        if not e.guard.is_true:
            body.append(f"guard: {e.guard};")
        if e.reset:
            body.append(f"reset: {{{', '.join(sorted(e.reset))}}};")
        lines.append(f"edge {fmt_name(e.name)}: {fmt_name(e.src)} -> {fmt_name(e.trg)} {{ {' '.join(body)} }}")
    return "\n".join(lines) + "\n"
