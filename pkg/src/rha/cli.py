"""Command-line front end: ``rha <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import random
import sys
import traceback
from fractions import Fraction
from pathlib import Path

from .arith import DimensionError, Polyhedron, fmt_rational, parse_conjunction
from .model import validate

EXIT_YES, EXIT_NO, EXIT_INCONCLUSIVE = 0, 1, 2
EXIT_USAGE, EXIT_INTERNAL = 64, 70

VERSION = "0.1.0"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ------------------------------------------------------------------ helpers

def _rational(text: str) -> Fraction:
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")
    if q < 0:
        raise argparse.ArgumentTypeError("time bound must be non-negative")
    return q


def _load(path: str):
    from .syntax import parse_file

    p = Path(path)
    if not p.exists():
        from . import corpus

        if p.name in corpus.FILES or p.name + ".rha" in corpus.FILES:
            return corpus.load(p.name)
        raise UsageError(f"no such file: {path}")
    return parse_file(p)


def parse_goal(a, spec: str) -> tuple[str, Polyhedron | None]:
    """``l1`` or ``l1: y = 1/4``."""
    loc, _, rest = spec.partition(":")
    loc = loc.strip()
    if not a.has_location(loc):
        raise UsageError(f"unknown goal location {loc}")
    if not rest.strip():
        return loc, None
    return loc, Polyhedron.of(a.variables, parse_conjunction(rest))


def parse_init(a, spec: str | None) -> dict[str, Polyhedron] | None:
    """``loc: CONJ; loc2: CONJ``; variables left out are unconstrained."""
    if not spec:
        return None
    out = {}
    for part in spec.split(";"):
        if not part.strip():
            continue
        loc, region = parse_goal(a, part)
        out[loc] = region if region is not None else Polyhedron.top(a.variables)
    return out


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _write(path: str, content: str) -> None:
    Path(path).write_text(content, encoding="utf-8")


# ------------------------------------------------------------------ subcommands

def cmd_validate(args) -> int:
    a = _load(args.file)
    v = validate(a)
    payload = {
        "name": a.name,
        "ok": v.ok,
        "singular": v.singular,
        "variables": list(a.variables),
        "locations": len(a.locations),
        "edges": len(a.edges),
        "rmax": fmt_rational(a.rmax),
        "cmax": fmt_rational(a.cmax),
        "diagnostics": list(v.diagnostics),
        "notes": list(v.notes),
    }
    lines = [
        f"automaton: {a.name}",
        f"singular: {'true' if v.singular else 'false'}",
        f"variables: {', '.join(a.variables)}",
        f"locations: {len(a.locations)}  edges: {len(a.edges)}",
        f"rmax: {fmt_rational(a.rmax)}  cmax: {fmt_rational(a.cmax)}",
    ]
    lines += [f"error: {d}" for d in v.diagnostics] + [f"note: {n}" for n in v.notes]
    _emit(args, payload, "\n".join(lines))
    return 0 if v.ok else EXIT_USAGE


def cmd_check(args) -> int:
    from .boundedreach import Query, Verdict, decide
    from .semantics import run_to_json

    a = _load(args.file)
    goal, region = parse_goal(a, args.goal)
    init = parse_init(a, args.init)
    q = Query(a, goal, args.bound, tuple(init.items()) if init else (), region, args.depth)
    res = decide(q)
    payload = {
        "verdict": res.verdict.value,
        "depth": res.depth,
        "nodes": res.nodes,
        "completeness_depth": res.completeness_depth,
        "path": list(res.path),
    }
    if res.witness is not None:
        payload["witness"] = run_to_json(res.witness)
        if args.witness:
            _write(args.witness, json.dumps(run_to_json(res.witness), indent=2, sort_keys=True) + "\n")
    text = [f"{res.verdict.value}  (depth {res.depth}, {res.nodes} nodes)"]
    if res.witness is not None:
        text.append(f"path: {' '.join(res.path) or '(empty)'}")
        text.append(f"duration: {fmt_rational(res.witness.duration)}")
        text.append(f"last: {res.witness.last}")
    _emit(args, payload, "\n".join(text))
    return {Verdict.YES: EXIT_YES, Verdict.NO: EXIT_NO}.get(res.verdict, EXIT_INCONCLUSIVE)


def _fixpoint(args, backward: bool) -> int:
    from .fixpoint import FixpointError, coreach_T, goal_region, initial_region, reach_T

    a = _load(args.file)
    if backward:
        if not args.goal:
            raise UsageError("coreach needs --goal")
        loc, region = parse_goal(a, args.goal)
        R0 = goal_region(a, loc, region)
        run = coreach_T
    else:
        R0 = initial_region(a, parse_init(a, args.init))
        run = reach_T
    try:
        tr = run(R0, a, args.bound, args.cap)
    except FixpointError as exc:
        print(f"error: {exc}; last iterate has {exc.trace.result.size()} polyhedra", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    res = tr.result
    payload = {**res.to_json(), "iterations": tr.iterations, "stabilized": tr.stabilized}
    if args.out:
        _write(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    text = [f"{'coreach' if backward else 'reach'}: stabilized after {tr.iterations} iterations"]
    text += [f"{k}: {u}" for k, u in res.items]
    _emit(args, payload, "\n".join(text))
    return 0


def cmd_reach(args) -> int:
    return _fixpoint(args, backward=False)


def cmd_coreach(args) -> int:
    return _fixpoint(args, backward=True)


def cmd_contract(args) -> int:
    from .contraction import contract_run, drop_self_loops
    from .model import add_self_loops
    from .randgen import random_run
    from .semantics import run_from_json, run_to_json

    a = _load(args.file)
    if args.run:
        obj = json.loads(Path(args.run).read_text(encoding="utf-8"))
        run = run_from_json(add_self_loops(a), obj)  # witnesses may end on a self-loop wait
    else:
        run = random_run(random.Random(args.seed), a, args.steps)
    out, rep = contract_run(a, run, args.bound)
    out = drop_self_loops(a, out)
    payload = {"report": rep.to_json(), "input": run_to_json(run), "contracted": run_to_json(out)}
    if args.out:
        _write(args.out, json.dumps(run_to_json(out), indent=2, sort_keys=True) + "\n")
    b = rep.bound
    text = [
        f"length {rep.length_before} -> {rep.length_folded} "
        f"({rep.length_after} with self-loops; {rep.type1_pieces} type-1 pieces, {rep.type2_pieces} type-2 pieces)",
        f"bound F: printed {b.paper}, internal {b.internal}",
        f"last state: {out.last}",
    ]
    _emit(args, payload, "\n".join(text))
    return 0


def cmd_regionize(args) -> int:
    from .syntax import format_automaton
    from .regionize import build_region_automaton

    a = _load(args.file)
    ra, reg = build_region_automaton(a, full=args.full)
    payload = {
        "locations": len(reg.locations),
        "edges": len(reg.edges),
        "location_bound": ra.location_bound(),
        "init": list(reg.init),
    }
    if args.out:
        _write(args.out, format_automaton(reg))
    text = f"{len(reg.locations)} locations, {len(reg.edges)} edges (product bound {ra.location_bound()})"
    _emit(args, payload, text)
    return 0


def cmd_tm_compile(args) -> int:
    from .syntax import format_automaton
    from .tmreduce import compile_tm, parse_tm, tm_simulate

    p = Path(args.tm)
    if not p.exists():
        raise UsageError(f"no such file: {args.tm}")
    m = parse_tm(p.read_text(encoding="utf-8"))
    inst = compile_tm(m, args.word)
    loc, init = inst.init[0]
    init_spec = f"{loc}: " + " & ".join(str(c) for c in init.constraints)
    payload = {
        "goal": inst.goal,
        "bound": fmt_rational(inst.T),
        "steps": inst.steps,
        "init": init_spec,
        "locations": len(inst.automaton.locations),
        "edges": len(inst.automaton.edges),
    }
    if args.out:
        header = f"# goal {inst.goal}, bound {fmt_rational(inst.T)}\n# init {init_spec}\n"
        _write(args.out, header + format_automaton(inst.automaton))
    text = [
        f"{len(inst.automaton.locations)} locations, {len(inst.automaton.edges)} edges",
        f"goal: {inst.goal}  bound: {fmt_rational(inst.T)}  (xi = {inst.steps})",
        f"init: {init_spec}",
    ]
    if args.check:
        from .boundedreach import decide

        res = decide(inst.query())
        sim = tm_simulate(m, args.word, inst.steps)
        payload["verdict"] = res.verdict.value
        payload["simulated"] = sim
        text.append(f"reachability: {res.verdict.value}  simulation: {'accept' if sim else 'reject'}")
    _emit(args, payload, "\n".join(text))
    return 0


def cmd_golden(args) -> int:
    from .corpus import run_all

    results, tap = run_all()
    if args.json:
        print(json.dumps([{"name": r.case.name, "passed": r.passed, "provenance": r.case.provenance,
                           "report": r.report()} for r in results], indent=2))
    else:
        sys.stdout.write(tap)
    return 0 if all(r.passed for r in results) else 1


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rha", description="Time-bounded reachability for rectangular hybrid automata.")
    p.add_argument("--version", action="version", version=f"rha {VERSION}")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--json", action="store_true", help="machine-readable output")

    sp = sub.add_parser("validate", help="parse and validate an automaton")
    sp.add_argument("file")
    common(sp)
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("check", help="decide time-bounded reachability by bounded path search")
    sp.add_argument("file")
    sp.add_argument("--goal", required=True, help="LOC or 'LOC: CONJ'")
    sp.add_argument("--bound", required=True, type=_rational, help="time bound T")
    sp.add_argument("--depth", type=int, help="search depth (default: completeness bound)")
    sp.add_argument("--init", help="'LOC: CONJ; ...' (default: zero valuation in the initial locations)")
    sp.add_argument("--witness", help="write the witness run as JSON")
    common(sp)
    sp.set_defaults(fn=cmd_check)

    for name, fn in (("reach", cmd_reach), ("coreach", cmd_coreach)):
        sp = sub.add_parser(name, help=f"time-bounded {name} set by symbolic fixpoint")
        sp.add_argument("file")
        sp.add_argument("--bound", required=True, type=_rational)
        sp.add_argument("--init", help="'LOC: CONJ; ...' start region (reach)")
        sp.add_argument("--goal", help="LOC or 'LOC: CONJ' target region (coreach)")
        sp.add_argument("--cap", type=int, help="iteration cap (default: RHA_ITER_CAP or completeness bound)")
        sp.add_argument("--out", help="write the region as JSON")
        common(sp)
        sp.set_defaults(fn=fn)

    sp = sub.add_parser("contract", help="contract a run and report the length bound")
    sp.add_argument("file")
    sp.add_argument("--run", help="run JSON (as written by check --witness)")
    sp.add_argument("--seed", type=int, default=0, help="random run seed when --run is absent")
    sp.add_argument("--steps", type=int, default=10)
    sp.add_argument("--bound", type=_rational, help="T used for the bound report (default: run duration)")
    sp.add_argument("--out", help="write the contracted run as JSON")
    common(sp)
    sp.set_defaults(fn=cmd_contract)

    sp = sub.add_parser("regionize", help="build the region automaton")
    sp.add_argument("file")
    sp.add_argument("--full", action="store_true", help="materialize the full product")
    sp.add_argument("--out", help="write the region automaton in .rha syntax")
    common(sp)
    sp.set_defaults(fn=cmd_regionize)

    sp = sub.add_parser("tm-compile", help="compile a Turing machine and word into an SHA")
    sp.add_argument("tm")
    sp.add_argument("--word", required=True)
    sp.add_argument("--out", help="write the automaton in .rha syntax")
    sp.add_argument("--check", action="store_true", help="also decide reachability and simulate")
    common(sp)
    sp.set_defaults(fn=cmd_tm_compile)

    sp = sub.add_parser("golden", help="run the bundled golden suite (TAP output)")
    common(sp)
    sp.set_defaults(fn=cmd_golden)
    return p


def main(argv: list[str] | None = None) -> int:
    from .semantics import ReplayError
    from .syntax import ParseError

    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"rha: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        for d in exc.diagnostics:
            print(f"{getattr(args, 'file', '')}:{d}", file=sys.stderr)
        return EXIT_USAGE
    except (DimensionError, KeyError, ValueError, OSError, ReplayError) as exc:
        print(f"rha: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        print("rha: internal error; please report with the dump below", file=sys.stderr)
        print(f"version: {VERSION}\nargv: {argv}", file=sys.stderr)
        traceback.print_exc(file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
