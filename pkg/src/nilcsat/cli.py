"""Command-line entry point: ``nilcsat <subcommand> ...``.

Every subcommand prints one report (JSON by default).  Exit status: 0 when
the question was decided or the artifact produced, 2 for GIVE_UP or answers
that only hold up to a support bound, 1 for usage, parse and ceiling errors.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import random
import sys
import time
from pathlib import Path

from . import algebra as alg
from .algebra import AlgebraSpec, DElem
from .canonical import canonicalize
from .ccircuit import extract_cc
from .cnf import CnfFormula, parse_dimacs
from .errors import CeilingError, NilcsatError
from .funcrep import build_and
from .gf import codim_bound, isolate_point, parse_vectors
from .reduction import reduce as reduce_sat
from .s4 import coset_solvable, reduce_s4, solve_s4_witness, word_to_text
from .solver import Instance, SupportBound, ceqv, density_report, solve
from .terms import Circuit, parse as parse_circuit, random_circuit, term_size, to_text


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- helpers ----------------------------------------------------------------------------


def _spec(args) -> AlgebraSpec:
    return AlgebraSpec.parse(args.primes)


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")


def _circuit(args, spec: AlgebraSpec) -> Circuit:
    if args.term is None and args.expr is None:
        raise UsageError("give --term FILE or --expr TEXT")
    text = args.expr if args.expr is not None else _read(args.term)
    return parse_circuit(text, spec, args.arity)


def _element(spec: AlgebraSpec, text: str | None) -> DElem | None:
    return None if text is None else spec.parse_element(text)


def _assignment(spec: AlgebraSpec, text: str) -> tuple:
    text = text.strip()
    return tuple(spec.parse_element(t) for t in text.split(",")) if text else ()


def independent_value(circuit: Circuit, assignment) -> DElem:
    """Node-by-node evaluation with the scalar element operations (no lookup tables)."""
    spec = circuit.spec
    vals = []
    for node in circuit.nodes:
        kind = node[0]
        if kind == "var":
            r = assignment[node[1]]
        elif kind == "const":
            r = DElem.from_code(spec, node[1])
        elif kind == "add":
            r = alg.add(vals[node[1]], vals[node[2]])
        elif kind == "neg":
            r = alg.neg(vals[node[1]])
        elif kind == "e":
            r = alg.e(node[1], vals[node[2]])
        else:
            r = alg.v(node[1], vals[node[2]])
        vals.append(r)
    return vals[-1]


def _revalidate(circuit: Circuit, witness, expect=None, nonzero=False):
    value = independent_value(circuit, witness)
    if (nonzero and value.is_zero()) or (expect is not None and value != expect):
        raise AssertionError(f"witness {[str(a) for a in witness]} failed independent re-validation")


def _bound(args) -> SupportBound:
    return SupportBound.parse(args.bound, c=args.c, escalate=args.escalate)


def _need_seed(args):
    if args.solver == "random" and args.seed is None:
        raise UsageError("--seed is required with --solver random")


# -- subcommands --------------------------------------------------------------------------


def cmd_eval(args):
    spec = _spec(args)
    circuit = _circuit(args, spec)
    x = _assignment(spec, args.at)
    value = circuit.evaluate(x)
    _revalidate(circuit, x, expect=value)
    return {"value": str(value), "circuit_size": circuit.size, "term_size": circuit.term_size(),
            "print_length": len(to_text(circuit))}, 0


def cmd_canon(args):
    spec = _spec(args)
    circuit = _circuit(args, spec)
    form = canonicalize(circuit)
    return {"circuit_size": circuit.size, "canonical_size": form.size(), "form": form.to_json()}, 0


def cmd_csat(args):
    spec = _spec(args)
    _need_seed(args)
    circuit = _circuit(args, spec)
    inst = Instance(circuit, _element(spec, args.target))
    res = solve(inst, args.solver, _bound(args), args.budget, args.seed or 0, args.workers)
    if res.witness is not None:
        _revalidate(circuit, res.witness, expect=inst.target)
    out = res.to_json(timing=not args.no_timing)
    out["target"] = str(inst.target)
    return out, res.status.exit_code


def cmd_ceqv(args):
    spec = _spec(args)
    _need_seed(args)
    circuit = _circuit(args, spec)
    res = ceqv(circuit, spec, args.solver, _bound(args), args.budget, args.seed or 0, args.workers)
    if res.witness is not None:
        _revalidate(circuit, res.witness, nonzero=True)
    return res.to_json(timing=not args.no_timing), res.status.exit_code


def cmd_density(args):
    spec = _spec(args)
    circuit = _circuit(args, spec)
    inst = Instance(circuit, _element(spec, args.target))
    return density_report(inst, args.samples, args.seed, exact=not args.no_exact), 0


def cmd_reduce_sat(args):
    spec = _spec(args)
    phi = parse_dimacs(_read(args.cnf), split_long=args.split_long)
    out = reduce_sat(phi, spec, args.max_part_vars)
    text = to_text(out.circuit)
    report = out.metadata()
    if not args.no_timing:
        report["build_seconds"] = round(out.build_seconds, 6)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        report["term_file"] = args.out
    else:
        report["term"] = text
    return report, 0


def cmd_cc_extract(args):
    spec = _spec(args)
    circuit = _circuit(args, spec)
    cc = extract_cc(circuit, args.j, args.k)
    return {"size": cc.size, "wires": cc.wires, "circuit": cc.to_json()}, 0


def cmd_hyperplane(args):
    Z = parse_vectors(_read(args.vecs))
    if not Z:
        raise UsageError("the vector file is empty")
    H, z = isolate_point(Z, args.q)
    return {"q": args.q, "n": H.n, "points": len(set(Z)), "codim": len(H.equations),
            "bound": codim_bound(len(set(Z)), args.q), "point": list(z), "equations": H.to_json()["equations"]}, 0


def cmd_s4_reduce(args):
    phi = parse_dimacs(_read(args.cnf), split_long=args.split_long)
    red = reduce_s4(phi)
    report = red.metadata()
    report["word"] = word_to_text(red.word)
    if args.solve:
        solvable, _ = coset_solvable(red)
        report["solvable"] = solvable
        bits = next(phi.satisfying(), None) if phi.n <= 20 else None
        if phi.n <= 20:
            report["satisfiable"] = bits is not None
        if bits is not None:
            report["witness"] = [str(a) for a in solve_s4_witness(red, bits)]
    return report, 0


def cmd_congruences(args):
    spec = _spec(args)
    found = alg.enumerate_congruences(spec, args.ceiling)
    chain = alg.theta_chain(spec)
    return {"count": len(found), "equals_theta_chain": set(chain) == found,
            "partitions": sorted(list(p) for p in found)}, 0


def _random_3cnf(rng: random.Random, n: int, m: int) -> CnfFormula:
    clauses = []
    for _ in range(m):
        vs = rng.sample(range(1, n + 1), min(3, n))
        clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
    return CnfFormula(n, tuple(clauses))


def _slope(xs, ys):
    pts = [(math.log(x), math.log(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if len(pts) < 2:
        return None
    mx = sum(p[0] for p in pts) / len(pts)
    my = sum(p[1] for p in pts) / len(pts)
    den = sum((p[0] - mx) ** 2 for p in pts)
    return None if den == 0 else sum((p[0] - mx) * (p[1] - my) for p in pts) / den


def cmd_bench(args):
    spec = _spec(args)
    rng = random.Random(args.seed)
    rows = []
    if args.suite == "reduction":
        header = ["m", "s", "size", "term_size", "build_ms"]
        for m in range(1, args.max_m + 1):
            phi = _random_3cnf(rng, max(3, m), m)
            try:
                out = reduce_sat(phi, spec)
            except CeilingError:
                break
            rows.append([m, out.s, out.circuit.size, term_size(out.term), round(out.build_seconds * 1000, 3)])
        xs = [r[0] for r in rows]
    elif args.suite == "funcrep":
        header = ["m", "k", "size", "build_ms"]
        for m in range(1, min(args.max_m, 5) + 1):
            started = time.perf_counter()
            build_and.cache_clear()
            t = build_and(m, 1, spec)
            rows.append([m, 1, Circuit.from_term(t, spec, m).size, round((time.perf_counter() - started) * 1000, 3)])
        xs = [r[0] for r in rows]
    elif args.suite == "canonical":
        header = ["circuit_size", "canonical_size", "build_ms"]
        for size in range(4, 4 + 4 * args.max_m, 4):
            c = random_circuit(spec, 3, size, rng)
            started = time.perf_counter()
            f = canonicalize(c)
            rows.append([c.size, f.size(), round((time.perf_counter() - started) * 1000, 3)])
        xs = [r[0] for r in rows]
    else:
        raise UsageError(f"unknown suite {args.suite!r}")
    size_col = header.index("size") if "size" in header else header.index("canonical_size")
    slope = _slope(xs, [r[size_col] for r in rows])
    if args.no_timing:
        header = header[:-1]
        rows = [r[:-1] for r in rows]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["suite", "primes"] + header)
    for r in rows:
        writer.writerow([args.suite, ":".join(map(str, spec.primes))] + r)
    buf.write(f"# loglog_slope_size_vs_{header[0]},{'' if slope is None else round(slope, 4)}\n")
    return buf.getvalue(), 0


# -- parser -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nilcsat", description="Circuit satisfiability workbench for the algebras D[p1,...,ph].")
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--no-timing", action="store_true", help="omit timestamps and elapsed times")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **kw: _add(*a, parents=[common], **kw)

    def with_term(sp):
        sp.add_argument("--primes", required=True, help="comma-separated primes, e.g. 2,3,2")
        sp.add_argument("--term", help="term file ('-' for stdin)")
        sp.add_argument("--expr", help="term text given inline")
        sp.add_argument("--arity", type=int, help="declared arity (default: highest variable + 1)")

    def with_solver(sp):
        sp.add_argument("--solver", choices=("brute", "sparse", "random"), default="brute")
        sp.add_argument("--bound", default="sesh", help="sesh | exhaustive | fixed:K")
        sp.add_argument("--c", type=float, default=1.0, help="constant of the sesh bound")
        sp.add_argument("--escalate", action="store_true", help="continue past the bound up to n")
        sp.add_argument("--budget", type=int, default=10_000, help="samples for the random solver")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("eval", help="evaluate a term at an assignment")
    with_term(sp)
    sp.add_argument("--at", default="", help="comma-separated element literals, e.g. 1:2,0:1")
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("canon", help="canonical form as JSON")
    with_term(sp)
    sp.set_defaults(fn=cmd_canon)

    sp = sub.add_parser("csat", help="solve t(x) = target")
    with_term(sp)
    with_solver(sp)
    sp.add_argument("--target", help="element literal (default 0)")
    sp.set_defaults(fn=cmd_csat)

    sp = sub.add_parser("ceqv", help="decide whether t is identically 0")
    with_term(sp)
    with_solver(sp)
    sp.set_defaults(fn=cmd_ceqv)

    sp = sub.add_parser("density", help="value counts and sampled estimates")
    with_term(sp)
    sp.add_argument("--target", help="element literal (default 0)")
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-exact", action="store_true")
    sp.set_defaults(fn=cmd_density)

    sp = sub.add_parser("reduce-sat", help="3-CNF to a single equation t = e_1 1")
    sp.add_argument("--primes", required=True)
    sp.add_argument("--cnf", required=True, help="DIMACS file ('-' for stdin)")
    sp.add_argument("--split-long", action="store_true", help="split clauses longer than 3 first")
    sp.add_argument("--max-part-vars", type=int, default=6)
    sp.add_argument("--out", help="write the term text here instead of into the report")
    sp.set_defaults(fn=cmd_reduce_sat)

    sp = sub.add_parser("cc-extract", help="MOD-gate circuit for the nonzero test of a level")
    with_term(sp)
    sp.add_argument("--j", type=int, required=True, help="output level below the tested one (0 tests e_1)")
    sp.add_argument("--k", type=int, required=True, help="level carrying the boolean inputs")
    sp.set_defaults(fn=cmd_cc_extract)

    sp = sub.add_parser("hyperplane", help="isolate one vector by an affine subspace")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--vecs", required=True, help="one vector per line, space-separated residues")
    sp.set_defaults(fn=cmd_hyperplane)

    sp = sub.add_parser("s4-reduce", help="3-CNF to an equation over S4")
    sp.add_argument("--cnf", required=True)
    sp.add_argument("--split-long", action="store_true")
    sp.add_argument("--solve", action="store_true", help="also decide solvability and build a witness")
    sp.set_defaults(fn=cmd_s4_reduce)

    sp = sub.add_parser("congruences", help="all congruences of a small D")
    sp.add_argument("--primes", required=True)
    sp.add_argument("--ceiling", type=int, default=64)
    sp.set_defaults(fn=cmd_congruences)

    sp = sub.add_parser("bench", help="CSV size/time measurements")
    sp.add_argument("--suite", choices=("reduction", "funcrep", "canonical"), required=True)
    sp.add_argument("--primes", required=True)
    sp.add_argument("--max-m", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_bench)
    return p


def _text(report, indent=0) -> str:
    lines = []
    for key, val in report.items():
        if isinstance(val, dict):
            lines.append(" " * indent + f"{key}:")
            lines.append(_text(val, indent + 2))
        else:
            lines.append(" " * indent + f"{key}: {val}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        report, code = args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except CeilingError as exc:
        extra = f" (required: {exc.required})" if exc.required is not None else ""
        print(f"error: {exc}{extra}", file=sys.stderr)
        return 1
    except (NilcsatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if isinstance(report, str):
        sys.stdout.write(report)
        return code
    report = {"command": args.command, **report}
    if not args.no_timing:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    if args.format == "json":
        print(json.dumps(report, indent=2, sort_keys=False))
    else:
        print(_text(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
