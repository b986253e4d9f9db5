"""Command-line front end.

Commands: check, solve, sweep, rho, gen.  All numeric output is rendered
as exact ``p/q`` strings; re-parsing any output reproduces the values.

Exit codes: 0 success; 1 input error; 2 assumption violation (unbounded
where boundedness is required, or an unbounded integer variable);
3 problem infeasible; 4 internal invariant breach (never expected).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import ald, exactrho, instance as inst_mod, penalty as pen_mod
from .convexsolve import INFEASIBLE, UNBOUNDED, check_boundedness
from .errors import (
    AldualError,
    BisectionCapError,
    DeltaZeroError,
    InfeasibleDomainError,
    InternalInvariantError,
    NlpInfeasibleError,
    NlpUnboundedError,
    ParseError,
    RationalParseError,
    SchemaViolationError,
    UnboundedIntegerVarError,
    UnsupportedKindError,
)
from .numkit import RatVec, format_rat, parse_rat, rat

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_ASSUMPTION = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4


class UsageError(AldualError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; our contract is 1
        raise UsageError(message)


def _fmt_vec(v) -> list[str]:
    return [format_rat(a) for a in v]


def parse_rho_schedule(spec: str) -> list[Fraction]:
    """``geom:start:factor:count`` or a comma-separated explicit list."""
    if spec.startswith("geom:"):
        parts = spec.split(":")
        if len(parts) != 4:
            raise UsageError(f"bad geometric schedule {spec!r}")
        start, factor = parse_rat(parts[1]), parse_rat(parts[2])
        count = int(parts[3])
        if count < 1 or start < 0 or factor <= 1:
            raise UsageError("geometric schedule needs count>=1, start>=0, factor>1")
        out = []
        cur = start
        for _ in range(count):
            out.append(cur)
            cur = cur * factor
    else:
        try:
            out = [parse_rat(tok) for tok in spec.split(",") if tok]
        except RationalParseError as exc:
            raise UsageError(str(exc)) from exc
    if not out:
        raise UsageError("empty rho schedule")
    if any(r < 0 for r in out) or any(a >= b for a, b in zip(out, out[1:])):
        raise UsageError("rho schedule must be nonnegative and strictly increasing")
    return out


def _load_instance(path):
    inst = inst_mod.read_instance(path)
    violations = inst_mod.validate(inst)
    if violations:
        raise ParseError(
            "; ".join(f"{v.code}: {v.message}" for v in violations)
        )
    return inst


def _resolve_lambda(source: str, inst) -> RatVec:
    if source == "bar":
        return ald.lambda_bar(inst).lambda_bar
    if source == "zeros":
        return RatVec.zeros(inst.m)
    with open(source, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ParseError("multiplier file must be a JSON list of p/q strings")
    vec = RatVec(parse_rat(s) for s in data)
    if len(vec) != inst.m:
        raise ParseError(f"multiplier dim {len(vec)} vs {inst.m} rows")
    return vec


def _emit(doc: dict, out_path, fmt: str = "json") -> None:
    text = json.dumps(doc, indent=1, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_check(args) -> int:
    inst = inst_mod.read_instance(args.instance)
    violations = inst_mod.validate(inst)
    if violations:
        doc = {"ok": False, "violations": [
            {"code": v.code, "message": v.message,
             "witness": _fmt_vec(v.witness) if v.witness is not None else None}
            for v in violations]}
        _emit(doc, args.out)
        return EXIT_INPUT
    bound = check_boundedness(inst)
    if not bound.nlp_bounded:
        _emit({"ok": False, **bound.to_json_dict()}, args.out)
        return EXIT_ASSUMPTION
    try:
        box = ald.integer_box(inst)
    except UnboundedIntegerVarError as exc:
        _emit({"ok": False, "unbounded_integer_var": exc.index}, args.out)
        return EXIT_ASSUMPTION
    ip = ald.solve_ip(inst)
    if ip.status == INFEASIBLE:
        _emit({"ok": False, "feasible": False}, args.out)
        return EXIT_INFEASIBLE
    if ip.status == UNBOUNDED:
        _emit({"ok": False, "nlp_bounded": True, "ip_bounded": False,
               "ray": _fmt_vec(ip.ray)}, args.out)
        return EXIT_ASSUMPTION
    doc = {
        "ok": True,
        "feasible": True,
        **bound.to_json_dict(),
        "integer_box": {"lower": list(box.lower), "upper": list(box.upper)},
        "z_ip": format_rat(ip.value),
    }
    _emit(doc, args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    bound = check_boundedness(inst)
    if not bound.nlp_bounded:
        _emit({"status": "unbounded", "descent_ray": _fmt_vec(bound.ray)}, args.out)
        return EXIT_ASSUMPTION
    ip = ald.solve_ip(inst)
    if ip.status == INFEASIBLE:
        _emit({"status": "infeasible"}, args.out)
        return EXIT_INFEASIBLE
    if ip.status == UNBOUNDED:
        _emit({"status": "unbounded", "ray": _fmt_vec(ip.ray)}, args.out)
        return EXIT_ASSUMPTION
    duals = ald.lambda_bar(inst)
    pen = pen_mod.Penalty(pen_mod.LINF, inst.m)
    rep0 = ald.eval_lr_plus(inst, duals.lambda_bar, 0, pen)
    gap0 = None if rep0.unbounded else ip.value - rep0.value
    doc = {
        "status": "optimal",
        "z_ip": format_rat(ip.value),
        "argmin": _fmt_vec(ip.x),
        "z_nlp": format_rat(duals.z_nlp),
        "lambda_bar": _fmt_vec(duals.lambda_bar),
        "lambda_E": _fmt_vec(duals.lambda_E),
        "classical_gap": "inf" if gap0 is None else format_rat(gap0),
    }
    _emit(doc, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    inst = _load_instance(args.instance)
    pen = pen_mod.parse_penalty(args.penalty, inst.m)
    rhos = parse_rho_schedule(args.rhos)
    lam = None if args.lam == "bar" else _resolve_lambda(args.lam, inst)
    rows = []
    sink = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        if args.format == "csv":
            print(ald.SWEEP_CSV_HEADER, file=sink, flush=sink is sys.stdout)
        for row in ald.stream_gap_sweep(inst, pen, rhos, lam=lam,
                                        ascent_iters=args.ascent_iters):
            rows.append(row)
            if args.format == "csv":
                print(ald.sweep_row_csv(row), file=sink,
                      flush=sink is sys.stdout)
        if args.format == "json":
            json.dump([ald.sweep_row_json(r) for r in rows], sink, indent=1)
            sink.write("\n")
    finally:
        if sink is not sys.stdout:
            sink.close()
    return EXIT_OK


def cmd_rho(args) -> int:
    inst = _load_instance(args.instance)
    method = args.method
    if method.startswith("norm:"):  # norm:KIND names the conversion target
        args.penalty = method[len("norm:"):]
        method = "norm"
    pen = pen_mod.parse_penalty(args.penalty, inst.m)
    if method == "dual-linf":
        if pen.kind != pen_mod.LINF:
            raise UsageError("method dual-linf requires --penalty linf")
        cert = exactrho.rho_dual_linf(inst)
    elif method == "sufficient":
        cert = exactrho.rho_sufficient(inst, pen)
    elif method == "norm":
        if not pen.is_norm:
            raise UsageError("norm conversion needs a norm penalty")
        cert = exactrho.certificate_for_norm(inst, pen)
    elif method == "shift":
        if not pen.is_norm:
            raise UsageError("multiplier shift needs a norm penalty")
        lam = _resolve_lambda(args.lam, inst)
        cert = exactrho.certificate_for_lambda(inst, pen, lam)
    else:
        raise UsageError(f"unknown method {method!r}")
    doc = cert.to_json_dict()
    if args.verify:
        bound = exactrho.rho_bisect_empirical(
            inst, cert.lambda_used, pen, rho_max=max(cert.rho_star, Fraction(1)))
        doc["empirical"] = {
            "rho_min_upper": format_rat(bound.rho_min_upper),
            "achieved": bound.achieved,
            "dominates": cert.rho_star >= bound.rho_min_upper - Fraction(1, 1024),
        }
    _emit(doc, args.out)
    return EXIT_OK


def cmd_gen(args) -> int:
    cfg = inst_mod.GenConfig(
        n1=args.n1, n2=args.n2, m=args.m, m2=args.m2,
        magnitude=args.magnitude, seed=args.seed,
        require_feasible=args.feasible,
    )
    inst = inst_mod.generate(cfg)
    inst_mod.write_instance(inst, args.out)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="aldual",
                     description="Exact duality toolkit for mixed integer QP")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, penalty=False, rhos=False, lam=False):
        p.add_argument("--instance", required=True, help="instance JSON path")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        if penalty:
            p.add_argument("--penalty", required=True,
                           help="linf | l1 | sql2 | slinf:p/q")
        if rhos:
            p.add_argument("--rhos", required=True,
                           help="geom:start:factor:count or explicit list")
        if lam:
            p.add_argument("--lambda", dest="lam", default="bar",
                           help="bar | zeros | FILE (JSON list of p/q)")

    p_check = sub.add_parser("check", help="validate and test assumptions")
    add_common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_solve = sub.add_parser("solve", help="ground truth, relaxation, multipliers")
    add_common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="gap sweep over penalty weights")
    add_common(p_sweep, penalty=True, rhos=True, lam=True)
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sweep.add_argument("--ascent-iters", type=int, default=0,
                         help="fill z_ld by dual ascent with this many steps")
    p_sweep.set_defaults(func=cmd_sweep)

    p_rho = sub.add_parser("rho", help="exact penalty weight certificates")
    add_common(p_rho, penalty=True, lam=True)
    p_rho.add_argument("--method", required=True,
                       help="sufficient | dual-linf | norm[:KIND] | shift")
    p_rho.add_argument("--verify", action="store_true",
                       help="cross-check against the empirical bisection oracle")
    p_rho.set_defaults(func=cmd_rho)

    p_gen = sub.add_parser("gen", help="write a random instance")
    p_gen.add_argument("--n1", type=int, required=True)
    p_gen.add_argument("--n2", type=int, required=True)
    p_gen.add_argument("--m", type=int, required=True)
    p_gen.add_argument("--m2", type=int, default=0,
                       help="extra random inequality rows beyond the boxes")
    p_gen.add_argument("--magnitude", type=int, default=3)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--feasible", action="store_true", default=True)
    p_gen.add_argument("--no-feasible", dest="feasible", action="store_false")
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ParseError, SchemaViolationError, RationalParseError,
            UnsupportedKindError, FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NlpUnboundedError, UnboundedIntegerVarError,
            DeltaZeroError) as exc:
        print(f"assumption violation: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (NlpInfeasibleError, InfeasibleDomainError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InternalInvariantError, BisectionCapError, AssertionError) as exc:
        print(f"internal invariant breach: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
