"""Command-line interface.

Subcommands: check, build-cov, covary, sweep, sweep2, condition, compare.
Exit codes: 0 success, 1 validation failure, 2 a single-point query is
numerically inadmissible.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .analysis import (
    Model,
    admissible_region,
    emit,
    load_model,
    load_sweep_config,
    one_way_sweep,
    two_way_sweep,
)
from .cimodel import ci_holds
from .conditioning import Evidence, condition
from .covariation import Scheme, Variation, build_plan, verify_preserving
from .divergence import frobenius_mp, kl_mp, scheme_ordering
from .errors import GsensError, InadmissibleError, SingularMatrixError
from .matcore import TolerancePolicy, is_psd

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INADMISSIBLE = 2


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INVALID


def _print_matrix(m: np.ndarray, names) -> None:
    width = max(len(n) for n in names)
    cells = [[f"{v:.12g}" for v in row] for row in m]
    col = max(width, max(len(c) for row in cells for c in row))
    print(" " * (width + 2) + "  ".join(n.rjust(col) for n in names))
    for name, row in zip(names, cells):
        print(name.ljust(width + 2) + "  ".join(c.rjust(col) for c in row))


def _scheme_from_args(model: Model, args) -> Scheme:
    subset = None
    if args.scheme == "row" and args.E:
        subset = _index_list(model, args.E)
    if args.scheme == "column" and args.F:
        subset = _index_list(model, args.F)
    statement = None if args.statement is None else args.statement - 1
    return Scheme(args.scheme, subset, statement)


def _index_list(model: Model, text: str) -> tuple[int, ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if part.lstrip("+-").isdigit():
            k = int(part)
            if not 1 <= k <= model.n:
                raise IndexError(f"index {k} out of range 1..{model.n}")
            out.append(k - 1)
        else:
            out.append(model.index(part))
    return tuple(out)


def _plan_json(model: Model, plan) -> str:
    steps = []
    scheme_obj: dict = {}
    for s in plan.steps:
        steps.append(
            {"i": model.names[s.i], "j": model.names[s.j], "delta": s.delta}
        )
        scheme_obj = {"kind": s.scheme.kind}
        if s.scheme.kind == "row" and s.scheme.subset is not None:
            scheme_obj["E"] = [model.names[k] for k in s.scheme.subset]
        if s.scheme.kind == "column" and s.scheme.subset is not None:
            scheme_obj["F"] = [model.names[k] for k in s.scheme.subset]
        if s.scheme.statement_index is not None:
            scheme_obj["statement_index"] = s.scheme.statement_index + 1
    return json.dumps({"positions": steps, "scheme": scheme_obj})


def _cmd_check(args) -> int:
    model = load_model(args.model)
    tol = TolerancePolicy(args.tol)
    if not model.statements:
        print("no conditional-independence statements to check")
        return EXIT_OK
    ok = True
    for k, stmt in enumerate(model.statements):
        res = ci_holds(model.covariance, stmt, tol)
        label = stmt.describe(model.names)
        if res.holds:
            print(f"ok    {label}")
        else:
            ok = False
            print(f"FAIL  {label}  witness {res.witness.describe(model.names)}")
    return EXIT_OK if ok else EXIT_INVALID


def _cmd_build_cov(args) -> int:
    model = load_model(args.model)
    if model.dag is None:
        return _fail("model file has no dag section")
    print("covariance:")
    _print_matrix(model.covariance, model.names)
    if np.any(model.mean != 0):
        print("mean:")
        for name, v in zip(model.names, model.mean):
            print(f"  {name}  {v:.12g}")
    return EXIT_OK


def _cmd_covary(args) -> int:
    model = load_model(args.model)
    tol = TolerancePolicy(args.tol)
    i, j = model.resolve_position(args.pos)
    scheme = _scheme_from_args(model, args)
    plan = build_plan(Variation(model.n, ((i, j, args.delta),)), scheme, model.statements)
    print(f"plan: {_plan_json(model, plan)}")
    verdict = verify_preserving(plan, model.covariance, model.statements, tol)
    if verdict.preserving:
        print("verdict: preserving")
    else:
        print(f"verdict: NOT preserving  witness {verdict.witness.describe(model.names)}")
    target = plan.apply(model.covariance)
    admissible = is_psd(target, tol.rel)
    print(f"admissible: {'yes' if admissible else 'no'}")
    print(f"frobenius: {frobenius_mp(model.covariance, plan):.12g}")
    if admissible:
        try:
            print(f"kl: {kl_mp(model.covariance, plan):.12g}")
        except (InadmissibleError, SingularMatrixError) as e:
            admissible = False
            print(f"kl: unavailable ({e})")
    else:
        print("kl: unavailable (perturbed covariance not admissible)")
    return EXIT_OK if admissible else EXIT_INADMISSIBLE


def _make_grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0:
        raise ValueError("--delta-step must be > 0")
    count = int(round((hi - lo) / step)) + 1
    return [round(lo + k * step, 12) for k in range(count) if lo + k * step <= hi + 1e-12]


def _grid_from_args(args) -> list[float]:
    if args.deltas:
        return [float(x) for x in args.deltas.split(",")]
    return _make_grid(args.delta_min, args.delta_max, args.delta_step)


def _grid2_from_args(args) -> list[float] | None:
    if args.deltas2:
        return [float(x) for x in args.deltas2.split(",")]
    if args.delta_min2 is None and args.delta_max2 is None and args.delta_step2 is None:
        return None
    lo = args.delta_min2 if args.delta_min2 is not None else args.delta_min
    hi = args.delta_max2 if args.delta_max2 is not None else args.delta_max
    step = args.delta_step2 if args.delta_step2 is not None else args.delta_step
    return _make_grid(lo, hi, step)


def _split_schemes(model: Model, args) -> list:
    out = []
    for kind in args.schemes.split(","):
        kind = kind.strip()
        if kind == "row" and args.E:
            out.append(Scheme("row", _index_list(model, args.E)))
        elif kind == "column" and args.F:
            out.append(Scheme("column", _index_list(model, args.F)))
        else:
            out.append(kind)
    return out


def _emit_records(records, fmt: str, output, summary: bool) -> None:
    text = emit(records, fmt, output)
    if output is None:
        sys.stdout.write(text)
    if summary:
        region = admissible_region(records)
        for scheme, (adm, total) in region.cell_counts.items():
            if region.two_way:
                print(f"summary {scheme}: {adm}/{total} admissible cells", file=sys.stderr)
            else:
                iv = region.intervals.get(scheme)
                iv_text = f"[{iv[0]:g}, {iv[1]:g}]" if iv else "none"
                print(
                    f"summary {scheme}: {adm}/{total} admissible, interval around 1: {iv_text}",
                    file=sys.stderr,
                )


def _cmd_sweep(args) -> int:
    if args.config:
        cfg = load_sweep_config(args.config)
        model = load_model(cfg.model_path)
        if len(cfg.positions) != 1:
            return _fail("sweep config has two positions; use sweep2")
        position = model.resolve_position(cfg.positions[0])
        records = one_way_sweep(model, position, cfg.deltas1, cfg.schemes, TolerancePolicy(args.tol))
        _emit_records(records, args.format or cfg.fmt, args.output or cfg.output, args.summary)
        return EXIT_OK
    if not args.model or not args.pos:
        return _fail("sweep needs a model and --pos (or --config)")
    model = load_model(args.model)
    position = model.resolve_position(args.pos)
    records = one_way_sweep(
        model,
        position,
        _grid_from_args(args),
        _split_schemes(model, args),
        TolerancePolicy(args.tol),
    )
    _emit_records(records, args.format or "csv", args.output, args.summary)
    return EXIT_OK


def _cmd_sweep2(args) -> int:
    if args.config:
        cfg = load_sweep_config(args.config)
        model = load_model(cfg.model_path)
        if len(cfg.positions) != 2:
            return _fail("sweep2 config needs exactly two positions")
        p1 = model.resolve_position(cfg.positions[0])
        p2 = model.resolve_position(cfg.positions[1])
        records = two_way_sweep(
            model, (p1, p2), cfg.deltas1, cfg.deltas2, cfg.schemes, TolerancePolicy(args.tol)
        )
        _emit_records(records, args.format or cfg.fmt, args.output or cfg.output, args.summary)
        return EXIT_OK
    if not args.model or not args.pos or not args.pos2:
        return _fail("sweep2 needs a model, --pos and --pos2 (or --config)")
    model = load_model(args.model)
    p1 = model.resolve_position(args.pos)
    p2 = model.resolve_position(args.pos2)
    grid2 = _grid2_from_args(args)
    records = two_way_sweep(
        model,
        (p1, p2),
        _grid_from_args(args),
        grid2,
        _split_schemes(model, args),
        TolerancePolicy(args.tol),
    )
    _emit_records(records, args.format or "csv", args.output, args.summary)
    return EXIT_OK


def _cmd_condition(args) -> int:
    model = load_model(args.model)
    pairs = []
    for item in args.evidence.split(","):
        if "=" not in item:
            return _fail(f"evidence item {item!r} is not name=value")
        name, _, value = item.partition("=")
        pairs.append((model.index(name.strip()), float(value)))
    ev = Evidence.from_pairs(pairs)
    try:
        mean_c, cov_c = condition(model.mean, model.covariance, ev)
    except SingularMatrixError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    out_names = [model.names[k] for k in range(model.n) if k not in set(ev.indices)]
    print("conditional mean:")
    for name, v in zip(out_names, mean_c):
        print(f"  {name}  {v:.12g}")
    print("conditional covariance:")
    _print_matrix(cov_c, out_names)
    return EXIT_OK


def _cmd_compare(args) -> int:
    model = load_model(args.model)
    tol = TolerancePolicy(args.tol)
    i, j = model.resolve_position(args.pos)
    if len(model.statements) != 1:
        return _fail("compare needs a model with exactly one CI statement")
    reports = scheme_ordering(model.covariance, (i, j), args.delta, model.statements[0], tol)
    print(f"{'scheme':<10} {'frobenius':>16} {'kl':>16} {'admissible':>11}")
    for r in reports:
        kl_text = f"{r.kl:.10g}" if r.kl is not None else "-"
        print(f"{r.scheme:<10} {r.frobenius:>16.10g} {kl_text:>16} {'yes' if r.admissible else 'no':>11}")
    return EXIT_OK


def _add_tol(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-9, help="scale-relative tolerance (default 1e-9)")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would collide with the
    # "numerically inadmissible" exit code; usage errors are validation
    # failures here.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="gsens",
        description="Sensitivity analysis for Gaussian conditional-independence models "
        "with structure-preserving multiplicative perturbations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="verify the model's CI statements against its covariance")
    p.add_argument("model")
    _add_tol(p)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("build-cov", help="build the joint covariance from the dag section")
    p.add_argument("model")
    p.set_defaults(func=_cmd_build_cov)

    p = sub.add_parser("covary", help="build one perturbation plan and report its effect")
    p.add_argument("model")
    p.add_argument("--pos", required=True, help="varied position: 'name,name' or 1-based 'i,j'")
    p.add_argument("--delta", type=float, required=True, help="multiplicative factor")
    p.add_argument(
        "--scheme",
        default="partial",
        choices=["total", "partial", "row", "column", "none"],
    )
    p.add_argument("--E", help="row set for --scheme row (names or 1-based indices)")
    p.add_argument("--F", help="column set for --scheme column")
    p.add_argument("--statement", type=int, help="target statement (1-based)")
    _add_tol(p)
    p.set_defaults(func=_cmd_covary)

    for name, two in (("sweep", False), ("sweep2", True)):
        p = sub.add_parser(name, help=f"{'two-way' if two else 'one-way'} sensitivity sweep")
        p.add_argument("model", nargs="?")
        p.add_argument("--config", help="sweep config file (alternative to flags)")
        p.add_argument("--pos", help="varied position")
        p.add_argument("--deltas", help="explicit comma-separated factors")
        p.add_argument("--delta-min", type=float, default=0.75)
        p.add_argument("--delta-max", type=float, default=1.25)
        p.add_argument("--delta-step", type=float, default=0.01)
        if two:
            p.add_argument("--pos2", help="second varied position")
            p.add_argument("--deltas2")
            p.add_argument("--delta-min2", type=float, default=None)
            p.add_argument("--delta-max2", type=float, default=None)
            p.add_argument("--delta-step2", type=float, default=None)
        p.add_argument(
            "--schemes",
            default="standard,total,partial,row,column",
            help="comma-separated scheme list",
        )
        p.add_argument("--E", help="row set for row schemes")
        p.add_argument("--F", help="column set for column schemes")
        p.add_argument("--format", choices=["csv", "json"], default=None)
        p.add_argument("-o", "--output", help="output file (default stdout)")
        p.add_argument("--summary", action="store_true", help="print admissibility summary to stderr")
        _add_tol(p)
        p.set_defaults(func=_cmd_sweep2 if two else _cmd_sweep)

    p = sub.add_parser("condition", help="condition the model on observed values")
    p.add_argument("model")
    p.add_argument("--evidence", required=True, help="comma-separated name=value pairs")
    p.set_defaults(func=_cmd_condition)

    p = sub.add_parser("compare", help="Frobenius/KL table across schemes at one factor")
    p.add_argument("model")
    p.add_argument("--pos", required=True)
    p.add_argument("--delta", type=float, required=True)
    _add_tol(p)
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GsensError as e:
        return _fail(str(e))
    except (ValueError, KeyError, IndexError) as e:
        return _fail(str(e))


if __name__ == "__main__":
    sys.exit(main())
