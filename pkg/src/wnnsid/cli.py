"""Command line front end: ``wnnsid {identify,benchmark,generate,denoise}``.

Exit status is 0 on success, 1 on any error (including bad flags) and 2
when identification only produced a non-converged or degraded result.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import io
from .admm import AdmmSettings
from .errors import WindowError
from .pipeline import (
    RECOVERABLE,
    ComparisonTable,
    Denoiser,
    PipelineConfig,
    compare_schemes,
    default_lambda_grid,
    identify_best,
    monte_carlo_study,
)
from .sim_eval import generate_record, random_model
from .weights import WeightingScheme

EXIT_OK, EXIT_ERROR, EXIT_DEGRADED = 0, 1, 2


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _lambda_grid(text):
    try:
        lo, hi, count = text.split(":")
        grid = default_lambda_grid(float(lo), float(hi), int(count))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:count, got {text!r}") from None
    if int(count) < 1 or not 0 < float(lo) <= float(hi):
        raise argparse.ArgumentTypeError("need 0 < lo <= hi and count >= 1")
    return grid


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _schemes(text):
    try:
        return [WeightingScheme.parse(v) for v in text.split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _add_window(p):
    p.add_argument("--r", type=_positive_int, default=15, help="future block rows (default 15)")
    p.add_argument("--s", type=_positive_int, default=15, help="past block rows (default 15)")


def _add_solver(p):
    p.add_argument("--max-iter", type=_positive_int, default=5000)
    p.add_argument("--eps-abs", type=_positive_float, default=1e-6)
    p.add_argument("--eps-rel", type=_positive_float, default=1e-3)


def _admm(args):
    return AdmmSettings(max_iter=args.max_iter, eps_abs=args.eps_abs, eps_rel=args.eps_rel)


def _jobs(args):
    return args.jobs or os.cpu_count() or 1


def _split(u, y, n_id, n_val):
    if n_id > u.length:
        raise WindowError(f"--split {n_id} exceeds record length {u.length}")
    stop = u.length if n_val is None else n_id + n_val
    if stop > u.length:
        raise WindowError(f"--split {n_id} plus --n-val {n_val} exceeds record length {u.length}")
    if stop - n_id < 2:
        raise WindowError("no validation samples left after --split")
    return u[:n_id], y[:n_id], u[n_id:stop], y[n_id:stop]


def cmd_identify(args) -> int:
    u, y = io.read_dataset(args.data)
    u_id, y_id, u_val, y_val = _split(u, y, args.split, args.n_val)
    cfg = PipelineConfig(
        scheme=args.scheme,
        r=args.r,
        s=args.s,
        lambda_grid=args.lambda_grid,
        admm=_admm(args),
        direct_term=not args.no_direct_term,
        stabilize=args.stabilize,
        estimation_scheme=args.estimation_scheme,
        jobs=_jobs(args),
    )
    model, report = identify_best(u_id, y_id, u_val, y_val, cfg)
    if args.trace and report.lambda_used is not None:
        with open(args.trace, "w") as sink:
            Denoiser(u_id, y_id, cfg)(report.lambda_used, trace=sink)
    meta = {
        "scheme": cfg.scheme.value,
        "estimation_scheme": cfg.post_scheme.value,
        "lambda": report.lambda_used,
        "r": cfg.r,
        "s": cfg.s,
        "singular_values": report.singular_values,
        "seed": args.seed,
    }
    io.write_model(args.out, model, meta)
    io.write_json(args.report, report.to_dict())
    lam = "none (baseline)" if report.lambda_used is None else f"{report.lambda_used:.6g}"
    print(f"average fit: {report.average:.4f}  order: {report.order}  lambda: {lam}")
    if report.degraded or not report.converged:
        print("warning: result is degraded or the selected solve did not converge", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


def _format_table(table: ComparisonTable) -> str:
    cols = table.columns
    width = max(len("system"), *(len(r["system"]) for r in table.rows)) if table.rows else 8
    lines = ["  ".join(["system".ljust(width)] + [c.rjust(9) for c in cols])]

    def cell(v):
        return "-".rjust(9) if v is None else f"{v:9.2f}"

    for row in table.rows:
        lines.append("  ".join([row["system"].ljust(width)] + [cell(row["fits"].get(c)) for c in cols]))
    avg = table.averages()
    lines.append("  ".join(["Average".ljust(width)] + [cell(avg[c]) for c in cols]))
    lines.append(
        "  ".join(["% > baseline".ljust(width)] + ["".rjust(9)] + [cell(table.summary[c]) for c in cols[1:]])
    )
    return "\n".join(lines)


def cmd_benchmark(args) -> int:
    cfg = PipelineConfig(
        r=args.r,
        s=args.s,
        lambda_grid=args.lambda_grid,
        admm=_admm(args),
        direct_term=not args.no_direct_term,
        stabilize=args.stabilize,
        jobs=_jobs(args),
    )
    if args.random:
        table = monte_carlo_study(
            cfg,
            orders=args.orders,
            sigmas=args.sigmas,
            seeds=args.seeds,
            schemes=args.schemes,
            seed=args.seed,
            n_id=args.n_id,
            n_val=args.n_val or 1500,
        )
    else:
        files = sorted(Path(args.datasets).glob("*.csv"))
        if not files:
            raise CliError(f"no .csv datasets in {args.datasets}")
        if args.split is None:
            raise CliError("--datasets needs --split")
        rows = []
        for path in files:
            u, y = io.read_dataset(path)
            parts = _split(u, y, args.split, args.n_val)
            rows.append(compare_schemes(path.stem, *parts, cfg, args.schemes))
        table = ComparisonTable(["baseline"] + [s.value for s in args.schemes], rows)
    io.write_json(args.out, table.to_dict())
    print(_format_table(table))
    return EXIT_OK


def cmd_generate(args) -> int:
    model = random_model(args.order, args.seed, args.inputs, args.outputs)
    rec = generate_record(model, args.length, args.sigma, args.seed)
    io.write_dataset(args.out, rec.u, rec.y)
    io.write_model(args.model_out, model, {"sigma": args.sigma, "seed": args.seed, "length": args.length})
    print(f"wrote {args.length} samples to {args.out}, ground truth to {args.model_out}")
    return EXIT_OK


def cmd_denoise(args) -> int:
    u, y = io.read_dataset(args.data)
    cfg = PipelineConfig(scheme=args.scheme, r=args.r, s=args.s, admm=_admm(args))
    den = Denoiser(u, y, cfg)
    if args.trace:
        with open(args.trace, "w") as sink:
            res = den(args.lam, trace=sink)
    else:
        res = den(args.lam)
    io.write_dataset(args.out, u, res.series)
    sidecar = args.sidecar or f"{args.out}.json"
    io.write_json(
        sidecar,
        {
            "scheme": cfg.scheme.value,
            "lambda": res.lam,
            "nuclear_norm_before": res.nuclear_before,
            "nuclear_norm_after": res.nuclear_after,
            "iterations": res.state.iter,
            "converged": res.converged,
        },
    )
    print(f"nuclear norm {res.nuclear_before:.6g} -> {res.nuclear_after:.6g} in {res.state.iter} iterations")
    return EXIT_OK if res.converged else EXIT_DEGRADED


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wnnsid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("identify", help="denoise over a lambda grid, identify, validate")
    p.add_argument("--data", required=True)
    p.add_argument("--split", type=_positive_int, required=True, help="samples used for identification")
    p.add_argument("--n-val", type=_positive_int, help="validation samples (default: the rest)")
    p.add_argument("--scheme", type=WeightingScheme.parse, required=True)
    p.add_argument("--estimation-scheme", type=WeightingScheme.parse, help="weighting after denoising")
    _add_window(p)
    p.add_argument("--lambda-grid", type=_lambda_grid, default=default_lambda_grid(), metavar="LO:HI:COUNT")
    p.add_argument("--no-direct-term", action="store_true")
    p.add_argument("--stabilize", action="store_true")
    p.add_argument("--out", default="model.json")
    p.add_argument("--report", default="report.json")
    p.add_argument("--trace", help="write the ADMM trace of the selected lambda here")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--jobs", type=_positive_int)
    _add_solver(p)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("benchmark", help="compare schemes against the baseline")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--random", action="store_true", help="random systems")
    src.add_argument("--datasets", help="directory of dataset CSV files")
    p.add_argument("--orders", type=_int_list, default=[4, 6, 8])
    p.add_argument("--sigmas", type=_float_list, default=[2.0, 6.0, 10.0])
    p.add_argument("--seeds", type=_positive_int, default=3, help="replicates per (order, sigma)")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--schemes", type=_schemes, default=[WeightingScheme.CVA])
    p.add_argument("--n-id", type=_positive_int, default=300)
    p.add_argument("--n-val", type=_positive_int)
    p.add_argument("--split", type=_positive_int)
    _add_window(p)
    p.add_argument("--lambda-grid", type=_lambda_grid, default=default_lambda_grid(), metavar="LO:HI:COUNT")
    p.add_argument("--no-direct-term", action="store_true")
    p.add_argument("--stabilize", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", default="benchmark.json")
    p.add_argument("--jobs", type=_positive_int)
    _add_solver(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("generate", help="simulate a random system")
    p.add_argument("--order", type=_positive_int, required=True)
    p.add_argument("--sigma", type=_positive_float, required=True)
    p.add_argument("--length", type=_positive_int, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--inputs", type=_positive_int, default=1)
    p.add_argument("--outputs", type=_positive_int, default=1)
    p.add_argument("--out", default="data.csv")
    p.add_argument("--model-out", default="truth.json")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("denoise", help="single-lambda weighted nuclear norm denoising")
    p.add_argument("--data", required=True)
    p.add_argument("--lambda", dest="lam", type=_positive_float, required=True)
    p.add_argument("--scheme", type=WeightingScheme.parse, required=True)
    _add_window(p)
    p.add_argument("--out", default="denoised.csv")
    p.add_argument("--sidecar", help="summary JSON (default: <out>.json)")
    p.add_argument("--trace")
    _add_solver(p)
    p.set_defaults(func=cmd_denoise)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, OSError, *RECOVERABLE) as exc:
        print(f"wnnsid {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
