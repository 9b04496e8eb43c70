"""Command-line interface.

Subcommands: gen, flag, compress, commdist, lattice, probe.  Exit codes:
0 when every contract held, 1 on a contract violation, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from . import jsonio
from .compress import dyadic_compress, membership_check, optimizer_supplier, schur_supplier
from .errors import TracialError
from .flags import FLAG_RESIDUAL_TOL, dyadic_targets, schur_flag
from .grassmann import OptimizerConfig, minimize
from .harness import (
    ExperimentSpec,
    compress_bench,
    gamma_probe,
    generate,
    records_to_csv,
    records_to_obj,
)
from .lattice import enumerate_lattice, st_ts_isomorphism


def _write(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")


def _input_matrix(args):
    if getattr(args, "infile", None):
        return jsonio.load_matrix(args.infile)
    if args.family is None:
        raise SystemExit2("either --in or --family/--n is required")
    if args.family != "jordan" and args.n is None:
        raise SystemExit2("--n is required with --family")
    n = args.n if args.n is not None else 4
    return generate(args.family, n, args.seed)


class SystemExit2(Exception):
    """Usage error surfaced with exit code 2."""


def _add_input_args(sub, require_n=False):
    sub.add_argument("--in", dest="infile", help="matrix JSON file")
    sub.add_argument("--family", choices=("ginibre", "haar_unitary", "jordan", "upper_random"))
    sub.add_argument("--n", type=int, default=None)
    sub.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracial",
        description="invariant flags, trace-norm compression, commutator "
        "distances, and invariant lattices at matrix scale",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen", help="emit a seeded matrix in the repo JSON format")
    gen.add_argument("--family", required=True,
                     choices=("ginibre", "haar_unitary", "jordan", "upper_random"))
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=None)

    flag = subs.add_parser("flag", help="build and validate a dyadic Schur flag")
    _add_input_args(flag)
    flag.add_argument("--levels", type=int, default=2)
    flag.add_argument("--tol", type=float, default=FLAG_RESIDUAL_TOL)
    flag.add_argument("--out", default=None)

    comp = subs.add_parser("compress", help="run the dyadic compression pipeline")
    _add_input_args(comp)
    comp.add_argument("--dims", default=None,
                      help="comma-separated dims for a bench sweep")
    comp.add_argument("--eps", type=float, required=True)
    comp.add_argument("--levels", type=int, default=1)
    comp.add_argument("--supplier", choices=("schur", "optimizer"), default="schur")
    comp.add_argument("--format", choices=("csv", "json"), default="json")
    comp.add_argument("--out", default=None)

    dist = subs.add_parser("commdist", help="minimize a projection defect")
    _add_input_args(dist)
    dist.add_argument("--k", type=int, default=None, help="target rank (default n//2)")
    dist.add_argument("--objective", choices=("commutator", "invariance"),
                      default="commutator")
    dist.add_argument("--restarts", type=int, default=None)
    dist.add_argument("--iters", type=int, default=None)
    dist.add_argument("--out", default=None)

    lat = subs.add_parser("lattice", help="enumerate a lattice or verify the "
                          "product-lattice isomorphism")
    lat.add_argument("--in", dest="infile", help="matrix JSON file (enumerate)")
    lat.add_argument("--left", help="S matrix JSON (with --right: ST/TS check)")
    lat.add_argument("--right", help="T matrix JSON")
    lat.add_argument("--out", default=None)

    probe = subs.add_parser("probe", help="distance probe across dimensions")
    probe.add_argument("--family", required=True,
                       choices=("ginibre", "haar_unitary", "jordan", "upper_random"))
    probe.add_argument("--dims", required=True, help="comma-separated, e.g. 4,8,16")
    probe.add_argument("--seed", type=int, default=0)
    probe.add_argument("--objective", choices=("commutator", "invariance"),
                       default="commutator")
    probe.add_argument("--k", type=int, default=None, help="fixed rank (default n//2)")
    probe.add_argument("--restarts", type=int, default=8)
    probe.add_argument("--iters", type=int, default=500)
    probe.add_argument("--format", choices=("csv", "json"), default="csv")
    probe.add_argument("--out", default=None)

    return parser


def _parse_dims(text: str):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise SystemExit2(f"bad dims list {text!r}") from exc


def _cmd_gen(args) -> int:
    matrix = generate(args.family, args.n, args.seed)
    _write(jsonio.dumps(jsonio.matrix_to_obj(matrix)), args.out)
    return 0


def _cmd_flag(args) -> int:
    matrix = _input_matrix(args)
    report = schur_flag(matrix, dyadic_targets(args.levels))
    _write(jsonio.dumps(jsonio.flag_report_to_obj(report)), args.out)
    return 0 if report.max_residual <= args.tol else 1


def _cmd_compress(args) -> int:
    supplier = schur_supplier if args.supplier == "schur" else optimizer_supplier()
    if args.dims:
        if args.family is None:
            raise SystemExit2("--dims sweep requires --family")
        spec = ExperimentSpec(
            family=args.family, dims=_parse_dims(args.dims), seed=args.seed
        )
        records = compress_bench(spec, args.eps, args.levels, supplier)
        if args.format == "csv":
            _write(records_to_csv(records, spec), args.out)
        else:
            _write(jsonio.dumps(records_to_obj(records, spec)), args.out)
        return 1 if any(r.error is not None for r in records) else 0
    matrix = _input_matrix(args)
    report = dyadic_compress(matrix, args.eps, args.levels, supplier)
    _write(jsonio.dumps(jsonio.compression_report_to_obj(report)), args.out)
    return 0


def _cmd_commdist(args) -> int:
    matrix = _input_matrix(args)
    k = args.k if args.k is not None else matrix.n // 2
    cfg = OptimizerConfig(seed=args.seed)
    if args.restarts is not None or args.iters is not None:
        from dataclasses import replace

        cfg = replace(
            cfg,
            restarts=args.restarts if args.restarts is not None else cfg.restarts,
            max_iters=args.iters if args.iters is not None else cfg.max_iters,
        )
    result = minimize(matrix, k, args.objective, cfg)
    _write(jsonio.dumps(jsonio.distance_result_to_obj(result)), args.out)
    return 0


def _cmd_lattice(args) -> int:
    if args.left and args.right:
        s = jsonio.load_matrix(args.left)
        t = jsonio.load_matrix(args.right)
        mapping = st_ts_isomorphism(s, t)
        _write(jsonio.dumps(jsonio.lattice_map_to_obj(mapping)), args.out)
        return 0
    if args.infile:
        matrix = jsonio.load_matrix(args.infile)
        lattice = enumerate_lattice(matrix)
        _write(jsonio.dumps(jsonio.lattice_to_obj(lattice)), args.out)
        return 0
    raise SystemExit2("lattice needs --in, or --left and --right")


def _cmd_probe(args) -> int:
    cfg = OptimizerConfig(
        restarts=args.restarts, max_iters=args.iters, seed=args.seed
    )
    spec = ExperimentSpec(
        family=args.family,
        dims=_parse_dims(args.dims),
        seed=args.seed,
        objective=args.objective,
        k_rule="half" if args.k is None else args.k,
        optimizer=cfg,
    )
    records = gamma_probe(spec)
    if args.format == "csv":
        _write(records_to_csv(records, spec), args.out)
    else:
        _write(jsonio.dumps(records_to_obj(records, spec)), args.out)
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "flag": _cmd_flag,
    "compress": _cmd_compress,
    "commdist": _cmd_commdist,
    "lattice": _cmd_lattice,
    "probe": _cmd_probe,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    try:
        return _COMMANDS[args.command](args)
    except SystemExit2 as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except TracialError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
