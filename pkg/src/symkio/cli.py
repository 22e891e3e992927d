"""Command-line front end: ``symkio run | sweep | plan | certify``.

Exit status is 0 when every run completed and satisfied its checks, 1 when a
run raised or violated a check, and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from pathlib import Path

from . import _backend
from .bounds import hmax_bound, pmax_table
from .experiment import ALGOS, CSV_HEADER, ExperimentSpec, run, sweep
from .io_model import LedgerError
from .matrix import read_matrix, write_matrix
from .tbs import PLAN_CSV_HEADER, build_plan

log = logging.getLogger("symkio")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _algo_list(text: str) -> list[str]:
    algos = [a.strip() for a in text.split(",") if a.strip()]
    for a in algos:
        if a not in ALGOS:
            raise argparse.ArgumentTypeError(f"unknown algorithm {a!r}")
    return algos


def _spec_b(algo: str, tile, block):
    if algo == "tbs-tiled":
        return tile
    if algo == "lbc":
        return block
    return None


def _emit(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _report_problems(reports, errors) -> int:
    status = 0
    for rep in reports:
        for v in rep.violations:
            log.error("%s N=%d S=%d: %s", rep.spec.algo, rep.spec.n, rep.spec.s, v)
            status = 1
    for spec, msg in errors:
        log.error("%s N=%d S=%d failed: %s", spec.algo, spec.n, spec.s, msg)
        status = 1
    return status


def cmd_run(args) -> int:
    A_in = read_matrix(args.in_matrix) if args.in_matrix else None
    n, m = args.n, args.m
    if A_in is not None:
        if hasattr(A_in, "cols"):
            n, m = A_in.rows, A_in.cols
        else:
            n = A_in.n
    if n is None:
        raise SystemExit("--n is required unless --in is given")
    if args.algo in ("ref-chol", "ooc-chol", "lbc"):
        m = None
    spec = ExperimentSpec(
        args.algo, n, args.mem, m, args.mode, args.seed, _spec_b(args.algo, args.tile, args.block)
    )
    sink: list = []
    rep = run(spec, A_in=A_in, result_sink=sink)
    _emit(CSV_HEADER + "\n" + rep.csv_row() + "\n", args.out)
    if args.out_matrix:
        write_matrix(args.out_matrix, sink[0])
    return _report_problems([rep], [])


def cmd_sweep(args) -> int:
    specs, seen = [], set()
    ms = args.m if args.m else [None]
    for algo, n, m, s in itertools.product(args.algo, args.n, ms, args.mem):
        if algo in ("ref-chol", "ooc-chol", "lbc"):
            m = None
        if (algo, n, m, s) in seen:
            continue
        seen.add((algo, n, m, s))
        specs.append(
            ExperimentSpec(algo, n, s, m, args.mode, args.seed, _spec_b(algo, args.tile, args.block))
        )
    if args.out is None or args.out == "-":
        reports, errors = sweep(specs, sys.stdout)
    else:
        reports, errors = sweep(specs, args.out)
    if args.plot_data:
        Path(args.plot_data).write_text(plot_data(reports))
    return _report_problems(reports, errors)


def plot_data(reports) -> str:
    """Whitespace-separated ``N ratio loads_A lower_bound`` blocks, one per (algo, M, S)."""
    groups: dict = {}
    for r in reports:
        groups.setdefault((r.spec.algo, r.spec.m, r.spec.s), []).append(r)
    parts = []
    for (algo, m, s), rows in groups.items():
        lines = [f"# algo={algo} M={'' if m is None else m} S={s}", "# N ratio loads_A lower_bound"]
        lines += [f"{r.spec.n} {r.ratio:.6f} {r.loads_A} {r.lower_bound:.3f}" for r in rows]
        parts.append("\n".join(lines))
    # two blank lines separate gnuplot data sets
    return "\n\n\n".join(parts) + ("\n" if parts else "")


def cmd_plan(args) -> int:
    rows = [PLAN_CSV_HEADER]
    n = args.n
    while True:
        plan = build_plan(n, args.mem, args.tile)
        rows.append(plan.csv_row())
        if plan.fallback:
            break
        n = plan.zone_rows
    _emit("\n".join(rows) + "\n", args.out)
    return 0


def cmd_certify(args) -> int:
    table = pmax_table(
        args.n, args.m, args.domain, max_triples=args.oracle_max_triples, method=args.method
    )
    lines = ["X,oracle_max,hmax_bound,slack"]
    bad = 0
    for X, best in enumerate(table):
        bound = hmax_bound(X)
        slack = bound - int(best)
        bad += slack < 0
        lines.append(f"{X},{int(best)},{bound:.6f},{slack:.6f}")
    _emit("\n".join(lines) + "\n", args.out)
    if bad:
        log.error("%d values of X exceed the bound", bad)
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="symkio", description=__doc__.splitlines()[0])
    p.add_argument("--backend", choices=("cython", "python"), default=None,
                   help="kernel backend (default: compiled when available)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, multi: bool):
        conv_int = _int_list if multi else int
        sp.add_argument("--algo", required=True, type=_algo_list if multi else str,
                        choices=None if multi else ALGOS,
                        help="algorithm" + (" list, comma-separated" if multi else ""))
        sp.add_argument("--n", type=conv_int, required=multi, help="matrix side N")
        sp.add_argument("--m", type=conv_int, default=None, help="columns of A (SYRK only)")
        sp.add_argument("--mem", type=conv_int, required=True, help="fast-memory size S in elements")
        sp.add_argument("--tile", type=int, default=None, help="tile side b for tbs-tiled")
        sp.add_argument("--block", type=int, default=None,
                        help="lbc block size (default isqrt(N))")
        sp.add_argument("--mode", choices=("count", "compute"), default="count",
                        help="count: ledger only; compute: also do the arithmetic and verify (default count)")
        sp.add_argument("--seed", type=int, default=0, help="random input seed (default 0)")
        sp.add_argument("--out", default=None, help="CSV output path (default stdout)")

    r = sub.add_parser("run", help="run one experiment and print a CSV row")
    common(r, multi=False)
    r.add_argument("--in", dest="in_matrix", default=None,
                   help="input matrix file (dense A for SYRK, packed A for Cholesky)")
    r.add_argument("--out-matrix", default=None, help="write the result matrix here")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run the cartesian product of the given lists")
    common(s, multi=True)
    s.add_argument("--plot-data", default=None, help="also write gnuplot-style data blocks here")
    s.set_defaults(func=cmd_sweep)

    pl = sub.add_parser("plan", help="print the triangle-block plan of each recursion level")
    pl.add_argument("--n", type=int, required=True)
    pl.add_argument("--mem", type=int, required=True)
    pl.add_argument("--tile", type=int, default=1)
    pl.add_argument("--out", default=None)
    pl.set_defaults(func=cmd_plan)

    c = sub.add_parser("certify", help="compare the exact oracle with the analytic bound")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--m", type=int, default=1, help="iterations (ignored for chol)")
    c.add_argument("--domain", choices=("syrk", "chol"), default="syrk")
    c.add_argument("--method", choices=("auto", "raw", "iter"), default="auto")
    c.add_argument("--oracle-max-triples", type=int, default=64,
                   help="refuse domains with more operations than this (default 64)")
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_certify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="symkio: %(message)s")
    try:
        with _backend.use_backend(args.backend or _backend.name()):
            return args.func(args)
    except (ValueError, OSError, LedgerError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
