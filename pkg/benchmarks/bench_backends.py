"""Time the compiled and numpy kernel backends on the same schedules.

    python benchmarks/bench_backends.py [--repeat 3] [--quick]

Each case runs in count mode (ledger only) and compute mode; the ledgers of
the two backends are compared so a speed-up never hides a behaviour change.
Compute-mode times include input generation and the reference check.
"""

import argparse
import sys
import time

from symkio import _backend
from symkio.experiment import ExperimentSpec, run

CASES = [
    ("tbs", 400, 55, 8, None),
    ("tbs-tiled", 400, 120, 8, 2),
    ("ooc-syrk", 400, 55, 8, None),
    ("lbc", 300, 120, None, None),
    ("ooc-chol", 300, 120, None, None),
]
QUICK = [(a, n // 4, s, m, b) for a, n, s, m, b in CASES]


def _time(spec, repeat):
    best, rep = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        rep = run(spec)
        best = min(best, time.perf_counter() - t0)
    return best, rep


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--quick", action="store_true", help="smaller sizes")
    args = p.parse_args(argv)
    backends = _backend.available()
    if "cython" not in backends:
        print("compiled core not built; only the numpy backend is available", file=sys.stderr)
    print(f"{'algo':<10} {'N':>5} {'S':>4} {'mode':<8}"
          + "".join(f"{b + ' [s]':>14}" for b in backends) + f"{'speed-up':>10}")
    status = 0
    for algo, n, s, m, b in QUICK if args.quick else CASES:
        for mode in ("count", "compute"):
            spec = ExperimentSpec(algo, n, s, m, mode, 0, b)
            times, fields = [], []
            for name in backends:
                with _backend.use_backend(name):
                    t, rep = _time(spec, args.repeat)
                times.append(t)
                fields.append(rep.csv_fields())
            if any(f != fields[0] for f in fields):
                print(f"ledger mismatch for {algo} N={n} S={s} {mode}", file=sys.stderr)
                status = 1
            if "cython" in backends:
                speed = f"{times[backends.index('python')] / times[backends.index('cython')]:.0f}x"
            else:
                speed = "-"
            print(f"{algo:<10} {n:>5} {s:>4} {mode:<8}"
                  + "".join(f"{t:>14.4f}" for t in times) + f"{speed:>10}")
    return status


if __name__ == "__main__":
    sys.exit(main())
