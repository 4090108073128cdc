#!/usr/bin/env python3
"""Benchmark comparison at 5 dBm: sum rate vs number of users (N = 5K)
and vs number of elements (K = 2), including the relay and
specular-reflection baselines.
"""

import argparse
from pathlib import Path

from bdris.config import SystemConfig
from bdris.harness import ExperimentSpec, Sweep, emit_csv, run_experiment

ALL_DESIGNS = (
    "bdris-mrt", "bdris-null-mrt-init", "dris-null", "bdris-maxF",
    "bdris-maxl2", "bs-zf", "bs-mrt", "nmimo-zf", "nmimo-mrt",
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--users", type=int, nargs="+", default=[2, 4, 6, 8, 10])
    ap.add_argument("--elements", type=int, nargs="+", default=[4, 8, 16, 32, 64, 128])
    ap.add_argument("--out-dir", default="out")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    users = ExperimentSpec(
        base=SystemConfig(K=2, N=10),
        sweep=Sweep("users", tuple(float(k) for k in args.users), n_rule="5K"),
        designs=ALL_DESIGNS,
        bs_schemes=("ZF",),
        trials=args.trials,
    )
    res = run_experiment(users, workers=args.workers)
    emit_csv(res, out / "benchmarks_users.csv")
    print(f"wrote {out / 'benchmarks_users.csv'} ({len(res.rows)} rows)")

    elems = ExperimentSpec(
        base=SystemConfig(K=2, N=4),
        sweep=Sweep("elements", tuple(float(n) for n in args.elements)),
        designs=ALL_DESIGNS,
        bs_schemes=("ZF",),
        trials=args.trials,
    )
    res = run_experiment(elems, workers=args.workers)
    emit_csv(res, out / "benchmarks_elements.csv")
    print(f"wrote {out / 'benchmarks_elements.csv'} ({len(res.rows)} rows)")


if __name__ == "__main__":
    main()
