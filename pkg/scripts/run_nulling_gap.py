#!/usr/bin/env python3
"""Sum rate vs transmit power for the two nulling technologies (random
initialization, uniform power), one CSV per surface size, K=5.

Render each CSV with: bdris-plot sumrate-power --in out/nulling_gap_N9.csv --out ...
"""

import argparse
from pathlib import Path

from bdris.config import SystemConfig
from bdris.harness import ExperimentSpec, Sweep, emit_csv, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--n", type=int, nargs="+", default=[9, 16, 25, 36, 49, 64])
    ap.add_argument("--pmax-dbm", type=float, nargs="+",
                    default=[0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
    ap.add_argument("--out-dir", default="out")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for n in args.n:
        spec = ExperimentSpec(
            base=SystemConfig(K=args.k, N=n),
            sweep=Sweep("power", tuple(args.pmax_dbm)),
            designs=("bdris-null-rand", "dris-null"),
            bs_schemes=("UP",),
            trials=args.trials,
        )
        res = run_experiment(spec, workers=args.workers)
        path = out / f"nulling_gap_N{n}.csv"
        emit_csv(res, path)
        print(f"wrote {path} ({len(res.rows)} rows)")


if __name__ == "__main__":
    main()
