#!/usr/bin/env python3
"""Interference-nulling convergence traces: full-matrix surface vs the
diagonal comparator, K=8 users, N=144 elements, unit-variance fading.

Render afterwards with: bdris-plot convergence --in out/convergence.csv --out out/convergence.png
"""

import argparse
from pathlib import Path

from bdris.harness import ExperimentSpec, Sweep, convergence_config, emit_csv, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--init", choices=("rand", "mrt"), default="rand")
    ap.add_argument("--out-dir", default="out")
    args = ap.parse_args()

    design = "bdris-null-rand" if args.init == "rand" else "bdris-null-mrt-init"
    spec = ExperimentSpec(
        base=convergence_config(k=8, n=144),
        sweep=Sweep("convergence"),
        designs=(design, "dris-null"),
        trials=args.trials,
    )
    res = run_experiment(spec, workers=args.workers)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_csv(res, out / "convergence.csv")
    print(f"wrote {out / 'convergence.csv'} ({len(res.rows)} rows)")


if __name__ == "__main__":
    main()
