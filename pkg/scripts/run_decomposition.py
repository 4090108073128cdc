#!/usr/bin/env python3
"""Signal/interference/total power split of the equivalent channel for
the relaxed and projected MRT and total-power designs (K=5, N=64).

Render afterwards with: bdris-plot decomposition --in out/decomposition.csv --out out/decomposition.png
"""

import argparse
from pathlib import Path

from bdris.config import SystemConfig
from bdris.harness import emit_csv, run_decomposition


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--out-dir", default="out")
    args = ap.parse_args()

    res = run_decomposition(SystemConfig(K=args.k, N=args.n), trials=args.trials)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_csv(res, out / "decomposition.csv")
    print(f"wrote {out / 'decomposition.csv'} ({len(res.rows)} rows)")


if __name__ == "__main__":
    main()
