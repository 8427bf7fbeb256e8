"""Run the full simulation grid into a resumable CSV.

Cells already present in the output file are skipped, so an interrupted run can
simply be restarted.

    python scripts/run_grid.py --model pvar --out results/pvar.csv --reps 100
"""

import argparse
import itertools
from pathlib import Path

from scbmvar.bench import PVAR_PATHS, VHAR_PATHS, BenchConfig, run_grid

T_VALUES = {"pvar": [200, 400, 1000, 2000, 4000], "vhar": [1000, 2000, 4000, 8000]}
Q_VALUES = [24, 60, 120]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--model", default="pvar", choices=["pvar", "vhar"])
    p.add_argument("--out", required=True)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--q", type=int, nargs="*", default=Q_VALUES)
    p.add_argument("--T", type=int, nargs="*", default=None)
    p.add_argument("--smoothing", default="both", choices=["none", "cv", "both"])
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    paths = PVAR_PATHS if args.model == "pvar" else VHAR_PATHS
    Ts = args.T or T_VALUES[args.model]
    cfgs = [
        BenchConfig(model=args.model, path=path, type=kind, q=q, T=T, replications=args.reps,
                    seed=args.seed, smoothing=args.smoothing, workers=args.workers)
        for path, kind, q, T in itertools.product(sorted(paths), (1, 2), args.q, Ts)
    ]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    run_grid(cfgs, args.out, progress=lambda msg: print(msg, flush=True))


if __name__ == "__main__":
    main()
