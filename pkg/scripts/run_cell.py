"""Run one simulation cell and print its averaged scores.

    python scripts/run_cell.py --model pvar --q 24 --T 4000 --reps 100
"""

import argparse
import json
import time

from scbmvar.bench import BenchConfig, run_benchmark


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--model", default="pvar", choices=["pvar", "vhar"])
    p.add_argument("--path", type=int, default=1)
    p.add_argument("--type", type=int, default=1)
    p.add_argument("--q", type=int, default=24)
    p.add_argument("--T", type=int, default=4000)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--smoothing", default="both", choices=["none", "cv", "both"])
    p.add_argument("--degree-law", default="homogeneous", choices=["homogeneous", "lognormal"])
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    cfg = BenchConfig(
        model=args.model, path=args.path, type=args.type, q=args.q, T=args.T,
        replications=args.reps, seed=args.seed, smoothing=args.smoothing,
        degree_law=args.degree_law, workers=args.workers,
    )
    start = time.perf_counter()
    row = run_benchmark(cfg)
    alphas = [r.alpha for r in row.replications if not r.skipped]
    summary = dict(zip(["model", "path", "type", "q", "T", "acc_cv", "acc_0", "ari_cv", "ari_0", "skipped"], row.csv_row()))
    summary["mean_phi"] = round(sum(r.phi for r in row.replications) / len(row.replications), 4)
    summary["mean_alpha"] = round(sum(alphas) / len(alphas), 6) if alphas else None
    summary["seconds"] = round(time.perf_counter() - start, 1)
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
