"""Compare the two node-propensity laws on one cell.

``homogeneous`` sets every propensity to one so the link matrix is the block
density; ``lognormal`` draws log-normal propensities normalized to sum to one
within each community. The second law produces very sparse graphs at q=24, so
accuracy stays near chance even for long series.

    python scripts/compare_degree_laws.py --T 4000 --reps 20
"""

import argparse

import numpy as np

from scbmvar.bench import DEGREE_LAWS, BenchConfig, build_specs, replication_seed, run_benchmark


def mean_edges(cfg, n=20):
    counts = []
    for r in range(n):
        rng = np.random.default_rng(replication_seed(cfg.seed, r).spawn(4)[0])
        graphs = build_specs(cfg, rng)
        graphs.resample(rng)
        counts.append(np.mean([(A > 0).sum() for A in graphs.adjacency]))
    return float(np.mean(counts))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--q", type=int, default=24)
    p.add_argument("--T", type=int, default=4000)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=2024)
    args = p.parse_args()

    print(f"{'law':<12} {'edges/season':>12} {'acc_0':>8} {'ari_0':>8}")
    for law in DEGREE_LAWS:
        cfg = BenchConfig(model="pvar", q=args.q, T=args.T, replications=args.reps, seed=args.seed,
                          smoothing="none", degree_law=law)
        row = run_benchmark(cfg)
        print(f"{law:<12} {mean_edges(cfg):>12.1f} {row.acc_0:>8.3f} {row.ari_0:>8.3f}")


if __name__ == "__main__":
    main()
