"""Monte-Carlo benchmark over community paths, link types, sizes and lengths."""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .blockmodel import (
    BlockModelSpec,
    SeasonalGraphSequence,
    make_equal_memberships,
    sample_propensities,
    uniform_propensities,
)
from .crossval import select_alpha
from .errors import ConfigError, ScbmError, StabilizationError
from .estimate import estimate_pvar, estimate_vhar
from .metrics import benchmark_scores
from .simulate import simulate
from .spectral import CommunityPath, cocluster_matrices, seasonal_matrices
from .transition import stabilize

log = logging.getLogger(__name__)

# (K_y1, K_z1, ..., K_ys, K_zs)
PVAR_PATHS: Dict[int, Tuple[int, ...]] = {
    1: (2, 2, 2, 2, 2, 2, 2, 2),
    2: (4, 4, 4, 4, 4, 4, 4, 4),
    3: (2, 3, 3, 3, 3, 3, 3, 2),
    4: (2, 3, 3, 4, 4, 4, 4, 2),
}
# (K_y(d), K_z(d), K_y(w), K_z(w), K_y(m), K_z(m))
VHAR_PATHS: Dict[int, Tuple[int, ...]] = {
    1: (2, 2, 2, 2, 2, 2),
    2: (4, 4, 4, 4, 4, 4),
    3: (2, 2, 2, 3, 3, 3),
    4: (4, 4, 4, 2, 2, 2),
}
DIAGONALS = {"pvar": (0.5, 0.7, 0.6, 0.5), "vhar": (0.7, 0.8, 0.9)}
OFF_DIAGONAL = {1: 0.01, 2: 0.02}
PHI0 = {"pvar": 0.99, "vhar": 0.8}
DEGREE_LAWS = ("homogeneous", "lognormal")
SMOOTHING = ("none", "cv", "both")
CSV_COLUMNS = ["model", "path", "type", "q", "T", "acc_cv", "acc_0", "ari_cv", "ari_0", "skipped"]


@dataclass
class BenchConfig:
    """One benchmark cell.

    ``degree_law`` chooses the node propensities: ``"homogeneous"`` gives
    every node of a community the same propensity and reads ``B`` as block
    edge densities; ``"lognormal"`` draws log-normal(2, 1) propensities that
    sum to one per community and multiplies them into ``B`` directly.
    """

    model: str = "pvar"
    path: int = 1
    type: int = 1
    q: int = 24
    T: int = 400
    replications: int = 100
    seed: int = 0
    smoothing: str = "both"
    folds: int = 5
    degree_law: str = "homogeneous"
    burn_in: int = 500
    rho_target: float = 0.95
    shrink: float = 0.9
    cv_complement: bool = False
    workers: int = 1

    def validate(self) -> None:
        if self.model not in ("pvar", "vhar"):
            raise ConfigError(f"model: expected 'pvar' or 'vhar', got {self.model!r}")
        paths = PVAR_PATHS if self.model == "pvar" else VHAR_PATHS
        if self.path not in paths:
            raise ConfigError(f"path: expected one of {sorted(paths)}, got {self.path!r}")
        if self.type not in OFF_DIAGONAL:
            raise ConfigError(f"type: expected 1 or 2, got {self.type!r}")
        if self.smoothing not in SMOOTHING:
            raise ConfigError(f"smoothing: expected one of {SMOOTHING}, got {self.smoothing!r}")
        if self.degree_law not in DEGREE_LAWS:
            raise ConfigError(f"degree_law: expected one of {DEGREE_LAWS}, got {self.degree_law!r}")
        if self.replications < 1:
            raise ConfigError("replications must be positive")
        if self.T < 1 or self.q < 1:
            raise ConfigError("q and T must be positive")
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        for k in set(paths[self.path]):
            if self.q % k:
                raise ConfigError(f"q={self.q} is not divisible by the community count {k}")

    @property
    def path_tuple(self) -> Tuple[int, ...]:
        return (PVAR_PATHS if self.model == "pvar" else VHAR_PATHS)[self.path]

    @property
    def K_y(self) -> List[int]:
        return list(self.path_tuple[0::2])

    @property
    def K_z(self) -> List[int]:
        return list(self.path_tuple[1::2])

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)


def link_matrix(K_y: int, K_z: int, diagonal: float, off: float) -> np.ndarray:
    """``diagonal`` on the leading square, ``off`` on the sub- and super-diagonals, 0 elsewhere."""
    B = np.zeros((K_y, K_z))
    for k in range(min(K_y, K_z)):
        B[k, k] = diagonal
    for k in range(K_y):
        for r in (k - 1, k + 1):
            if 0 <= r < K_z and r != k:
                B[k, r] = off
    return B


def build_specs(cfg: BenchConfig, rng: np.random.Generator) -> SeasonalGraphSequence:
    diag = DIAGONALS[cfg.model]
    off = OFF_DIAGONAL[cfg.type]
    specs = []
    for m, (ky, kz) in enumerate(zip(cfg.K_y, cfg.K_z)):
        y = make_equal_memberships(cfg.q, ky)
        z = make_equal_memberships(cfg.q, kz)
        B = link_matrix(ky, kz, diag[m], off)
        if cfg.degree_law == "lognormal":
            ty, tz = sample_propensities(y, rng), sample_propensities(z, rng)
            scaled = False
        else:
            ty, tz = uniform_propensities(y), uniform_propensities(z)
            scaled = True
        specs.append(BlockModelSpec(y, z, B, ty, tz, block_scaled=scaled))
    return SeasonalGraphSequence(specs, cyclic=cfg.model == "pvar")


def truth_path(graphs: SeasonalGraphSequence, kind: str) -> CommunityPath:
    specs = graphs.specs
    if kind == "vhar":
        labels = [specs[0].y, specs[1].y, specs[2].y, specs[2].z]
        K = [specs[0].K_y, specs[1].K_y, specs[2].K_y, specs[2].K_z]
    else:
        labels = [sp.y for sp in specs]
        K = [sp.K_y for sp in specs]
    return CommunityPath(kind, labels, K)


def replication_seed(seed: int, r: int) -> np.random.SeedSequence:
    """Seed of replication ``r``: ``SeedSequence(seed, spawn_key=(r,))``, independent of the cell size."""
    return np.random.SeedSequence(seed, spawn_key=(r,))


@dataclass
class ReplicationResult:
    index: int
    acc_cv: float = float("nan")
    acc_0: float = float("nan")
    ari_cv: float = float("nan")
    ari_0: float = float("nan")
    alpha: float = float("nan")
    phi: float = float("nan")
    skipped: bool = False


def run_replication(cfg: BenchConfig, r: int) -> ReplicationResult:
    children = replication_seed(cfg.seed, r).spawn(4)
    graph_rng, sim_rng, cv_rng, km_rng = (np.random.default_rng(c) for c in children)
    graphs = build_specs(cfg, graph_rng)
    graphs.resample(graph_rng)
    try:
        stab = stabilize(graphs, PHI0[cfg.model], cfg.rho_target, cfg.shrink, graph_rng, kind=cfg.model)
    except StabilizationError as exc:
        log.warning("replication %d skipped: %s", r, exc)
        return ReplicationResult(r, skipped=True)
    panel = simulate(stab.transitions, cfg.T, cfg.burn_in, sim_rng)
    try:
        if cfg.model == "vhar":
            est = estimate_vhar(panel)
        else:
            est = estimate_pvar(panel, graphs.s, 1)
    except ScbmError as exc:
        log.warning("replication %d skipped: %s", r, exc)
        return ReplicationResult(r, skipped=True, phi=stab.phi)
    mats = seasonal_matrices(est.transitions)
    truth = truth_path(graphs, cfg.model)
    out = ReplicationResult(r, phi=stab.phi)
    if cfg.smoothing in ("none", "both"):
        path = cocluster_matrices(mats, cfg.model, cfg.K_y, cfg.K_z, 0.0, km_rng)
        out.acc_0, out.ari_0 = benchmark_scores(path, truth)
    if cfg.smoothing in ("cv", "both"):
        report = select_alpha(mats, cfg.model, cfg.K_y, cfg.K_z, cfg.folds, rng=cv_rng, complement=cfg.cv_complement)
        path = cocluster_matrices(mats, cfg.model, cfg.K_y, cfg.K_z, report.alpha, km_rng)
        out.acc_cv, out.ari_cv = benchmark_scores(path, truth)
        out.alpha = report.alpha
    return out


def _run_chunk(args) -> List[ReplicationResult]:
    cfg, indices = args
    return [run_replication(cfg, r) for r in indices]


def run_replications(cfg: BenchConfig) -> List[ReplicationResult]:
    cfg.validate()
    indices = list(range(cfg.replications))
    workers = max(1, min(cfg.workers, os.cpu_count() or 1, len(indices)))
    if workers == 1:
        return [run_replication(cfg, r) for r in indices]
    chunks = [(cfg, indices[i::workers]) for i in range(workers)]
    with ProcessPoolExecutor(workers) as pool:
        results = [x for chunk in pool.map(_run_chunk, chunks) for x in chunk]
    return sorted(results, key=lambda x: x.index)


@dataclass
class BenchRow:
    model: str
    path: int
    type: int
    q: int
    T: int
    acc_cv: float
    acc_0: float
    ari_cv: float
    ari_0: float
    skipped: int
    replications: List[ReplicationResult] = field(default_factory=list, repr=False)

    def csv_row(self) -> List[str]:
        return [
            self.model, str(self.path), str(self.type), str(self.q), str(self.T),
            _fmt(self.acc_cv), _fmt(self.acc_0), _fmt(self.ari_cv), _fmt(self.ari_0), str(self.skipped),
        ]


def _fmt(x: float) -> str:
    return "" if np.isnan(x) else f"{x:.6f}"


def _mean(values: Sequence[float]) -> float:
    vals = [v for v in values if not np.isnan(v)]
    return float(np.mean(vals)) if vals else float("nan")


def run_benchmark(cfg: BenchConfig) -> BenchRow:
    """Run every replication of a cell and average the scores (skipped ones excluded)."""
    reps = run_replications(cfg)
    kept = [r for r in reps if not r.skipped]
    return BenchRow(
        cfg.model, cfg.path, cfg.type, cfg.q, cfg.T,
        _mean([r.acc_cv for r in kept]), _mean([r.acc_0 for r in kept]),
        _mean([r.ari_cv for r in kept]), _mean([r.ari_0 for r in kept]),
        len(reps) - len(kept), reps,
    )


def cell_key(row) -> Tuple[str, int, int, int, int]:
    if isinstance(row, dict):
        return (row["model"], int(row["path"]), int(row["type"]), int(row["q"]), int(row["T"]))
    return (row.model, row.path, row.type, row.q, row.T)


def read_results(path) -> List[dict]:
    path = Path(path)
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_results(rows: Sequence[BenchRow], path, append: bool = False) -> None:
    path = Path(path)
    new = not (append and path.exists())
    with open(path, "w" if new else "a", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if new:
            writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_row())


def run_grid(cfgs: Sequence[BenchConfig], out_csv, progress=None) -> List[BenchRow]:
    """Run cells in order, appending each finished row; cells already in ``out_csv`` are skipped."""
    done = {cell_key(r) for r in read_results(out_csv)}
    if not done and Path(out_csv).exists():
        Path(out_csv).unlink()
    rows = []
    for i, cfg in enumerate(cfgs):
        key = (cfg.model, cfg.path, cfg.type, cfg.q, cfg.T)
        if key in done:
            if progress:
                progress(f"[{i + 1}/{len(cfgs)}] {key} already done")
            continue
        row = run_benchmark(cfg)
        write_results([row], out_csv, append=True)
        rows.append(row)
        if progress:
            progress(f"[{i + 1}/{len(cfgs)}] {key} acc_cv={_fmt(row.acc_cv)} acc_0={_fmt(row.acc_0)}")
    return rows
