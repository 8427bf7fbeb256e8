"""Dyad-fold cross-validation of the PisCES smoothing parameter."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .spectral import (
    ALPHA_MAX,
    boundary_ranks,
    cocluster_pvar,
    cocluster_var,
    cocluster_vhar,
    singular_bases,
    smooth_bases,
)


@dataclass
class AlphaGrid:
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("grid must be a non-empty 1-d array")
        if np.any(np.diff(self.values) <= 0):
            raise ValueError("grid must be strictly increasing")

    @property
    def alpha_max(self) -> float:
        return float(self.values[-1])

    @property
    def alpha_min(self) -> float:
        return float(self.values[0])

    def __len__(self) -> int:
        return self.values.size


def make_alpha_grid(n: int = 20, ratio: float = 0.01, alpha_max: float = ALPHA_MAX) -> AlphaGrid:
    """``n`` log-spaced values from ``ratio * alpha_max`` to ``alpha_max``."""
    if n == 1:
        return AlphaGrid([alpha_max])
    return AlphaGrid(np.geomspace(ratio * alpha_max, alpha_max, n))


@dataclass
class FoldAssignment:
    """``folds[m, i, j]`` is the 0-based fold of dyad ``(i, j)`` in season ``m``; -1 on the diagonal."""

    folds: np.ndarray
    M: int

    @property
    def s(self) -> int:
        return self.folds.shape[0]

    @property
    def q(self) -> int:
        return self.folds.shape[1]

    def mask(self, m: int, fold: int, complement: bool = False) -> np.ndarray:
        """Boolean matrix of kept entries; the diagonal is always kept."""
        f = self.folds[m]
        keep = (f != fold) if complement else (f == fold)
        return keep | (f < 0)


def make_folds(q: int, s: int, M: int, rng: np.random.Generator) -> FoldAssignment:
    """Balanced random split of the ``q(q-1)`` off-diagonal dyads of each season."""
    if M < 2:
        raise ValueError("need at least two folds")
    if q < 2:
        raise ValueError("need at least two nodes")
    n = q * (q - 1)
    if M > n:
        raise ValueError(f"{M} folds exceed the {n} dyads per season")
    off = ~np.eye(q, dtype=bool)
    folds = np.full((s, q, q), -1, dtype=int)
    base = np.arange(n) % M
    for m in range(s):
        folds[m][off] = rng.permutation(base)
    return FoldAssignment(folds, M)


def complete_matrix(masked: np.ndarray, K: int) -> np.ndarray:
    """Rank-``K`` truncated SVD reconstruction."""
    masked = np.asarray(masked, dtype=float)
    if not 0 <= K <= min(masked.shape):
        raise ValueError(f"K={K} out of range")
    U, sv, Vt = np.linalg.svd(masked)
    return (U[:, :K] * sv[:K]) @ Vt[:K]


def fit_block_parameters(Phi: np.ndarray, y, z, K_y: Optional[int] = None, K_z: Optional[int] = None):
    """Degree-corrected block fit of a (completed) matrix.

    Returns ``(theta_y, theta_z, B, P)`` with row/column sums as propensities,
    ``B[k, r]`` the block total over the block total of ``theta_y theta_z``, and
    ``P = theta_y theta_z B[y, z]``.  Zero denominators give ``B = 0``.
    """
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=int)
    z = np.asarray(z, dtype=int)
    q = Phi.shape[0]
    if y.shape != (q,) or z.shape != (Phi.shape[1],):
        raise ValueError("label lengths must match the matrix")
    K_y = int(y.max()) + 1 if K_y is None else K_y
    K_z = int(z.max()) + 1 if K_z is None else K_z
    ty = Phi.sum(axis=1)
    tz = Phi.sum(axis=0)
    Yh = np.eye(K_y)[y]
    Zh = np.eye(K_z)[z]
    num = Yh.T @ Phi @ Zh
    den = np.outer(Yh.T @ ty, Zh.T @ tz)
    zero = den == 0
    if np.any(zero & (num != 0)):
        warnings.warn("zero block denominator; B entry set to 0", RuntimeWarning)
    B = np.divide(num, den, out=np.zeros_like(num), where=~zero)
    P = np.outer(ty, tz) * B[np.ix_(y, z)]
    return ty, tz, B, P


def selection_criterion(Phis: Sequence[np.ndarray], Ps: Sequence[np.ndarray]) -> float:
    """``sum_m Tr(Phi_m)/q * (1 - Tr(P_m)/q)``."""
    if len(Phis) != len(Ps):
        raise ValueError("need one fitted matrix per season")
    H = 0.0
    for Phi, P in zip(Phis, Ps):
        q = Phi.shape[0]
        H += np.trace(Phi) / q * (1.0 - np.trace(P) / q)
    return float(H)


@dataclass
class CVReport:
    grid: np.ndarray
    H: np.ndarray  # (M, len(grid))
    alpha: float
    complement: bool = False
    notes: List[str] = field(default_factory=list)

    @property
    def totals(self) -> np.ndarray:
        return self.H.sum(axis=0)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.tolist(),
            "H": self.H.tolist(),
            "totals": self.totals.tolist(),
            "selected_alpha": self.alpha,
            "mask": "complement" if self.complement else "literal",
            "dyads": "all ordered off-diagonal pairs per season",
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _season_labels(kind, bases, K, K_y, K_z, rng):
    if kind == "vhar":
        path = cocluster_vhar(bases, K, rng)
    elif kind == "var":
        path = cocluster_var(bases[0], K_y[0], K_z[0], rng)
    else:
        path = cocluster_pvar(bases, K, rng)
    return [(path.sending(m), path.receiving(m)) for m in range(len(bases))]


def select_alpha(
    mats: Sequence[np.ndarray],
    kind: str,
    K_y: Sequence[int],
    K_z: Sequence[int],
    M: int = 5,
    grid: Optional[AlphaGrid] = None,
    rng: Optional[np.random.Generator] = None,
    complement: bool = False,
) -> CVReport:
    """Pick the grid value minimizing the fold-summed criterion (ties go to the smaller value).

    ``mats`` are the seasonal autoregressive matrices.  Each fold keeps its own
    dyads (or, with ``complement``, all other dyads), is completed at rank
    ``min(K_y, K_z)``, smoothed and co-clustered, and scored against the full
    matrices' traces.
    """
    if rng is None:
        rng = np.random.default_rng()
    grid = grid or make_alpha_grid()
    mats = [np.asarray(x, dtype=float) for x in mats]
    s = len(mats)
    q = mats[0].shape[0]
    K = boundary_ranks(kind, K_y, K_z)
    folds = make_folds(q, s, M, rng)
    cell_seeds = np.random.SeedSequence(rng.integers(2**63)).spawn(M * len(grid))
    H = np.zeros((M, len(grid)))
    for fold in range(M):
        completed = [
            complete_matrix(np.where(folds.mask(m, fold, complement), mats[m], 0.0), min(K_y[m], K_z[m]))
            for m in range(s)
        ]
        raw = singular_bases(completed, K_y, K_z)
        for g, alpha in enumerate(grid.values):
            cell_rng = np.random.default_rng(cell_seeds[fold * len(grid) + g])
            bases = [b.normalize() for b in smooth_bases(raw, float(alpha))]
            labels = _season_labels(kind, bases, K, K_y, K_z, cell_rng)
            Ps = [
                fit_block_parameters(completed[m], y, z, K_y[m], K_z[m])[3]
                for m, (y, z) in enumerate(labels)
            ]
            H[fold, g] = selection_criterion(mats, Ps)
    best = int(np.argmin(H.sum(axis=0)))
    return CVReport(grid.values.copy(), H, float(grid.values[best]), complement)
