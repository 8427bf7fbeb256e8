"""Spectral co-clustering of estimated transition matrices.

The pipeline is: seasonal autoregressive matrices, truncated SVD, optional
PisCES smoothing of the singular subspaces, row normalization, k-means on
staggered pairs of receiving/sending vectors, and label alignment.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigError
from .transition import TransitionSet

ALPHA_MAX = 1.0 / (4.0 * math.sqrt(2.0) + 2.0)
PISCES_TOL = 1e-6
PISCES_MAX_ITER = 100
ZERO_ROW_TOL = 1e-12


# ---------------------------------------------------------------- matrices


def seasonal_autoregressive_matrix(t: TransitionSet, m: int) -> np.ndarray:
    """``sum_h Phi_{h,m}'`` for 0-based season ``m``.

    For a VHAR, ``m`` = 0, 1, 2 selects the daily, weekly or monthly matrix.
    """
    if not 0 <= m < t.s:
        raise IndexError(f"season {m} out of range for s={t.s}")
    return sum(P.T for P in t.matrices[m])


def seasonal_matrices(t: TransitionSet) -> List[np.ndarray]:
    return [seasonal_autoregressive_matrix(t, m) for m in range(t.s)]


def _sign_fix(V: np.ndarray) -> np.ndarray:
    """Per-column signs making each column's largest-|entry| positive (first index on ties)."""
    if V.size == 0:
        return np.ones(V.shape[1])
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def top_singular_vectors(M: np.ndarray, K_left: int, K_right: int):
    """Leading left and right singular vectors of ``M``.

    Each singular pair is oriented so that the left vector's largest-|entry|
    is positive; the right vector takes the same sign so that
    ``X_L diag(sigma) X_R'`` still reconstructs ``M``.

    Returns ``(X_L, X_R, sigma)`` with ``sigma`` of length ``max(K_left, K_right)``.
    """
    M = np.asarray(M, dtype=float)
    q = min(M.shape)
    if not (0 <= K_left <= q and 0 <= K_right <= q):
        raise ValueError(f"need K <= {q}, got ({K_left}, {K_right})")
    U, sv, Vt = np.linalg.svd(M)
    k = max(K_left, K_right)
    signs = _sign_fix(U[:, :k])
    U = U[:, :k] * signs
    V = Vt[:k].T * signs
    return U[:, :K_left], V[:, :K_right], sv[:k]


def row_normalize(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Scale rows to unit length.

    Returns ``(X_star, zero_rows)``; rows with norm below 1e-12 are set to
    zero and flagged in the boolean mask.
    """
    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=1)
    zero = norms < ZERO_ROW_TOL
    out = np.zeros_like(X)
    out[~zero] = X[~zero] / norms[~zero, None]
    return out, zero


def _symmetrize(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    gap = np.max(np.abs(M - M.T), initial=0.0)
    if gap > 1e-10 * max(1.0, np.max(np.abs(M), initial=0.0)):
        raise ValueError(f"matrix is not symmetric (max asymmetry {gap:.3g})")
    return 0.5 * (M + M.T)


def _top_eigenvectors(M: np.ndarray, K: int) -> np.ndarray:
    w, V = np.linalg.eigh(M)
    if K < M.shape[0] and K > 0 and abs(w[-K] - w[-K - 1]) <= 1e-10:
        warnings.warn(
            f"eigenvalues {K} and {K + 1} coincide; the rank-{K} subspace is ambiguous",
            RuntimeWarning,
        )
    V = V[:, ::-1][:, :K]
    return V * _sign_fix(V)


def project_top_k(M: np.ndarray, K: int) -> np.ndarray:
    """Projector onto the ``K`` leading eigenvectors of a symmetric matrix."""
    M = _symmetrize(M)
    if not 0 <= K <= M.shape[0]:
        raise ValueError(f"K={K} out of range")
    V = _top_eigenvectors(M, K)
    return V @ V.T


def extract_basis_from_projector(U: np.ndarray, K: int) -> np.ndarray:
    """Orthonormal ``q x K`` basis ``X`` with ``X X'`` equal to the projector ``U``."""
    return _top_eigenvectors(_symmetrize(U), K)


@dataclass
class PiscesResult:
    projectors: List[np.ndarray]
    iterations: int
    converged: bool


def pisces_smooth(
    U: Sequence[np.ndarray],
    alpha: float,
    K: Sequence[int],
    tol: float = PISCES_TOL,
    max_iter: int = PISCES_MAX_ITER,
) -> PiscesResult:
    """Smooth a chain of rank-K projectors towards their neighbours.

    Every sweep updates all seasons from the previous iterate:
    ``Ubar_m <- Pi(alpha Ubar_{m-1} + U_m + alpha Ubar_{m+1}; K_m)`` where the
    first and last seasons have a single neighbour.
    """
    U = [np.asarray(x, dtype=float) for x in U]
    s = len(U)
    if s < 1:
        raise ValueError("need at least one projector")
    if len(K) != s:
        raise ValueError("one rank per season is required")
    if not 0 <= alpha <= ALPHA_MAX * (1 + 1e-12):
        raise ValueError(f"alpha must lie in [0, {ALPHA_MAX:.6f}]")
    cur = [x.copy() for x in U]
    for it in range(1, max_iter + 1):
        new = []
        for m in range(s):
            M = U[m].copy()
            if m > 0:
                M += alpha * cur[m - 1]
            if m < s - 1:
                M += alpha * cur[m + 1]
            new.append(project_top_k(0.5 * (M + M.T), K[m]))
        delta = max(np.linalg.norm(a - b) for a, b in zip(new, cur))
        cur = new
        if delta < tol:
            return PiscesResult(cur, it, True)
    warnings.warn(f"PisCES did not converge in {max_iter} iterations", RuntimeWarning)
    return PiscesResult(cur, max_iter, False)


# ---------------------------------------------------------------- k-means


def _kmeanspp(X: np.ndarray, K: int, rng: np.random.Generator, R: int) -> np.ndarray:
    n = X.shape[0]
    first = rng.integers(n, size=R)
    centers = [X[first]]
    d2 = ((X[None, :, :] - X[first][:, None, :]) ** 2).sum(-1)
    for _ in range(1, K):
        total = d2.sum(axis=1)
        u = rng.random(R)
        safe = np.where(total > 0, total, 1.0)
        cdf = np.cumsum(d2, axis=1) / safe[:, None]
        weighted = (cdf <= u[:, None]).sum(axis=1)
        uniform = (u * n).astype(int)
        choice = np.minimum(np.where(total > 0, weighted, uniform), n - 1)
        c = X[choice]
        centers.append(c)
        d2 = np.minimum(d2, ((X[None, :, :] - c[:, None, :]) ** 2).sum(-1))
    return np.stack(centers, axis=1)  # (R, K, d)


def _repair_empty(labels: np.ndarray, dist: np.ndarray, K: int) -> None:
    """Give each empty cluster the point farthest from its own centroid."""
    R, n = labels.shape
    counts = (labels[:, :, None] == np.arange(K)).sum(axis=1)
    for r in np.flatnonzero((counts == 0).any(axis=1)):
        c = counts[r]
        for k in np.flatnonzero(c == 0):
            own = dist[r, np.arange(n), labels[r]].copy()
            own[c[labels[r]] <= 1] = -1.0
            i = int(np.argmax(own))
            c[labels[r, i]] -= 1
            labels[r, i] = k
            c[k] += 1
            dist[r, i, k] = 0.0


def kmeans(
    points: np.ndarray,
    K: int,
    rng: np.random.Generator,
    restarts: int = 20,
    max_iter: int = 100,
):
    """Best of ``restarts`` Lloyd runs from k-means++ seeds.

    All restarts advance together as one batched array computation.

    Returns
    -------
    labels : (n,) int array, renamed in order of first appearance
    centroids : (K, d) array
    objective : float, within-cluster sum of squares
    """
    X = np.asarray(points, dtype=float)
    n = X.shape[0]
    if K < 1 or K > n:
        raise ValueError(f"k-means needs 1 <= K <= n, got K={K}, n={n}")
    R = max(1, int(restarts))
    C = _kmeanspp(X, K, rng, R)
    onehot_k = np.arange(K)
    labels = None
    for _ in range(max_iter):
        dist = ((X[None, :, None, :] - C[:, None, :, :]) ** 2).sum(-1)  # (R, n, K)
        new = dist.argmin(axis=2)
        _repair_empty(new, dist, K)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        onehot = (labels[:, :, None] == onehot_k).astype(float)
        counts = onehot.sum(axis=1)
        C = np.einsum("rnk,nd->rkd", onehot, X) / counts[:, :, None]
    obj = ((X[None, :, :] - np.take_along_axis(C, labels[:, :, None], axis=1)) ** 2).sum(axis=(1, 2))
    best = int(np.argmin(obj))
    lab = labels[best]
    # canonical names: order of first appearance
    _, first = np.unique(lab, return_index=True)
    order = np.argsort(first)
    rename = np.empty(K, dtype=int)
    rename[order] = np.arange(K)
    return rename[lab], C[best][order], float(obj[best])


# ---------------------------------------------------------------- paths


@dataclass
class SeasonalSingularBasis:
    """Left/right singular blocks of one season's autoregressive matrix."""

    left: np.ndarray
    right: np.ndarray
    values: np.ndarray
    smoothed: bool = False
    normalized: bool = False
    zero_rows_left: Optional[np.ndarray] = None
    zero_rows_right: Optional[np.ndarray] = None

    @property
    def rank_deficient(self) -> bool:
        v = self.values
        return bool(v.size and (v[0] == 0 or v[-1] <= 1e-12 * v[0]))

    def normalize(self) -> "SeasonalSingularBasis":
        L, zl = row_normalize(self.left)
        R, zr = row_normalize(self.right)
        return SeasonalSingularBasis(L, R, self.values, self.smoothed, True, zl, zr)


@dataclass
class CommunityPath:
    """Community labels at every boundary of a seasonal chain.

    Labels are 0-based here and 1-based in JSON.  For a PVAR with ``s``
    seasons, boundary ``m`` joins the receiving side of season ``m-1`` with
    the sending side of season ``m`` (boundary 0 wraps around).  A VHAR has
    four boundaries: daily sending, daily/weekly, weekly/monthly, monthly
    receiving.
    """

    kind: str
    labels: List[np.ndarray]
    K: List[int]
    pairing: List[str] = field(default_factory=list)
    permutations: List[List[int]] = field(default_factory=list)

    def __post_init__(self):
        self.labels = [np.asarray(x, dtype=int) for x in self.labels]
        if len(self.K) != len(self.labels):
            raise ValueError("one K per boundary is required")
        for lab, k in zip(self.labels, self.K):
            if lab.size and (lab.min() < 0 or lab.max() >= k):
                raise ValueError("labels must lie in 0..K-1")

    @property
    def boundaries(self) -> int:
        return len(self.labels)

    def sending(self, m: int) -> np.ndarray:
        """Sending labels of season ``m`` (0-based)."""
        return self.labels[m]

    def receiving(self, m: int) -> np.ndarray:
        """Receiving labels of season ``m`` (0-based)."""
        if self.kind in ("var", "vhar"):
            return self.labels[m + 1]
        return self.labels[(m + 1) % self.boundaries]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "boundaries": [
                {
                    "labels": (lab + 1).tolist(),
                    "K": int(k),
                    "pairing": self.pairing[b] if b < len(self.pairing) else None,
                    "permutation": (
                        [int(x) + 1 for x in self.permutations[b]] if b < len(self.permutations) else None
                    ),
                }
                for b, (lab, k) in enumerate(zip(self.labels, self.K))
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "CommunityPath":
        bs = d["boundaries"]
        perms = [[x - 1 for x in b["permutation"]] for b in bs if b.get("permutation") is not None]
        return cls(
            d["kind"],
            [np.asarray(b["labels"], dtype=int) - 1 for b in bs],
            [int(b["K"]) for b in bs],
            [b.get("pairing") or "" for b in bs],
            perms if len(perms) == len(bs) else [],
        )


def boundary_ranks(kind: str, K_y: Sequence[int], K_z: Sequence[int]) -> List[int]:
    """Community counts per boundary, checking the staggered constraints."""
    s = len(K_y)
    if len(K_z) != s:
        raise ConfigError("K_y and K_z need the same length")
    for m in range(1, s):
        if K_z[m - 1] != K_y[m]:
            raise ConfigError(f"K_z of season {m} ({K_z[m - 1]}) differs from K_y of season {m + 1} ({K_y[m]})")
    if kind in ("var", "vhar"):
        return [K_y[0]] + list(K_y[1:]) + [K_z[-1]]
    if K_z[-1] != K_y[0]:
        raise ConfigError(f"cyclic constraint: K_z of the last season ({K_z[-1]}) differs from K_y of the first ({K_y[0]})")
    return list(K_y)


def cocluster_pvar(basis: Sequence[SeasonalSingularBasis], K: Sequence[int], rng: np.random.Generator) -> CommunityPath:
    """k-means on ``(R_{m-1} | L_m)`` for every boundary, wrapping ``R_s`` onto ``L_1``.

    ``K`` lists the boundary community counts (``K_{y_m}`` for m = 1..s).
    """
    s = len(basis)
    if len(K) != s:
        raise ConfigError("one K per boundary is required")
    labels, pairing = [], []
    for m in range(s):
        prev = basis[m - 1]
        cur = basis[m]
        if prev.right.shape[1] != K[m] or cur.left.shape[1] != K[m]:
            raise ConfigError(f"boundary {m + 1}: vector counts do not match K={K[m]}")
        F = np.hstack([prev.right, cur.left])
        labels.append(kmeans(F, K[m], rng)[0])
        pairing.append(f"R{(m - 1) % s + 1}|L{m + 1}")
    return CommunityPath("pvar", labels, list(K), pairing)


def cocluster_var(basis: SeasonalSingularBasis, K_y: int, K_z: int, rng: np.random.Generator) -> CommunityPath:
    """Separate clusterings of the left (sending) and right (receiving) vectors."""
    labels = [kmeans(basis.left, K_y, rng)[0], kmeans(basis.right, K_z, rng)[0]]
    return CommunityPath("var", labels, [K_y, K_z], ["L", "R"])


def cocluster_vhar(basis: Sequence[SeasonalSingularBasis], K: Sequence[int], rng: np.random.Generator) -> CommunityPath:
    """Four clusterings: ``L_d``, ``(R_d | L_w)``, ``(R_w | L_m)``, ``R_m``."""
    if len(basis) != 3 or len(K) != 4:
        raise ConfigError("a VHAR path has three components and four boundaries")
    d, w, m = basis
    blocks = [d.left, np.hstack([d.right, w.left]), np.hstack([w.right, m.left]), m.right]
    names = ["Ld", "Rd|Lw", "Rw|Lm", "Rm"]
    widths = [(d.left.shape[1],), (d.right.shape[1], w.left.shape[1]),
              (w.right.shape[1], m.left.shape[1]), (m.right.shape[1],)]
    labels = []
    for F, k, wd in zip(blocks, K, widths):
        if any(x != k for x in wd):
            raise ConfigError(f"vector counts {wd} do not match K={k}")
        labels.append(kmeans(F, k, rng)[0])
    return CommunityPath("vhar", labels, list(K), names)


def _best_map(prev: np.ndarray, cur: np.ndarray, K_prev: int, K_cur: int) -> np.ndarray:
    """Rename ``cur`` labels to maximize agreement with ``prev``; returns old -> new."""
    C = np.zeros((K_cur, max(K_prev, K_cur)))
    np.add.at(C, (cur, prev), 1.0)
    rows, cols = linear_sum_assignment(-C)
    mapping = np.empty(K_cur, dtype=int)
    mapping[rows] = cols
    # labels of cur mapped onto names >= K_cur must be folded back into 0..K_cur-1
    if mapping.max(initial=0) >= K_cur:
        free = sorted(set(range(K_cur)) - set(int(x) for x in mapping if x < K_cur))
        for i in range(K_cur):
            if mapping[i] >= K_cur:
                mapping[i] = free.pop(0)
    return mapping


def align_labels(path: CommunityPath) -> CommunityPath:
    """Rename each boundary's labels to best agree with the previous boundary."""
    labels = [path.labels[0].copy()]
    perms = [list(range(path.K[0]))]
    for b in range(1, path.boundaries):
        mapping = _best_map(labels[-1], path.labels[b], path.K[b - 1], path.K[b])
        labels.append(mapping[path.labels[b]])
        perms.append(mapping.tolist())
    return CommunityPath(path.kind, labels, list(path.K), list(path.pairing), perms)


# ---------------------------------------------------------------- ranks


def select_rank(values: Sequence[float], threshold: float = 0.7) -> int:
    """Smallest K whose leading values explain at least ``threshold`` of the total."""
    v = np.sort(np.asarray(values, dtype=float))[::-1]
    if np.any(v < 0):
        raise ValueError("singular values must be nonnegative")
    total = v.sum()
    if total <= 0:
        raise ValueError("all singular values are zero")
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    share = np.cumsum(v) / total
    hits = np.flatnonzero(share >= threshold - 1e-12)
    k = int(hits[0]) + 1
    return min(k, int(np.count_nonzero(v > 0)))


def resolve_K(kind: str, season_ranks: Sequence[int]) -> Tuple[List[int], List[int]]:
    """Turn one scree rank per season into staggered ``(K_y, K_z)`` lists.

    A shared boundary takes the larger of its two neighbouring season ranks
    (cyclically for a PVAR); a VHAR's outer ends keep their own season rank.
    """
    r = [int(x) for x in season_ranks]
    s = len(r)
    if s == 0 or min(r) < 1:
        raise ConfigError("season ranks must be positive")
    if kind == "vhar":
        if s != 3:
            raise ConfigError("a VHAR has three components")
        b = [r[0], max(r[0], r[1]), max(r[1], r[2]), r[2]]
        return b[:3], b[1:]
    b = [max(r[m - 1], r[m]) for m in range(s)]
    K_y = b
    K_z = [b[(m + 1) % s] for m in range(s)]
    return K_y, K_z


def path_tuple(K_y: Sequence[int], K_z: Sequence[int]) -> List[int]:
    """Interleave into ``(K_y1, K_z1, K_y2, K_z2, ...)``."""
    return [int(k) for pair in zip(K_y, K_z) for k in pair]


# ---------------------------------------------------------------- driver


def singular_bases(mats: Sequence[np.ndarray], K_y: Sequence[int], K_z: Sequence[int]) -> List[SeasonalSingularBasis]:
    out = []
    for M, ky, kz in zip(mats, K_y, K_z):
        L, R, sv = top_singular_vectors(M, ky, kz)
        out.append(SeasonalSingularBasis(L, R, sv))
    return out


def smooth_bases(bases: Sequence[SeasonalSingularBasis], alpha: float) -> List[SeasonalSingularBasis]:
    """PisCES on the left and right projector chains; ``alpha == 0`` is a no-op."""
    if alpha == 0:
        return list(bases)
    K_y = [b.left.shape[1] for b in bases]
    K_z = [b.right.shape[1] for b in bases]
    left = pisces_smooth([b.left @ b.left.T for b in bases], alpha, K_y).projectors
    right = pisces_smooth([b.right @ b.right.T for b in bases], alpha, K_z).projectors
    return [
        SeasonalSingularBasis(
            extract_basis_from_projector(Ul, ky), extract_basis_from_projector(Ur, kz), b.values, smoothed=True
        )
        for b, Ul, Ur, ky, kz in zip(bases, left, right, K_y, K_z)
    ]


def cocluster_matrices(
    mats: Sequence[np.ndarray],
    kind: str,
    K_y: Sequence[int],
    K_z: Sequence[int],
    alpha: float,
    rng: np.random.Generator,
    align: bool = True,
) -> CommunityPath:
    """Full co-clustering from seasonal autoregressive matrices."""
    K = boundary_ranks(kind, K_y, K_z)
    bases = smooth_bases(singular_bases(mats, K_y, K_z), alpha)
    bases = [b.normalize() for b in bases]
    if kind == "vhar":
        path = cocluster_vhar(bases, K, rng)
    elif kind == "var":
        path = cocluster_var(bases[0], K_y[0], K_z[0], rng)
    else:
        path = cocluster_pvar(bases, K, rng)
    return align_labels(path) if align else path


def spectral_cocluster(
    t: TransitionSet,
    K_y: Sequence[int],
    K_z: Sequence[int],
    alpha: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    align: bool = True,
) -> CommunityPath:
    """Co-cluster the nodes of an (estimated) transition set."""
    if rng is None:
        rng = np.random.default_rng()
    kind = t.kind
    return cocluster_matrices(seasonal_matrices(t), kind, K_y, K_z, alpha, rng, align)
