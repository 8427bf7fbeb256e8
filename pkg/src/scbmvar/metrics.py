"""Clustering scores and co-membership summaries."""

from __future__ import annotations

import itertools
import warnings
from typing import Sequence, Tuple

import numpy as np
from scipy.cluster.hierarchy import leaves_list, linkage
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import squareform
from scipy.special import comb

from .spectral import CommunityPath

EXACT_ENUMERATION_MAX_K = 8


def canonical_labels(labels) -> np.ndarray:
    """Relabel to contiguous integers 0..K-1 (by sorted original value)."""
    _, inv = np.unique(np.asarray(labels), return_inverse=True)
    return inv.reshape(-1)


def _confusion(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = canonical_labels(a)
    b = canonical_labels(b)
    C = np.zeros((a.max(initial=-1) + 1, b.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(C, (a, b), 1)
    return C


def permutation_accuracy(truth, est) -> float:
    """Largest fraction of nodes labelled correctly over relabelings of ``est``.

    Exhaustive over permutations for at most eight estimated labels, optimal
    assignment on the confusion matrix otherwise (both give the same maximum).
    """
    truth = np.asarray(truth)
    est = np.asarray(est)
    if truth.shape != est.shape:
        raise ValueError("label vectors differ in length")
    n = truth.size
    if n == 0:
        raise ValueError("empty label vectors")
    C = _confusion(est, truth)
    k_est, k_true = C.shape
    if k_est <= EXACT_ENUMERATION_MAX_K and k_true <= EXACT_ENUMERATION_MAX_K:
        width = max(k_est, k_true)
        Cp = np.zeros((k_est, width), dtype=np.int64)
        Cp[:, :k_true] = C
        best = max(
            Cp[np.arange(k_est), list(perm)].sum()
            for perm in itertools.permutations(range(width), k_est)
        )
    else:
        rows, cols = linear_sum_assignment(-C)
        best = C[rows, cols].sum()
    return float(best) / n


def ari(a, b) -> float:
    """Adjusted Rand index.

    When both partitions are trivial (the denominator vanishes) the result is
    1.0 if they coincide and 0.0 otherwise, with a warning.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("label vectors differ in length")
    n = a.size
    C = _confusion(a, b)
    sum_ij = comb(C, 2).sum()
    sum_a = comb(C.sum(axis=1), 2).sum()
    sum_b = comb(C.sum(axis=0), 2).sum()
    expected = sum_a * sum_b / comb(n, 2) if n > 1 else 0.0
    top = 0.5 * (sum_a + sum_b)
    denom = top - expected
    if denom == 0:
        warnings.warn("ARI is undefined for these partitions; using the identity convention", RuntimeWarning)
        return 1.0 if permutation_accuracy(a, b) == 1.0 else 0.0
    return float((sum_ij - expected) / denom)


def benchmark_scores(path: CommunityPath, truth: CommunityPath) -> Tuple[float, float]:
    """Boundary-averaged accuracy and ARI against a ground-truth path."""
    if path.boundaries != truth.boundaries or path.kind != truth.kind:
        raise ValueError("paths have different boundary structure")
    accs, aris = [], []
    for est, true in zip(path.labels, truth.labels):
        accs.append(permutation_accuracy(true, est))
        aris.append(ari(true, est))
    return float(np.mean(accs)), float(np.mean(aris))


def boundary_scores(path: CommunityPath, truth: CommunityPath) -> Tuple[np.ndarray, np.ndarray]:
    if path.boundaries != truth.boundaries:
        raise ValueError("paths have different boundary structure")
    accs = np.array([permutation_accuracy(t, e) for e, t in zip(path.labels, truth.labels)])
    aris = np.array([ari(t, e) for e, t in zip(path.labels, truth.labels)])
    return accs, aris


def discrepancy_matrix(boundaries: Sequence) -> Tuple[np.ndarray, np.ndarray]:
    """Co-membership counts across labelings and their complement.

    Returns ``(same, discrepancy)`` where ``same[i, j]`` counts the labelings
    putting ``i`` and ``j`` together and ``discrepancy = len(boundaries) - same``.
    """
    labs = [np.asarray(x) for x in boundaries]
    if not labs:
        raise ValueError("need at least one labeling")
    q = labs[0].size
    if any(x.size != q for x in labs):
        raise ValueError("labelings differ in length")
    same = np.zeros((q, q), dtype=np.int64)
    for x in labs:
        same += (x[:, None] == x[None, :]).astype(np.int64)
    return same, len(labs) - same


def hierarchical_order(D: np.ndarray) -> np.ndarray:
    """Average-linkage leaf order of a similarity-count matrix (0-based permutation)."""
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(D, D.T):
        raise ValueError("similarity matrix must be symmetric")
    q = D.shape[0]
    if q < 2:
        return np.arange(q)
    dist = D.max() - D
    np.fill_diagonal(dist, 0.0)
    Z = linkage(squareform(dist, checks=False), method="average")
    return leaves_list(Z)
