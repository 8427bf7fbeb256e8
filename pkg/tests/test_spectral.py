import itertools
import json
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from scbmvar.blockmodel import BlockModelSpec, make_equal_memberships, population_adjacency, sample_propensities
from scbmvar.errors import ConfigError
from scbmvar.metrics import ari, permutation_accuracy
from scbmvar.spectral import (
    ALPHA_MAX,
    CommunityPath,
    align_labels,
    cocluster_matrices,
    extract_basis_from_projector,
    kmeans,
    pisces_smooth,
    project_top_k,
    resolve_K,
    path_tuple,
    row_normalize,
    seasonal_autoregressive_matrix,
    select_rank,
    spectral_cocluster,
    top_singular_vectors,
)
from scbmvar.transition import TransitionSet, build_transition

matrices = hnp.arrays(np.float64, (6, 6), elements=st.floats(-10, 10, allow_nan=False))


def random_projector(rng, q, K):
    Q, _ = np.linalg.qr(rng.standard_normal((q, K)))
    return Q @ Q.T


# ---------------------------------------------------------------- matrices


def test_seasonal_matrix_transposed_sum(rng):
    lags = [rng.standard_normal((4, 4)) for _ in range(3)]
    t = TransitionSet.pvar([lags, [np.eye(4)]])
    M = seasonal_autoregressive_matrix(t, 0)
    for i, j in itertools.product(range(4), repeat=2):
        assert M[i, j] == pytest.approx(sum(L[j, i] for L in lags))
    np.testing.assert_array_equal(seasonal_autoregressive_matrix(TransitionSet.var([lags[0]]), 0), lags[0].T)
    S = lags[0] + lags[0].T
    np.testing.assert_allclose(seasonal_autoregressive_matrix(TransitionSet.var([S, S]), 0), 2 * S)


def test_svd_diagonal():
    L, R, sv = top_singular_vectors(np.diag([3.0, 2.0, 1.0]), 2, 2)
    np.testing.assert_allclose(L, np.eye(3)[:, :2])
    np.testing.assert_allclose(R, np.eye(3)[:, :2])
    np.testing.assert_allclose(sv, [3.0, 2.0])


@given(matrices, st.integers(1, 6))
def test_svd_orthonormal_and_eckart_young(M, K):
    L, R, sv = top_singular_vectors(M, K, K)
    assert np.linalg.norm(L.T @ L - np.eye(K)) <= 1e-8
    assert np.linalg.norm(R.T @ R - np.eye(K)) <= 1e-8
    full = np.linalg.svd(M, compute_uv=False)
    err = np.linalg.norm(M - L @ np.diag(sv) @ R.T)
    assert err == pytest.approx(np.sqrt(np.sum(full[K:] ** 2)), abs=1e-8)


@given(matrices)
def test_svd_sign_convention(M):
    L, R, sv = top_singular_vectors(M, 3, 3)
    for k in range(3):
        i = np.argmax(np.abs(L[:, k]))
        assert L[i, k] >= 0


def test_svd_duality(rng):
    M = rng.standard_normal((5, 5))
    L, R, _ = top_singular_vectors(M, 3, 3)
    Lt, Rt, _ = top_singular_vectors(M.T, 3, 3)
    # left and right swap; each pair is fixed only up to a common sign
    np.testing.assert_allclose(np.abs(Lt), np.abs(R), atol=1e-10)
    np.testing.assert_allclose(np.abs(Rt), np.abs(L), atol=1e-10)


def test_svd_rank_deficient_is_allowed():
    L, R, sv = top_singular_vectors(np.outer([1.0, 2, 3], [1.0, 0, 1]), 3, 3)
    assert sv[1] < 1e-12
    assert np.linalg.norm(L.T @ L - np.eye(3)) < 1e-8


def test_row_normalize():
    X, zero = row_normalize(np.array([[3.0, 4.0], [1.0, 0.0], [0.0, 0.0]]))
    np.testing.assert_allclose(X, [[0.6, 0.8], [1.0, 0.0], [0.0, 0.0]])
    np.testing.assert_array_equal(zero, [False, False, True])


@given(hnp.arrays(np.float64, (6, 6), elements=st.floats(-5, 5, allow_nan=False)), st.integers(1, 5))
def test_projector_idempotent(A, K):
    M = A + A.T
    with warnings.catch_warnings():
        # degenerate draws (e.g. all zeros) have tied eigenvalues at K
        warnings.simplefilter("ignore")
        P = project_top_k(M, K)
        np.testing.assert_allclose(project_top_k(P, K), P, atol=1e-8)
    assert np.trace(P) == pytest.approx(K)
    np.testing.assert_allclose(P @ P, P, atol=1e-8)


def test_projector_rank_one(rng):
    v = rng.standard_normal(5)
    v /= np.linalg.norm(v)
    np.testing.assert_allclose(project_top_k(np.outer(v, v), 1), np.outer(v, v), atol=1e-12)


def test_projector_rejects_asymmetric():
    with pytest.raises(ValueError):
        project_top_k(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)


def test_extract_basis_reconstructs(rng):
    P = random_projector(rng, 7, 3)
    X = extract_basis_from_projector(P, 3)
    np.testing.assert_allclose(X @ X.T, P, atol=1e-6)
    with pytest.warns(RuntimeWarning):
        extract_basis_from_projector(np.eye(3), 1)


# ---------------------------------------------------------------- PisCES


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_pisces_alpha_zero_identity(seed, s):
    rng = np.random.default_rng(seed)
    K = [int(k) for k in rng.integers(1, 4, size=s)]
    U = [random_projector(rng, 8, k) for k in K]
    res = pisces_smooth(U, 0.0, K)
    for a, b in zip(res.projectors, U):
        np.testing.assert_allclose(a, b, atol=1e-10)
    assert res.converged


def test_pisces_single_season(rng):
    U = random_projector(rng, 6, 2)
    np.testing.assert_allclose(pisces_smooth([U], ALPHA_MAX, [2]).projectors[0], U, atol=1e-10)


@given(st.floats(0.0, ALPHA_MAX), st.integers(0, 2**32 - 1))
def test_pisces_shared_fixed_point(alpha, seed):
    U = random_projector(np.random.default_rng(seed), 6, 2)
    res = pisces_smooth([U] * 4, alpha, [2] * 4)
    for P in res.projectors:
        np.testing.assert_allclose(P, U, atol=1e-8)


def test_pisces_pulls_neighbours_together(rng):
    U = [random_projector(rng, 10, 2) for _ in range(3)]
    res = pisces_smooth(U, ALPHA_MAX, [2, 2, 2])
    assert res.converged
    before = np.linalg.norm(U[0] - U[1])
    after = np.linalg.norm(res.projectors[0] - res.projectors[1])
    assert after < before


def test_pisces_chain_is_not_cyclic(rng):
    # the first season only sees the second, so changing the last one (s=3)
    # influences the first only through the middle
    U = [random_projector(rng, 8, 2) for _ in range(3)]
    U2 = U[:2] + [random_projector(rng, 8, 2)]
    with pytest.warns(RuntimeWarning, match="did not converge"):
        a = pisces_smooth(U, 0.1, [2] * 3, max_iter=1).projectors[0]
        b = pisces_smooth(U2, 0.1, [2] * 3, max_iter=1).projectors[0]
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_pisces_rejects_large_alpha(rng):
    with pytest.raises(ValueError):
        pisces_smooth([np.eye(2)], 0.2, [1])


# ---------------------------------------------------------------- k-means


def test_kmeans_single_cluster(rng):
    X = rng.standard_normal((10, 3))
    labels, C, obj = kmeans(X, 1, rng)
    assert set(labels) == {0}
    np.testing.assert_allclose(C[0], X.mean(axis=0))


def test_kmeans_two_groups(rng):
    X = np.array([[0.0, 0.0]] * 3 + [[10.0, 10.0]] * 3)
    labels, _, obj = kmeans(X, 2, rng)
    np.testing.assert_array_equal(labels, [0, 0, 0, 1, 1, 1])
    assert obj == 0.0


def test_kmeans_beats_random_assignments():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((40, 2))
    _, _, obj = kmeans(X, 3, rng)
    for _ in range(100):
        lab = rng.integers(3, size=40)
        rand = sum(((X[lab == k] - X[lab == k].mean(axis=0)) ** 2).sum() for k in range(3) if np.any(lab == k))
        assert obj <= rand + 1e-12


def test_kmeans_deterministic_and_nonempty():
    X = np.random.default_rng(1).standard_normal((30, 4))
    a = kmeans(X, 5, np.random.default_rng(3))
    b = kmeans(X, 5, np.random.default_rng(3))
    np.testing.assert_array_equal(a[0], b[0])
    assert a[2] == b[2]
    assert len(set(a[0])) == 5


def test_kmeans_duplicate_points_fill_every_cluster(rng):
    X = np.zeros((6, 2))
    X[5] = 1.0
    labels, _, _ = kmeans(X, 3, rng)
    assert len(set(labels)) == 3


def test_kmeans_k_too_large(rng):
    with pytest.raises(ValueError):
        kmeans(np.zeros((2, 2)), 3, rng)


# ---------------------------------------------------------------- co-clustering


def population_transitions(rng, q, K, s, lognormal=True):
    y = make_equal_memberships(q, K)
    mats = []
    for _ in range(s):
        B = 0.1 + 0.5 * np.eye(K)
        ty = sample_propensities(y, rng) if lognormal else np.full(q, K / q)
        tz = sample_propensities(y, rng) if lognormal else np.full(q, K / q)
        A = population_adjacency(BlockModelSpec(y, y, B, ty, tz))
        mats.append([build_transition(A, 0.9)])
    return y, TransitionSet.pvar(mats)


def test_planted_population_exact(rng):
    y, t = population_transitions(rng, 30, 3, 4)
    path = spectral_cocluster(t, [3] * 4, [3] * 4, 0.0, rng)
    for lab in path.labels:
        assert permutation_accuracy(y, lab) == 1.0


def test_identical_seasons_same_partition(rng):
    q, K = 20, 2
    A = rng.random((q, q))
    t = TransitionSet.pvar([[build_transition(A, 0.5)]] * 3)
    path = spectral_cocluster(t, [K] * 3, [K] * 3, 0.0, rng)
    for lab in path.labels[1:]:
        assert ari(path.labels[0], lab) == pytest.approx(1.0)


def test_singleton_communities(rng):
    t = TransitionSet.var([np.diag([4.0, 3.0, 2.0, 1.0])])
    path = spectral_cocluster(t, [4], [4], 0.0, rng)
    assert len(set(path.labels[0])) == 4 and len(set(path.labels[1])) == 4


def test_vhar_four_boundaries(rng):
    y, t = population_transitions(rng, 24, 2, 3)
    v = TransitionSet.vhar(*(m[0] for m in t.matrices))
    path = spectral_cocluster(v, [2, 2, 2], [2, 2, 2], 0.0, rng)
    assert path.boundaries == 4 and path.pairing == ["Ld", "Rd|Lw", "Rw|Lm", "Rm"]
    for lab in path.labels:
        assert permutation_accuracy(y, lab) == 1.0


def test_k_constraint_violations(rng):
    _, t = population_transitions(rng, 12, 2, 2)
    with pytest.raises(ConfigError):
        spectral_cocluster(t, [2, 2], [3, 2], 0.0, rng)
    with pytest.raises(ConfigError):
        spectral_cocluster(t, [2, 3], [3, 3], 0.0, rng)


def test_alpha_zero_skips_smoothing(rng):
    _, t = population_transitions(rng, 24, 2, 4)
    a = spectral_cocluster(t, [2] * 4, [2] * 4, 0.0, np.random.default_rng(0))
    b = cocluster_matrices([m[0].T for m in t.matrices], "pvar", [2] * 4, [2] * 4, 0, np.random.default_rng(0))
    for x, y in zip(a.labels, b.labels):
        np.testing.assert_array_equal(x, y)


# ---------------------------------------------------------------- alignment


def test_align_unchanged_when_aligned():
    lab = np.array([0, 0, 1, 1])
    path = align_labels(CommunityPath("pvar", [lab, lab], [2, 2]))
    np.testing.assert_array_equal(path.labels[1], lab)


def test_align_undoes_swap():
    lab = np.array([0, 0, 1, 1, 1])
    path = align_labels(CommunityPath("pvar", [lab, 1 - lab], [2, 2]))
    np.testing.assert_array_equal(path.labels[1], lab)
    assert path.permutations[1] == [1, 0]


@given(st.integers(0, 2**32 - 1))
def test_align_preserves_partitions(seed):
    rng = np.random.default_rng(seed)
    K = [2, 3, 3, 4]
    labels = [rng.integers(k, size=12) for k in K]
    labels = [np.unique(x, return_inverse=True)[1] for x in labels]
    K = [int(x.max()) + 1 for x in labels]
    before = CommunityPath("pvar", labels, K)
    after = align_labels(before)
    for a, b in zip(before.labels, after.labels):
        assert ari(a, b) == pytest.approx(1.0)
        assert b.max() < max(a.max() + 1, 1) or b.max() == a.max()
    for i, j in itertools.combinations(range(4), 2):
        assert ari(after.labels[i], after.labels[j]) == pytest.approx(ari(labels[i], labels[j]))


def test_community_path_json():
    path = CommunityPath("vhar", [[0, 1], [1, 0], [0, 0], [1, 1]], [2, 2, 1, 2], ["Ld", "Rd|Lw", "Rw|Lm", "Rm"])
    d = json.loads(path.to_json())
    assert d["boundaries"][0]["labels"] == [1, 2]
    back = CommunityPath.from_dict(d)
    np.testing.assert_array_equal(back.labels[1], [1, 0])
    assert back.K == [2, 2, 1, 2]


# ---------------------------------------------------------------- ranks


def test_select_rank():
    assert select_rank([5, 3, 1, 1], 0.7) == 2
    assert select_rank([5, 3, 1, 0], 1.0) == 3
    with pytest.raises(ValueError):
        select_rank([0, 0], 0.7)


def test_resolve_K_examples():
    K_y, K_z = resolve_K("pvar", [2, 3, 4, 2])
    assert path_tuple(K_y, K_z) == [2, 3, 3, 4, 4, 4, 4, 2]
    K_y, K_z = resolve_K("vhar", [3, 4, 3])
    assert path_tuple(K_y, K_z) == [3, 4, 4, 4, 4, 3]
