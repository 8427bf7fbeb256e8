import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scbmvar.metrics import (
    ari,
    benchmark_scores,
    discrepancy_matrix,
    hierarchical_order,
    permutation_accuracy,
)
from scbmvar.spectral import CommunityPath, align_labels

label_lists = st.lists(st.integers(0, 4), min_size=2, max_size=20)


def pair_count_ari(a, b):
    """Oracle: ARI from explicit pair enumeration."""
    n = len(a)
    pairs = list(itertools.combinations(range(n), 2))
    same_a = np.array([a[i] == a[j] for i, j in pairs])
    same_b = np.array([b[i] == b[j] for i, j in pairs])
    index = np.sum(same_a & same_b)
    expected = same_a.sum() * same_b.sum() / len(pairs)
    top = 0.5 * (same_a.sum() + same_b.sum())
    return (index - expected) / (top - expected)


def test_accuracy_examples():
    assert permutation_accuracy([1, 1, 2, 2], [2, 2, 1, 1]) == 1.0
    assert permutation_accuracy([1, 1, 2, 2], [1, 1, 2, 2]) == 1.0
    assert permutation_accuracy([1, 1, 2, 2], [1, 2, 2, 1]) == 0.5
    with pytest.raises(ValueError):
        permutation_accuracy([1, 2], [1, 2, 3])


@given(label_lists, st.permutations(range(5)))
def test_accuracy_relabel_invariant(x, perm):
    x = np.array(x)
    assert permutation_accuracy(x, np.array(perm)[x]) == 1.0


@given(label_lists, st.integers(0, 2**32 - 1))
def test_accuracy_exact_matches_assignment(x, seed):
    x = np.array(x)
    y = np.random.default_rng(seed).integers(0, 4, size=x.size)
    # brute force over all maps of estimated labels to true labels
    best = 0
    ks, kt = np.unique(y), np.unique(x)
    for perm in itertools.permutations(list(kt) + [-1] * len(ks), len(ks)):
        mapping = dict(zip(ks, perm))
        best = max(best, np.mean([mapping[v] == t for v, t in zip(y, x)]))
    assert permutation_accuracy(x, y) == pytest.approx(best)


def test_accuracy_many_labels_uses_assignment():
    rng = np.random.default_rng(0)
    x = np.repeat(np.arange(10), 3)
    perm = rng.permutation(10)
    assert permutation_accuracy(x, perm[x]) == 1.0


def test_ari_examples():
    assert ari([1, 1, 2, 2], [1, 1, 2, 2]) == 1.0
    assert ari([1, 1, 2, 2], [1, 2, 1, 2]) == pytest.approx(-0.5)


@given(label_lists, st.integers(0, 2**32 - 1))
def test_ari_matches_pair_oracle(x, seed):
    y = list(np.random.default_rng(seed).integers(0, 3, size=len(x)))
    same_a = [x[i] == x[j] for i, j in itertools.combinations(range(len(x)), 2)]
    same_b = [y[i] == y[j] for i, j in itertools.combinations(range(len(x)), 2)]
    if len(set(same_a)) == 1 and len(set(same_b)) == 1 and same_a[0] == same_b[0]:
        return  # degenerate convention tested separately
    denom_zero = 0.5 * (sum(same_a) + sum(same_b)) == sum(same_a) * sum(same_b) / len(same_a)
    if denom_zero:
        return
    value = ari(x, y)
    assert value == pytest.approx(pair_count_ari(x, y), abs=1e-12)
    assert -1 <= value <= 1


@given(label_lists, st.permutations(range(5)))
def test_ari_relabel_invariant(x, perm):
    x = np.array(x)
    if len(set(x)) in (1, len(x)):
        return
    assert ari(x, np.array(perm)[x]) == pytest.approx(1.0)


def test_ari_degenerate():
    with pytest.warns(RuntimeWarning):
        assert ari([0, 0, 0], [1, 1, 1]) == 1.0
    with pytest.warns(RuntimeWarning):
        assert ari([0, 1, 2], [2, 0, 1]) == 1.0
    assert ari([0, 1, 2], [0, 0, 0]) == 0.0


def test_benchmark_scores():
    truth = CommunityPath("pvar", [[0, 0, 1, 1]] * 4, [2] * 4)
    assert benchmark_scores(truth, truth) == (1.0, 1.0)
    swapped = CommunityPath("pvar", [[1, 1, 0, 0]] * 4, [2] * 4)
    assert benchmark_scores(swapped, truth) == (1.0, 1.0)
    one_wrong = CommunityPath("pvar", [[0, 0, 1, 1]] * 3 + [[0, 1, 0, 1]], [2] * 4)
    acc, score = benchmark_scores(one_wrong, truth)
    assert acc == pytest.approx((3 + 0.5) / 4)
    assert score == pytest.approx((3 - 0.5) / 4)
    with pytest.raises(ValueError):
        benchmark_scores(CommunityPath("pvar", [[0, 1]] * 2, [2] * 2), truth)


@given(st.integers(0, 2**32 - 1))
def test_scores_invariant_under_alignment(seed):
    rng = np.random.default_rng(seed)
    truth = CommunityPath("pvar", [np.repeat([0, 1, 2], 4)] * 4, [3] * 4)
    est = CommunityPath("pvar", [rng.permutation(3)[rng.integers(3, size=12)] for _ in range(4)], [3] * 4)
    assert benchmark_scores(est, truth) == pytest.approx(benchmark_scores(align_labels(est), truth))


def test_discrepancy_matrix():
    labs = [np.array([0, 0, 1, 1])] * 4
    same, disc = discrepancy_matrix(labs)
    assert same[0, 1] == 4 and same[0, 2] == 0
    assert disc[0, 2] == 4
    np.testing.assert_array_equal(same, same.T)


def test_hierarchical_order_blocks():
    labels = np.array([0, 1, 0, 1, 0, 1])
    same, _ = discrepancy_matrix([labels] * 3)
    order = hierarchical_order(same)
    assert sorted(order) == list(range(6))
    groups = labels[order]
    assert np.count_nonzero(np.diff(groups)) == 1
    np.testing.assert_array_equal(hierarchical_order(np.array([[1]])), [0])
