import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carclust import (
    LongitudinalPanel,
    PartitionSequence,
    VarCoefficients,
    cluster_sizes,
    empirical_centroids,
)
from carclust.errors import DimensionMismatchError, EmptyClusterError, InvalidPanelError
from oracles import grouped_mean_oracle, random_labels


def test_single_cluster_mean_of_two_points():
    x = np.array([[[0.0, 0.0]], [[2.0, 2.0]]]).transpose(0, 2, 1)  # (n=2, J=2, T=1)
    x = np.concatenate([x, x], axis=2)
    panel = LongitudinalPanel(x)
    part = PartitionSequence(np.zeros((2, 2), dtype=int), 1)
    cents = empirical_centroids(panel, part)
    np.testing.assert_allclose(cents.centers[0, :, 0], [1.0, 1.0])


def test_hand_built_partition_matches_loop_oracle():
    x = np.array([[1.0, 3.0, 10.0, 14.0], [2.0, 4.0, 8.0, 20.0]])[:, :, None]  # (T, n, J)
    labels = np.array([[0, 0, 1, 1], [0, 1, 1, 1]])
    panel = LongitudinalPanel.from_time_major(x)
    cents = empirical_centroids(panel, PartitionSequence(labels, 2))
    np.testing.assert_allclose(cents.data, grouped_mean_oracle(x, labels, 2))
    np.testing.assert_allclose(cents.data[:, :, 0], [[2.0, 12.0], [2.0, 32.0 / 3.0]])


def test_singleton_clusters_reproduce_observations(rng):
    n, J, T = 5, 3, 4
    x = rng.normal(size=(n, J, T))
    labels = np.tile(np.arange(n), (T, 1))
    cents = empirical_centroids(LongitudinalPanel(x), PartitionSequence(labels, n))
    np.testing.assert_array_equal(cents.centers, x)


def test_empty_cluster_raises():
    panel = LongitudinalPanel(np.arange(12.0).reshape(3, 2, 2))
    part = PartitionSequence(np.array([[0, 0, 1], [0, 0, 0]]), 2)
    with pytest.raises(EmptyClusterError) as err:
        empirical_centroids(panel, part)
    assert (err.value.cluster, err.value.time) == (1, 1)
    cents = empirical_centroids(panel, part, allow_empty=True)
    assert np.all(np.isnan(cents.data[1, 1]))


def test_centroids_permutation_equivariant(rng):
    T, n, J, G = 3, 12, 2, 3
    panel = LongitudinalPanel.from_time_major(rng.normal(size=(T, n, J)))
    part = PartitionSequence(random_labels(rng, T, n, G), G)
    perm = np.array([2, 0, 1])
    base = empirical_centroids(panel, part).data
    moved = empirical_centroids(panel, part.relabel(perm)).data
    np.testing.assert_array_equal(moved[:, perm], base)


def test_cluster_sizes_constant_membership():
    part = PartitionSequence(np.zeros((2, 3), dtype=int), 2)
    np.testing.assert_array_equal(cluster_sizes(part), [[3, 3], [0, 0]])


def test_cluster_sizes_direct_tally():
    labels = np.array([[0, 0, 1, 1], [0, 1, 1, 1]])
    sizes = cluster_sizes(PartitionSequence(labels, 2))
    tally = np.zeros((2, 2), dtype=int)
    for t in range(2):
        for i in range(4):
            tally[labels[t, i], t] += 1
    np.testing.assert_array_equal(sizes, tally)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(5, 30), st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_cluster_sizes_columns_sum_to_n(G, n, T, seed):
    labels = np.random.default_rng(seed).integers(G, size=(T, n))
    part = PartitionSequence(labels, G)
    np.testing.assert_array_equal(cluster_sizes(part).sum(axis=0), np.full(T, n))
    np.testing.assert_array_equal(part.memberships.sum(axis=1), np.ones((n, T)))


def test_memberships_round_trip(rng):
    labels = random_labels(rng, 4, 7, 3)
    part = PartitionSequence(labels, 3)
    again = PartitionSequence.from_memberships(part.memberships)
    assert again == part


def test_memberships_reject_two_ones():
    u = np.zeros((2, 2, 1), dtype=int)
    u[0, :, 0] = 1
    u[1, 0, 0] = 1
    with pytest.raises(DimensionMismatchError, match="unit 0"):
        PartitionSequence.from_memberships(u)


def test_partition_label_range_checked():
    with pytest.raises(DimensionMismatchError):
        PartitionSequence(np.array([[0, 2]]), 2)
    with pytest.raises(DimensionMismatchError):
        PartitionSequence(np.array([[0, 1]]), 3)


@pytest.mark.parametrize(
    "values, kwargs",
    [
        (np.zeros((1, 1, 3)), {}),
        (np.zeros((2, 1, 1)), {}),
        (np.array([[[0.0, np.nan]], [[1.0, 1.0]]]), {}),
        (np.zeros((2, 1, 2)), {"unit_ids": ["a", "a"]}),
        (np.zeros((2, 1, 2)), {"time_labels": [2001, 2000]}),
    ],
)
def test_panel_invariants(values, kwargs):
    with pytest.raises(InvalidPanelError):
        LongitudinalPanel(values, **kwargs)


def test_panel_is_read_only_and_time_major(rng):
    x = rng.normal(size=(3, 2, 4))
    panel = LongitudinalPanel(x)
    assert panel.data.shape == (4, 3, 2)
    assert panel.data.flags.c_contiguous
    np.testing.assert_array_equal(panel.values, x)
    with pytest.raises(ValueError):
        panel.data[0, 0, 0] = 1.0


def test_var_coefficients_stacking(rng):
    c = rng.normal(size=3)
    lags = rng.normal(size=(2, 3, 3))
    coeffs = VarCoefficients(c, lags)
    stacked = coeffs.stacked()
    assert stacked.shape == (3, 7)
    np.testing.assert_array_equal(stacked[:, 0], c)
    np.testing.assert_array_equal(stacked[:, 4:], lags[1])
    back = VarCoefficients.from_stacked(stacked)
    np.testing.assert_array_equal(back.lag_matrices, lags)
    assert back.lag_order == 2
