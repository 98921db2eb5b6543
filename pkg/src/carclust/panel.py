"""Three-way panel, partition and centroid containers.

All containers store their arrays time-major, i.e. the leading axis is time,
so per-time block updates work on contiguous ``(n, J)`` or ``(G, J)`` slices.
The ``values`` / ``memberships`` / ``centers`` properties expose the
conventional unit-variable-time ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyClusterError,
    InvalidPanelError,
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class LongitudinalPanel:
    """Dense balanced panel of ``n`` units, ``J`` variables and ``T`` times.

    Parameters
    ----------
    values : array_like, shape (n, J, T)
        Observations indexed (unit, variable, time).
    unit_ids, var_names, time_labels : sequence, optional
        Labels; defaults are ``"u0"..``, ``"x0"..`` and ``0..T-1``.
    """

    def __init__(self, values, unit_ids=None, var_names=None, time_labels=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 3:
            raise InvalidPanelError(f"panel values must be 3-D (n, J, T), got shape {values.shape}")
        n, J, T = values.shape
        if n < 2 or J < 1 or T < 2:
            raise InvalidPanelError(f"panel needs n >= 2, J >= 1, T >= 2; got n={n}, J={J}, T={T}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise InvalidPanelError(
                f"non-finite value at unit index {bad[0]}, variable index {bad[1]}, time index {bad[2]}"
            )
        self.unit_ids = tuple(str(u) for u in unit_ids) if unit_ids is not None else tuple(f"u{i}" for i in range(n))
        self.var_names = tuple(str(v) for v in var_names) if var_names is not None else tuple(f"x{j}" for j in range(J))
        self.time_labels = tuple(time_labels) if time_labels is not None else tuple(range(T))
        if (len(self.unit_ids), len(self.var_names), len(self.time_labels)) != (n, J, T):
            raise InvalidPanelError("label lengths do not match the value array shape")
        if len(set(self.unit_ids)) != n:
            raise InvalidPanelError("unit_ids must be unique")
        if len(set(self.var_names)) != J:
            raise InvalidPanelError("var_names must be unique")
        try:
            increasing = all(a < b for a, b in zip(self.time_labels, self.time_labels[1:]))
        except TypeError:
            increasing = False
        if not increasing:
            raise InvalidPanelError("time_labels must be strictly increasing")
        self._data = _frozen(np.transpose(values, (2, 0, 1)))

    @classmethod
    def from_time_major(cls, data, **labels) -> "LongitudinalPanel":
        """Build a panel from a ``(T, n, J)`` array."""
        return cls(np.transpose(np.asarray(data, dtype=float), (1, 2, 0)), **labels)

    @property
    def data(self) -> np.ndarray:
        """Read-only time-major view, shape ``(T, n, J)``."""
        return self._data

    @property
    def values(self) -> np.ndarray:
        return np.transpose(self._data, (1, 2, 0))

    @property
    def n_units(self) -> int:
        return self._data.shape[1]

    @property
    def n_vars(self) -> int:
        return self._data.shape[2]

    @property
    def n_times(self) -> int:
        return self._data.shape[0]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.n_units, self.n_vars, self.n_times

    def take_units(self, order: Sequence[int]) -> "LongitudinalPanel":
        order = list(order)
        return LongitudinalPanel(
            self.values[order],
            unit_ids=[self.unit_ids[i] for i in order],
            var_names=self.var_names,
            time_labels=self.time_labels,
        )

    def __repr__(self):
        n, J, T = self.shape
        return f"LongitudinalPanel(n={n}, J={J}, T={T})"


class PartitionSequence:
    """One hard partition of the units per time.

    Stored as an integer label array of shape ``(T, n)`` with values in
    ``0..G-1``; ``memberships`` gives the binary ``(n, G, T)`` form.
    """

    def __init__(self, labels, n_clusters: int):
        labels = np.asarray(labels)
        if labels.ndim != 2:
            raise DimensionMismatchError(f"labels must have shape (T, n), got {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise DimensionMismatchError("labels must be integers")
        labels = labels.astype(np.intp)
        n = labels.shape[1]
        if not 1 <= n_clusters <= n:
            raise DimensionMismatchError(f"need 1 <= G <= n, got G={n_clusters}, n={n}")
        if labels.size and (labels.min() < 0 or labels.max() >= n_clusters):
            raise DimensionMismatchError(f"labels must lie in 0..{n_clusters - 1}")
        self.labels = _frozen(labels)
        self.n_clusters = int(n_clusters)

    @classmethod
    def from_memberships(cls, memberships) -> "PartitionSequence":
        """Build from a binary ``(n, G, T)`` array with one 1 per (unit, time)."""
        u = np.asarray(memberships)
        if u.ndim != 3:
            raise DimensionMismatchError(f"memberships must be (n, G, T), got shape {u.shape}")
        if not np.all((u == 0) | (u == 1)):
            raise DimensionMismatchError("memberships must be binary")
        rows = u.sum(axis=1)
        if not np.all(rows == 1):
            i, t = np.argwhere(rows != 1)[0]
            raise DimensionMismatchError(f"unit {i} at time index {t} has {rows[i, t]} memberships, expected 1")
        return cls(np.argmax(u, axis=1).T, u.shape[1])

    @property
    def memberships(self) -> np.ndarray:
        T, n = self.labels.shape
        u = np.zeros((n, self.n_clusters, T), dtype=np.int8)
        u[np.arange(n)[None, :], self.labels, np.arange(T)[:, None]] = 1
        return u

    @property
    def n_units(self) -> int:
        return self.labels.shape[1]

    @property
    def n_times(self) -> int:
        return self.labels.shape[0]

    def indicator(self, t: int) -> np.ndarray:
        """Dense ``(n, G)`` membership matrix at time index ``t``."""
        u = np.zeros((self.n_units, self.n_clusters))
        u[np.arange(self.n_units), self.labels[t]] = 1.0
        return u

    def relabel(self, perm) -> "PartitionSequence":
        """Rename cluster ``g`` to ``perm[g]`` at every time."""
        perm = np.asarray(perm)
        return PartitionSequence(perm[self.labels], self.n_clusters)

    def __eq__(self, other):
        if not isinstance(other, PartitionSequence):
            return NotImplemented
        return self.n_clusters == other.n_clusters and np.array_equal(self.labels, other.labels)

    def __repr__(self):
        T, n = self.labels.shape
        return f"PartitionSequence(n={n}, G={self.n_clusters}, T={T})"


class CentroidSequence:
    """Cluster centres over time, stored time-major with shape ``(T', G, J)``.

    ``centers`` returns the ``(G, J, T')`` view. Model centroids cover time
    indices ``0..T-2``; empirical centroids cover ``0..T-1`` and may carry
    NaN rows where a cluster was unoccupied (see ``empirical_centroids``).
    """

    def __init__(self, data):
        data = np.array(data, dtype=float)
        if data.ndim != 3:
            raise DimensionMismatchError(f"centroid data must be (T, G, J), got {data.shape}")
        self.data = data

    @classmethod
    def from_centers(cls, centers) -> "CentroidSequence":
        return cls(np.transpose(np.asarray(centers, dtype=float), (2, 0, 1)))

    @property
    def centers(self) -> np.ndarray:
        return np.transpose(self.data, (1, 2, 0))

    @property
    def n_times(self) -> int:
        return self.data.shape[0]

    @property
    def n_clusters(self) -> int:
        return self.data.shape[1]

    @property
    def n_vars(self) -> int:
        return self.data.shape[2]

    def copy(self) -> "CentroidSequence":
        return CentroidSequence(self.data.copy())

    def __repr__(self):
        T, G, J = self.data.shape
        return f"CentroidSequence(G={G}, J={J}, times={T})"


@dataclass
class VarCoefficients:
    """Intercept ``c`` (J,) and lag matrices ``A_1..A_P`` stacked as (P, J, J)."""

    intercept: np.ndarray
    lag_matrices: np.ndarray
    lag_order: int = field(init=False)

    def __post_init__(self):
        self.intercept = np.asarray(self.intercept, dtype=float).reshape(-1)
        lags = np.asarray(self.lag_matrices, dtype=float)
        J = self.intercept.shape[0]
        if lags.ndim == 2:
            lags = lags[None]
        if lags.ndim != 3 or lags.shape[1:] != (J, J) or lags.shape[0] < 1:
            raise DimensionMismatchError(f"lag matrices must have shape (P, {J}, {J}), got {lags.shape}")
        if not (np.all(np.isfinite(self.intercept)) and np.all(np.isfinite(lags))):
            raise DimensionMismatchError("VAR coefficients must be finite")
        self.lag_matrices = lags
        self.lag_order = lags.shape[0]

    @property
    def n_vars(self) -> int:
        return self.intercept.shape[0]

    def stacked(self) -> np.ndarray:
        """``[c, A_1, ..., A_P]`` as a ``(J, J*P + 1)`` matrix."""
        return np.hstack([self.intercept[:, None], *self.lag_matrices])

    @classmethod
    def from_stacked(cls, stacked) -> "VarCoefficients":
        stacked = np.asarray(stacked, dtype=float)
        J = stacked.shape[0]
        if (stacked.shape[1] - 1) % J or stacked.shape[1] < J + 1:
            raise DimensionMismatchError(f"stacked coefficients must be (J, J*P+1), got {stacked.shape}")
        P = (stacked.shape[1] - 1) // J
        lags = stacked[:, 1:].reshape(J, P, J).transpose(1, 0, 2)
        return cls(stacked[:, 0], lags)

    @classmethod
    def identity(cls, n_vars: int, lag_order: int = 1) -> "VarCoefficients":
        lags = np.zeros((lag_order, n_vars, n_vars))
        lags[0] = np.eye(n_vars)
        return cls(np.zeros(n_vars), lags)


def cluster_sizes(part: PartitionSequence) -> np.ndarray:
    """Number of units per cluster and time, shape ``(G, T)``."""
    T = part.n_times
    sizes = np.zeros((part.n_clusters, T), dtype=np.int64)
    for t in range(T):
        sizes[:, t] = np.bincount(part.labels[t], minlength=part.n_clusters)
    return sizes


def _cluster_sums(x: np.ndarray, labels: np.ndarray, n_clusters: int) -> np.ndarray:
    sums = np.zeros((n_clusters, x.shape[1]))
    np.add.at(sums, labels, x)
    return sums


def grouped_means(x: np.ndarray, labels: np.ndarray, n_clusters: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-cluster means of the rows of ``x``; NaN rows for empty clusters."""
    counts = np.bincount(labels, minlength=n_clusters)
    sums = _cluster_sums(x, labels, n_clusters)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = sums / counts[:, None]
    return means, counts


def empirical_centroids(
    panel: LongitudinalPanel, part: PartitionSequence, allow_empty: bool = False
) -> CentroidSequence:
    """Class-conditional means of the panel at every time.

    Raises ``EmptyClusterError`` on the first unoccupied (cluster, time) cell
    unless ``allow_empty`` is set, in which case that cell is NaN.
    """
    _check_partition(panel, part)
    out = np.empty((panel.n_times, part.n_clusters, panel.n_vars))
    for t in range(panel.n_times):
        means, counts = grouped_means(panel.data[t], part.labels[t], part.n_clusters)
        if not allow_empty and np.any(counts == 0):
            raise EmptyClusterError(int(np.flatnonzero(counts == 0)[0]), t)
        out[t] = means
    return CentroidSequence(out)


def _check_partition(panel: LongitudinalPanel, part: PartitionSequence) -> None:
    if part.labels.shape != (panel.n_times, panel.n_units):
        raise DimensionMismatchError(
            f"partition covers (T={part.n_times}, n={part.n_units}) but panel has "
            f"(T={panel.n_times}, n={panel.n_units})"
        )
