"""Membership dynamics of a fitted partition sequence."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SingleTimePointError, UnknownUnitError
from .panel import PartitionSequence


@dataclass
class TransitionMatrix:
    """Cluster-to-cluster moves between consecutive times.

    Rows are the cluster at ``t-1``, columns the cluster at ``t``. Rows of
    clusters never occupied before the last time stay all-zero and are
    flagged in ``empty_rows``.
    """

    probs: np.ndarray
    counts: np.ndarray
    n_transitions: int
    empty_rows: np.ndarray

    @property
    def n_pairs(self) -> int:
        return int(self.counts.sum())


def transition_matrix(part: PartitionSequence) -> TransitionMatrix:
    T = part.n_times
    if T < 2:
        raise SingleTimePointError("transition matrix needs at least two time points")
    G = part.n_clusters
    src = part.labels[:-1].ravel()
    dst = part.labels[1:].ravel()
    counts = np.bincount(src * G + dst, minlength=G * G).reshape(G, G)
    rows = counts.sum(axis=1)
    empty = rows == 0
    probs = np.zeros((G, G))
    probs[~empty] = counts[~empty] / rows[~empty, None]
    return TransitionMatrix(
        probs=probs,
        counts=counts,
        n_transitions=int(counts.sum() - np.trace(counts)),
        empty_rows=empty,
    )


def membership_shares(part: PartitionSequence) -> np.ndarray:
    """Fraction of all unit-time pairs falling in each cluster."""
    counts = np.bincount(part.labels.ravel(), minlength=part.n_clusters)
    return counts / part.labels.size


def unit_trajectory(part: PartitionSequence, unit, unit_ids: Sequence[str] | None = None):
    """Cluster label of one unit at every time and its number of switches.

    ``unit`` is a row index, or a unit id when ``unit_ids`` is given.
    """
    if isinstance(unit, str):
        if unit_ids is None or unit not in unit_ids:
            raise UnknownUnitError(f"unknown unit {unit!r}")
        index = list(unit_ids).index(unit)
    else:
        index = int(unit)
        if not 0 <= index < part.n_units:
            raise UnknownUnitError(f"unit index {unit} out of range 0..{part.n_units - 1}")
    labels = part.labels[:, index].copy()
    switches = int(np.count_nonzero(labels[1:] != labels[:-1]))
    return labels, switches


def switch_counts(part: PartitionSequence) -> np.ndarray:
    return np.count_nonzero(part.labels[1:] != part.labels[:-1], axis=0)
