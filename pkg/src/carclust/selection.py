"""Calinski-Harabasz scoring of partition sequences and the sweep over G."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import (
    CarClustError,
    DimensionMismatchError,
    InvalidConfigError,
    UndefinedForSingleClusterError,
    ZeroWithinScatterError,
)
from .estimator import FitConfig, FitResult, fit_multistart
from .panel import LongitudinalPanel, PartitionSequence, grouped_means


def _time_major(panel, part: PartitionSequence) -> np.ndarray:
    # a raw (n, J, T) array is accepted so single-time data can be scored
    if isinstance(panel, LongitudinalPanel):
        data = panel.data
    else:
        values = np.asarray(panel, dtype=float)
        if values.ndim != 3:
            raise DimensionMismatchError(f"expected a panel or an (n, J, T) array, got shape {values.shape}")
        data = np.transpose(values, (2, 0, 1))
    if part.labels.shape != data.shape[:2]:
        raise DimensionMismatchError(
            f"partition covers (T, n)={part.labels.shape} but data has (T, n)={data.shape[:2]}"
        )
    return data


def within_scatter(panel, part: PartitionSequence) -> np.ndarray:
    """Pooled within-cluster scatter about per-time class means, shape (J, J).

    ``panel`` is a LongitudinalPanel or a raw ``(n, J, T)`` array. Clusters
    with no members at a time contribute nothing at that time.
    """
    data = _time_major(panel, part)
    J = data.shape[2]
    w = np.zeros((J, J))
    for x, labels in zip(data, part.labels):
        means, _ = grouped_means(x, labels, part.n_clusters)
        dev = x - means[labels]
        w += dev.T @ dev
    return w


def between_scatter(panel, part: PartitionSequence) -> np.ndarray:
    """Size-weighted scatter of class means about the per-time grand mean."""
    data = _time_major(panel, part)
    J = data.shape[2]
    b = np.zeros((J, J))
    for x, labels in zip(data, part.labels):
        means, counts = grouped_means(x, labels, part.n_clusters)
        occ = counts > 0
        dev = means[occ] - x.mean(axis=0)
        b += (dev * counts[occ, None]).T @ dev
    return b


def ch_index(panel, part: PartitionSequence) -> float:
    """``trace(B) / trace(W) * (n T - G) / (G - 1)`` over all units and times."""
    G = part.n_clusters
    if G < 2:
        raise UndefinedForSingleClusterError("CH index is undefined for a single cluster (G - 1 = 0)")
    tw = float(np.trace(within_scatter(panel, part)))
    tb = float(np.trace(between_scatter(panel, part)))
    if tw <= 0.0:
        raise ZeroWithinScatterError(f"within-cluster scatter is zero for G={G}; CH is unbounded")
    nt = part.labels.size
    return tb / tw * (nt - G) / (G - 1)


@dataclass
class CHCandidate:
    n_clusters: int
    ch_value: float | None
    objective: float | None
    trace_w: float | None
    trace_b: float | None
    fit: FitResult | None = None
    error: str | None = None

    def summary(self) -> dict:
        if self.fit is None:
            return {"error": self.error}
        f = self.fit
        return {
            "iterations": f.iterations,
            "converged": f.converged,
            "restart_index": f.restart_index,
            "init_strategy": f.init_strategy.value,
        }


@dataclass
class CHReport:
    candidates: list[CHCandidate] = field(default_factory=list)
    selected_g: int | None = None

    @property
    def ch_values(self) -> dict[int, float | None]:
        return {c.n_clusters: c.ch_value for c in self.candidates}

    @property
    def best(self) -> CHCandidate | None:
        for c in self.candidates:
            if c.n_clusters == self.selected_g:
                return c
        return None


def select_g(panel: LongitudinalPanel, g_range: Iterable[int], lag_order: int = 1,
             config: FitConfig | None = None, n_jobs: int | None = None) -> CHReport:
    """Fit every candidate G with the same seed and keep the CH maximizer.

    Failed candidates are recorded with their error; the sweep only fails
    when no candidate produces a CH value.
    """
    gs = sorted(set(int(g) for g in g_range))
    if not gs:
        raise InvalidConfigError("the range of cluster counts is empty")
    if gs[0] < 2:
        raise InvalidConfigError(f"CH selection needs G >= 2, range starts at {gs[0]}")
    base = config if config is not None else FitConfig(n_clusters=gs[0])
    report = CHReport()
    for g in gs:
        cfg = replace(base, n_clusters=g, lag_order=lag_order)
        try:
            res = fit_multistart(panel, cfg, n_jobs=n_jobs)
            tw = float(np.trace(within_scatter(panel, res.partition)))
            tb = float(np.trace(between_scatter(panel, res.partition)))
            ch = ch_index(panel, res.partition)
        except CarClustError as exc:
            report.candidates.append(CHCandidate(g, None, None, None, None, error=str(exc)))
            continue
        report.candidates.append(CHCandidate(g, ch, res.objective, tw, tb, fit=res))
    scored = [c for c in report.candidates if c.ch_value is not None]
    if not scored:
        errors = "; ".join(f"G={c.n_clusters}: {c.error}" for c in report.candidates)
        raise CarClustError(f"no candidate cluster count could be scored ({errors})")
    report.selected_g = max(scored, key=lambda c: (c.ch_value, -c.n_clusters)).n_clusters
    return report
