"""Seeded simulation of panels that follow a CAR(K, P) law."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import InvalidSpecError
from .panel import CentroidSequence, LongitudinalPanel, PartitionSequence, VarCoefficients


@dataclass
class SyntheticSpec:
    """Parameters of a simulated panel.

    ``centroid_noise_scale`` is the standard deviation of the centroid
    innovations; when ``None`` it equals ``noise_scale``. With
    ``stationary=True`` the lag polynomial must have spectral radius below 1.
    """

    n: int
    J: int
    T: int
    G: int
    P: int
    intercept: np.ndarray
    lag_matrices: np.ndarray
    initial_centroids: np.ndarray
    noise_scale: float = 0.1
    switch_prob: float = 0.0
    seed: int = 0
    centroid_noise_scale: float | None = None
    stationary: bool = False

    def validate(self) -> None:
        if self.n < 2 or self.J < 1 or self.T < 2 or self.P < 1:
            raise InvalidSpecError(f"need n >= 2, J >= 1, T >= 2, P >= 1; got n={self.n}, J={self.J}, "
                                   f"T={self.T}, P={self.P}")
        if not 1 <= self.G <= self.n:
            raise InvalidSpecError(f"need 1 <= G <= n, got G={self.G}, n={self.n}")
        try:
            coeffs = VarCoefficients(self.intercept, self.lag_matrices)
        except ValueError as exc:
            raise InvalidSpecError(f"bad VAR coefficients: {exc}") from None
        if coeffs.n_vars != self.J or coeffs.lag_order != self.P:
            raise InvalidSpecError(f"coefficients are for J={coeffs.n_vars}, P={coeffs.lag_order}; "
                                   f"spec says J={self.J}, P={self.P}")
        if np.shape(self.initial_centroids) != (self.G, self.J):
            raise InvalidSpecError(f"initial centroids must be ({self.G}, {self.J}), "
                                   f"got {np.shape(self.initial_centroids)}")
        if not np.all(np.isfinite(self.initial_centroids)):
            raise InvalidSpecError("initial centroids must be finite")
        scales = [self.noise_scale, self.innovation_scale]
        if not all(np.isfinite(s) and s >= 0 for s in scales):
            raise InvalidSpecError("noise scales must be finite and non-negative")
        if not 0.0 <= self.switch_prob <= 1.0:
            raise InvalidSpecError(f"switch_prob must lie in [0, 1], got {self.switch_prob}")
        if self.stationary and spectral_radius(coeffs) >= 1.0:
            raise InvalidSpecError(f"lag matrices are not stationary (spectral radius "
                                   f"{spectral_radius(coeffs):.4g} >= 1)")

    @property
    def innovation_scale(self) -> float:
        return self.noise_scale if self.centroid_noise_scale is None else self.centroid_noise_scale


class SyntheticPanel(NamedTuple):
    panel: LongitudinalPanel
    partition: PartitionSequence
    coefficients: VarCoefficients
    centroids: CentroidSequence


def spectral_radius(coeffs: VarCoefficients) -> float:
    """Largest eigenvalue modulus of the VAR companion matrix."""
    J, P = coeffs.n_vars, coeffs.lag_order
    comp = np.zeros((J * P, J * P))
    comp[:J] = np.hstack(list(coeffs.lag_matrices))
    comp[J:, :-J] = np.eye(J * (P - 1))
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def generate_panel(spec: SyntheticSpec) -> SyntheticPanel:
    """Simulate centroid paths, memberships and observations.

    Centroids start at ``initial_centroids`` (which also stand in for the
    pre-sample lags) and follow the VAR law with Gaussian innovations.
    Memberships start uniform and each unit redraws its cluster with
    probability ``switch_prob`` at every later time. Observations are the
    current centroid of the unit's cluster plus Gaussian noise.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    coeffs = VarCoefficients(spec.intercept, spec.lag_matrices)
    n, J, T, G, P = spec.n, spec.J, spec.T, spec.G, spec.P
    init = np.asarray(spec.initial_centroids, dtype=float)

    xbar = np.empty((T, G, J))
    xbar[0] = init
    for t in range(1, T):
        nxt = np.broadcast_to(coeffs.intercept, (G, J)).copy()
        for p in range(1, P + 1):
            lagged = xbar[t - p] if t - p >= 0 else init
            nxt += lagged @ coeffs.lag_matrices[p - 1].T
        xbar[t] = nxt + spec.innovation_scale * rng.standard_normal((G, J))

    labels = np.empty((T, n), dtype=np.intp)
    labels[0] = rng.integers(G, size=n)
    for t in range(1, T):
        redraw = rng.random(n) < spec.switch_prob
        fresh = rng.integers(G, size=n)
        labels[t] = np.where(redraw, fresh, labels[t - 1])

    x = xbar[np.arange(T)[:, None], labels] + spec.noise_scale * rng.standard_normal((T, n, J))
    panel = LongitudinalPanel.from_time_major(
        x,
        unit_ids=[f"unit{i:0{len(str(n - 1))}d}" for i in range(n)],
        var_names=[f"x{j + 1}" for j in range(J)],
        time_labels=list(range(1, T + 1)),
    )
    return SyntheticPanel(panel, PartitionSequence(labels, G), coeffs, CentroidSequence(xbar))


def separated_spec(n: int = 90, J: int = 2, T: int = 8, G: int = 3, P: int = 1, *,
                   separation: float = 8.0, noise_scale: float = 0.1, switch_prob: float = 0.02,
                   decay: float = 0.97, centroid_noise: float = 0.1, seed: int = 0) -> SyntheticSpec:
    """Spec whose cluster centres stay at least ``separation * noise_scale`` apart.

    Centres sit on a circle (on a line when ``J == 1``) and the first lag
    matrix is a damped rotation, so pairwise distances shrink by ``decay``
    per step; the starting spacing is inflated to compensate.
    ``centroid_noise`` is the innovation scale relative to ``noise_scale``.
    """
    gap = separation * noise_scale / decay ** (T - 1)
    init = np.zeros((G, J))
    if J == 1 or G == 1:
        init[:, 0] = gap * (np.arange(G) - (G - 1) / 2)
    else:
        radius = gap / (2 * np.sin(np.pi / G))
        ang = 2 * np.pi * np.arange(G) / G
        init[:, 0] = radius * np.cos(ang)
        init[:, 1] = radius * np.sin(ang)
    lags = np.zeros((P, J, J))
    lags[0] = decay * np.eye(J)
    if J >= 2:
        th = 0.1
        lags[0][:2, :2] = decay * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    # the intercept shifts every centre equally, so it does not erode the spacing
    intercept = np.full(J, 0.5)
    return SyntheticSpec(n=n, J=J, T=T, G=G, P=P, intercept=intercept, lag_matrices=lags,
                         initial_centroids=init,
                         noise_scale=noise_scale, switch_prob=switch_prob, seed=seed,
                         centroid_noise_scale=centroid_noise * noise_scale)


def write_truth(sim: SyntheticPanel, spec: SyntheticSpec, path) -> None:
    """Ground truth of a simulated panel as JSON (labels are 0-based)."""
    tree = {
        "spec": {
            "n": spec.n, "J": spec.J, "T": spec.T, "G": spec.G, "P": spec.P,
            "noise_scale": spec.noise_scale, "centroid_noise_scale": spec.innovation_scale,
            "switch_prob": spec.switch_prob, "seed": spec.seed,
        },
        "intercept": sim.coefficients.intercept.tolist(),
        "lag_matrices": sim.coefficients.lag_matrices.tolist(),
        "time_labels": list(sim.panel.time_labels),
        "memberships": {
            u: sim.partition.labels[:, i].tolist() for i, u in enumerate(sim.panel.unit_ids)
        },
        "centroids": sim.centroids.data.tolist(),
    }
    Path(path).write_text(json.dumps(tree, indent=2) + "\n", encoding="utf-8")
