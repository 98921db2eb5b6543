"""Least-squares CAR(K, P) estimation by block coordinate descent.

The model links a hard partition of the units at every time to cluster
centroids whose lagged values drive a VAR(P) law::

    X_t = 1 c' + U_t (Xbar_{t-1} A_1' + ... + Xbar_{t-P} A_P') + D_t

and the fit minimizes ``sum_{t=P+1..T} ||X_t - U_t Zdot_{t} B'||^2`` over the
partition ``U``, the model centroids ``Xbar`` and ``B = [c, A_1, ..., A_P]``
by cycling three exact block updates (centroids, coefficients, partition).

Time indices in this module are 0-based: the fitted times are ``P..T-1`` and
model centroid slices are ``0..T-2``.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kmeans
from .errors import (
    AllRestartsFailedError,
    CarClustError,
    DegenerateDesignError,
    DimensionMismatchError,
    InvalidConfigError,
    SingularDesignError,
)
from .panel import (
    CentroidSequence,
    LongitudinalPanel,
    PartitionSequence,
    VarCoefficients,
    _check_partition,
    _cluster_sums,
    empirical_centroids,
    grouped_means,
)


class InitStrategy(str, enum.Enum):
    RANDOM = "random"
    SLICEWISE = "slicewise"
    MIXED = "mixed"


@dataclass(frozen=True)
class FitConfig:
    n_clusters: int
    lag_order: int = 1
    n_restarts: int = 10
    max_iters: int = 200
    rel_tol: float = 1e-8
    seed: int = 0
    init_strategy: InitStrategy = InitStrategy.MIXED

    def __post_init__(self):
        object.__setattr__(self, "init_strategy", InitStrategy(self.init_strategy))

    def validate(self, panel: LongitudinalPanel | None = None) -> None:
        if self.n_clusters < 1:
            raise InvalidConfigError(f"n_clusters must be >= 1, got {self.n_clusters}")
        if self.lag_order < 1:
            raise InvalidConfigError(f"lag_order must be >= 1, got {self.lag_order}")
        if self.n_restarts < 1:
            raise InvalidConfigError(f"n_restarts must be >= 1, got {self.n_restarts}")
        if self.max_iters < 1:
            raise InvalidConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise InvalidConfigError(f"rel_tol must be > 0, got {self.rel_tol}")
        if panel is not None:
            if panel.n_times < self.lag_order + 2:
                raise InvalidConfigError(
                    f"lag order {self.lag_order} needs at least {self.lag_order + 2} times, "
                    f"panel has {panel.n_times}"
                )
            if self.n_clusters > panel.n_units:
                raise InvalidConfigError(
                    f"n_clusters={self.n_clusters} exceeds the number of units ({panel.n_units})"
                )

    def strategy_for(self, restart_index: int) -> InitStrategy:
        if self.init_strategy is InitStrategy.MIXED:
            return InitStrategy.SLICEWISE if restart_index % 2 == 0 else InitStrategy.RANDOM
        return self.init_strategy

    def as_dict(self) -> dict:
        return {
            "n_clusters": self.n_clusters,
            "lag_order": self.lag_order,
            "n_restarts": self.n_restarts,
            "max_iters": self.max_iters,
            "rel_tol": self.rel_tol,
            "seed": self.seed,
            "init_strategy": self.init_strategy.value,
        }


@dataclass
class FitResult:
    """Outcome of one coordinate-descent run (or the best of several).

    ``objective_trace`` holds the loss at initialization and after every
    block step, so it has ``1 + 3 * iterations`` entries. ``static_slices``
    lists the time indices before the first fitted time; their memberships
    are nearest-centroid assignments kept only for reporting.
    """

    partition: PartitionSequence
    model_centroids: CentroidSequence
    empirical_centroids: CentroidSequence
    coefficients: VarCoefficients
    objective: float
    iterations: int
    converged: bool
    restart_index: int
    objective_trace: list[float]
    config: FitConfig
    init_strategy: InitStrategy
    static_slices: tuple[int, ...] = ()
    n_reseeds: int = 0
    restart_objectives: list[float] = field(default_factory=list)


# ---------------------------------------------------------------------------
# block operations


def _check_blocks(panel, part, centroids, coeffs):
    T, n, J = panel.data.shape
    if part is not None:
        _check_partition(panel, part)
    if centroids is not None:
        if centroids.n_times != T - 1 or centroids.n_vars != J:
            raise DimensionMismatchError(
                f"model centroids must cover {T - 1} times x {J} variables, got "
                f"{centroids.n_times} x {centroids.n_vars}"
            )
        if part is not None and centroids.n_clusters != part.n_clusters:
            raise DimensionMismatchError(
                f"partition has G={part.n_clusters} but centroids have G={centroids.n_clusters}"
            )
    if coeffs is not None:
        if coeffs.n_vars != J:
            raise DimensionMismatchError(f"coefficients are for J={coeffs.n_vars}, panel has J={J}")
        if coeffs.lag_order >= T:
            raise DimensionMismatchError(f"lag order {coeffs.lag_order} leaves no fitted times for T={T}")


def predicted_centroids(model_centroids: CentroidSequence, coeffs: VarCoefficients, t: int) -> np.ndarray:
    """``c + sum_p A_p xbar_{g, t-p}`` for every cluster, shape ``(G, J)``."""
    xb = model_centroids.data
    mu = np.broadcast_to(coeffs.intercept, xb.shape[1:]).copy()
    for p in range(1, coeffs.lag_order + 1):
        mu += xb[t - p] @ coeffs.lag_matrices[p - 1].T
    return mu


def objective(panel: LongitudinalPanel, part: PartitionSequence, model_centroids: CentroidSequence,
              coeffs: VarCoefficients) -> float:
    """Sum over fitted times of the squared Frobenius residual norm."""
    _check_blocks(panel, part, model_centroids, coeffs)
    total = 0.0
    for t in range(coeffs.lag_order, panel.n_times):
        mu = predicted_centroids(model_centroids, coeffs, t)
        resid = panel.data[t] - mu[part.labels[t]]
        total += float(np.sum(resid * resid))
    return total


def update_centroids(panel: LongitudinalPanel, part: PartitionSequence, coeffs: VarCoefficients,
                     current_centroids: CentroidSequence) -> CentroidSequence:
    """Exact minimization of the loss over the model centroids.

    For ``P = 1`` each slice has the closed form
    ``Xbar_s = (U'U)^{-1} U'(X_{s+1} - 1 c') A (A'A)^+``. For ``P >= 2`` the
    slices are swept in time order; each is set to the least-squares
    minimizer over every lag term it enters, with the others held fixed,
    choosing the solution closest to the current value when not unique.
    Rows of clusters that are empty wherever a slice enters the loss do not
    affect it and are carried over unchanged.
    """
    _check_blocks(panel, part, current_centroids, coeffs)
    if coeffs.lag_order == 1:
        return _update_centroids_lag1(panel, part, coeffs, current_centroids)
    return _update_centroids_sweep(panel, part, coeffs, current_centroids)


def _update_centroids_lag1(panel, part, coeffs, current):
    c = coeffs.intercept
    a = coeffs.lag_matrices[0]
    right = a @ np.linalg.pinv(a.T @ a)
    out = current.data.copy()
    for s in range(panel.n_times - 1):
        means, counts = grouped_means(panel.data[s + 1], part.labels[s + 1], part.n_clusters)
        occupied = counts > 0
        out[s, occupied] = (means[occupied] - c) @ right
    if not np.all(np.isfinite(out)):
        raise SingularDesignError("centroid update produced non-finite values")
    return CentroidSequence(out)


def _update_centroids_sweep(panel, part, coeffs, current):
    T = panel.n_times
    P = coeffs.lag_order
    G = part.n_clusters
    J = panel.n_vars
    c = coeffs.intercept
    lags = coeffs.lag_matrices
    gram = [a.T @ a for a in lags]
    sums = [_cluster_sums(panel.data[t], part.labels[t], G) for t in range(T)]
    counts = [np.bincount(part.labels[t], minlength=G).astype(float) for t in range(T)]
    xb = current.data.copy()
    for s in range(T - 1):
        lhs = np.zeros((G * J, G * J))
        rhs = np.zeros((G, J))
        for p in range(1, P + 1):
            t = s + p
            if t < P or t >= T:
                continue
            other = np.broadcast_to(c, (G, J)).copy()
            for q in range(1, P + 1):
                if q != p:
                    other += xb[t - q] @ lags[q - 1].T
            # U'R for the partial residual with this slice's term removed
            ur = sums[t] - counts[t][:, None] * other
            rhs += ur @ lags[p - 1]
            lhs += np.kron(gram[p - 1], np.diag(counts[t]))
        z0 = xb[s].reshape(-1, order="F")
        b = rhs.reshape(-1, order="F") - lhs @ z0
        dz = np.linalg.lstsq(lhs, b, rcond=None)[0]
        xb[s] = (z0 + dz).reshape((G, J), order="F")
    if not np.all(np.isfinite(xb)):
        raise SingularDesignError("centroid sweep produced non-finite values")
    return CentroidSequence(xb)


def _coefficient_design(panel, part, model_centroids, lag_order):
    """Weighted compressed design: one row per occupied (time, cluster)."""
    G = part.n_clusters
    rows, targets, weights = [], [], []
    for t in range(lag_order, panel.n_times):
        means, counts = grouped_means(panel.data[t], part.labels[t], G)
        occ = counts > 0
        lagged = [model_centroids.data[t - p][occ] for p in range(1, lag_order + 1)]
        rows.append(np.hstack([np.ones((occ.sum(), 1)), *lagged]))
        targets.append(means[occ])
        weights.append(counts[occ])
    if not rows or sum(len(r) for r in rows) == 0:
        raise DegenerateDesignError(
            f"no fitted observations for lag order {lag_order} with T={panel.n_times}"
        )
    return np.vstack(rows), np.vstack(targets), np.concatenate(weights).astype(float)


def update_coefficients(panel: LongitudinalPanel, part: PartitionSequence,
                        model_centroids: CentroidSequence, lag_order: int = 1) -> VarCoefficients:
    """Minimum-norm least-squares ``B = [c, A_1, ..., A_P]`` given partition and centroids.

    The stacked regression of ``X_t`` on ``U_t [1, Xbar_{t-1}, ..., Xbar_{t-P}]``
    has duplicated rows within each cluster, so it is solved on cluster means
    with ``sqrt(n_gt)`` weights, which yields the same normal equations.
    """
    if panel.n_times <= lag_order:
        raise DegenerateDesignError(f"lag order {lag_order} leaves no fitted times for T={panel.n_times}")
    _check_blocks(panel, part, model_centroids, None)
    design, target, w = _coefficient_design(panel, part, model_centroids, lag_order)
    sw = np.sqrt(w)[:, None]
    bt = np.linalg.lstsq(design * sw, target * sw, rcond=None)[0]
    return VarCoefficients.from_stacked(bt.T)


def update_partition(panel: LongitudinalPanel, model_centroids: CentroidSequence,
                     coeffs: VarCoefficients) -> PartitionSequence:
    """Assign every unit to its nearest predicted centroid.

    Fitted times use ``c + sum_p A_p xbar_{g,t-p}``; the leading ``P`` static
    slices use the model centroids of the same time. Ties go to the lowest
    cluster index.
    """
    _check_blocks(panel, None, model_centroids, coeffs)
    T = panel.n_times
    labels = np.empty((T, panel.n_units), dtype=np.intp)
    for t in range(T):
        if t < coeffs.lag_order:
            centers = model_centroids.data[t]
        else:
            centers = predicted_centroids(model_centroids, coeffs, t)
        labels[t] = np.argmin(_kmeans.sq_distances(panel.data[t], centers), axis=1)
    return PartitionSequence(labels, model_centroids.n_clusters)


# ---------------------------------------------------------------------------
# driver


def _reseed_empty(panel, labels, model_centroids, coeffs, budget):
    """Fill empty clusters at fitted times with the worst-fitted unit.

    A move is only made while the cumulative loss increase stays within
    ``budget``, so the partition step never raises the loss.
    """
    G = model_centroids.n_clusters
    moves = 0
    for t in range(coeffs.lag_order, panel.n_times):
        counts = np.bincount(labels[t], minlength=G)
        if counts.min() > 0:
            continue
        mu = predicted_centroids(model_centroids, coeffs, t)
        d2 = _kmeans.sq_distances(panel.data[t], mu)
        for g in np.flatnonzero(counts == 0):
            resid = d2[np.arange(len(labels[t])), labels[t]]
            donors = counts[labels[t]] > 1
            if not donors.any():
                break
            i = int(np.argmax(np.where(donors, resid, -np.inf)))
            increase = d2[i, g] - resid[i]
            if increase > budget:
                continue
            budget -= increase
            counts[labels[t][i]] -= 1
            counts[g] += 1
            labels[t][i] = g
            moves += 1
    return moves


def _fill_empty_random(labels, n_clusters, rng):
    for row in labels:
        counts = np.bincount(row, minlength=n_clusters)
        for g in np.flatnonzero(counts == 0):
            donors = np.flatnonzero(counts[row] > 1)
            i = rng.choice(donors)
            counts[row[i]] -= 1
            row[i] = g
            counts[g] = 1


def initial_partition(panel: LongitudinalPanel, n_clusters: int, strategy: InitStrategy,
                      rng: np.random.Generator) -> PartitionSequence:
    """Starting partition with every cluster occupied at every time."""
    T, n, _ = panel.data.shape
    strategy = InitStrategy(strategy)
    if strategy is InitStrategy.RANDOM:
        labels = rng.integers(n_clusters, size=(T, n))
        _fill_empty_random(labels, n_clusters, rng)
    elif strategy is InitStrategy.SLICEWISE:
        labels = np.empty((T, n), dtype=np.intp)
        prev = None
        for t in range(T):
            lab, centers = _kmeans.kmeans(panel.data[t], n_clusters, rng)
            if prev is not None:
                perm = _kmeans.match_labels(prev, centers)
                lab = perm[lab]
                centers = centers[np.argsort(perm)]
            labels[t] = lab
            prev = centers
    else:
        raise InvalidConfigError(f"no single initial partition for strategy {strategy.value!r}")
    return PartitionSequence(labels, n_clusters)


def _align_lag1_labels(panel, labels, xb, coeffs):
    """Relabel clusters so consecutive fitted times match by predicted centroid.

    With one lag, centroid slice ``s`` only enters the loss at time ``s+1``,
    so permuting the labels at time ``t`` together with the rows of slice
    ``t-1`` leaves the loss and the coefficients unchanged.
    """
    prev = predicted_centroids(CentroidSequence(xb), coeffs, 1)
    for t in range(2, panel.n_times):
        mu = predicted_centroids(CentroidSequence(xb), coeffs, t)
        perm = _kmeans.match_labels(prev, mu)
        labels[t] = perm[labels[t]]
        xb[t - 1] = xb[t - 1][np.argsort(perm)]
        prev = mu[np.argsort(perm)]


def _anchor_gauge(panel, labels, xb, coeffs):
    """Move the model centroids next to the empirical ones without changing the fit.

    The loss only sees the predictions ``c + sum_p A_p xbar_{t-p}``, so the map
    ``xbar -> S xbar + d`` with ``A_p -> A_p S^-1`` and a matching intercept
    is an exact symmetry. ``(S, d)`` is fitted by weighted least squares of the
    class means on the model centroids over the labelled slices. Without this
    the static slices would be assigned against centroids living in an
    arbitrary affine frame. Returns the new coefficients, or None when the
    map is not well determined.
    """
    P = coeffs.lag_order
    G, J = xb.shape[1], xb.shape[2]
    rows, targets, weights = [], [], []
    for s in range(P, xb.shape[0]):
        means, counts = grouped_means(panel.data[s], labels[s], G)
        occ = counts > 0
        rows.append(xb[s][occ])
        targets.append(means[occ])
        weights.append(np.sqrt(counts[occ]))
    design = np.hstack([np.ones((sum(len(r) for r in rows), 1)), np.vstack(rows)])
    w = np.concatenate(weights)[:, None]
    if np.linalg.matrix_rank(design) < J + 1:
        return None
    sol = np.linalg.lstsq(design * w, np.vstack(targets) * w, rcond=None)[0]
    d, s_mat = sol[0], sol[1:].T
    if not np.all(np.isfinite(sol)) or np.linalg.cond(s_mat) > 1e8:
        return None
    s_inv = np.linalg.inv(s_mat)
    lags = coeffs.lag_matrices @ s_inv
    intercept = coeffs.intercept - lags.sum(axis=0) @ d
    xb[:] = xb @ s_mat.T + d
    return VarCoefficients(intercept, lags)


def _restart_rng(seed: int, restart_index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(restart_index)])


def fit(panel: LongitudinalPanel, config: FitConfig, restart_index: int = 0,
        init_partition: PartitionSequence | None = None) -> FitResult:
    """Run one coordinate-descent restart to convergence.

    Parameters
    ----------
    panel : LongitudinalPanel
    config : FitConfig
    restart_index : int
        Selects the random stream (derived from ``config.seed``) and, for the
        mixed strategy, the kind of starting partition.
    init_partition : PartitionSequence, optional
        Explicit starting partition; overrides the configured strategy.
    """
    config.validate(panel)
    G, P = config.n_clusters, config.lag_order
    T = panel.n_times
    rng = _restart_rng(config.seed, restart_index)
    strategy = config.strategy_for(restart_index)
    if init_partition is not None:
        _check_partition(panel, init_partition)
        if init_partition.n_clusters != G:
            raise InvalidConfigError(
                f"initial partition has G={init_partition.n_clusters}, config asks for {G}"
            )
        part = init_partition
    else:
        part = initial_partition(panel, G, strategy, rng)

    # start the centroid slices at the class means of the starting partition
    means = empirical_centroids(panel, part, allow_empty=True).data[: T - 1]
    fallback = panel.data[: T - 1].mean(axis=1, keepdims=True)
    xbar = CentroidSequence(np.where(np.isnan(means), fallback, means))
    coeffs = update_coefficients(panel, part, xbar, P)
    f = objective(panel, part, xbar, coeffs)
    trace = [f]
    converged = False
    reseeds = 0
    it = 0
    for it in range(1, config.max_iters + 1):
        f_start = f

        # step 1: centroids
        cand = update_centroids(panel, part, coeffs, xbar)
        f_new = objective(panel, part, cand, coeffs)
        if f_new <= f:
            xbar, f = cand, f_new
        trace.append(f)

        # step 2: VAR coefficients
        cand = update_coefficients(panel, part, xbar, P)
        f_new = objective(panel, part, xbar, cand)
        if f_new <= f:
            coeffs, f = cand, f_new
        trace.append(f)

        # step 3: partition
        new_part = update_partition(panel, xbar, coeffs)
        labels = np.array(new_part.labels)
        f_arg = objective(panel, new_part, xbar, coeffs)
        reseeds += _reseed_empty(panel, labels, xbar, coeffs, max(f - f_arg, 0.0))
        new_part = PartitionSequence(labels, G)
        f_new = objective(panel, new_part, xbar, coeffs)
        if f_new > f:
            # rounding at a fixed point; the previous fitted slices are still optimal
            labels[P:] = part.labels[P:]
            new_part = PartitionSequence(labels, G)
            f_new = objective(panel, new_part, xbar, coeffs)
        part, f = new_part, f_new
        trace.append(f)

        if f == 0.0 or (f_start - f) <= config.rel_tol * f_start:
            converged = True
            break

    labels = np.array(part.labels)
    xb = xbar.data.copy()
    if P == 1 and G > 1:
        _align_lag1_labels(panel, labels, xb, coeffs)
    if G > 1:
        f_fit = objective(panel, PartitionSequence(labels, G), CentroidSequence(xb), coeffs)
        moved = xb.copy()
        anchored = _anchor_gauge(panel, labels, moved, coeffs)
        if anchored is not None:
            f_moved = objective(panel, PartitionSequence(labels, G), CentroidSequence(moved), anchored)
            # an exact symmetry up to rounding; keep the original frame otherwise
            if f_moved <= f_fit + 1e-9 * f_fit + 1e-12:
                xb, coeffs = moved, anchored
    xbar = CentroidSequence(xb)
    static = update_partition(panel, xbar, coeffs).labels
    labels[:P] = static[:P]
    part = PartitionSequence(labels, G)
    return FitResult(
        partition=part,
        model_centroids=xbar,
        empirical_centroids=empirical_centroids(panel, part, allow_empty=True),
        coefficients=coeffs,
        objective=objective(panel, part, xbar, coeffs),
        iterations=it,
        converged=converged,
        restart_index=restart_index,
        objective_trace=trace,
        config=config,
        init_strategy=strategy,
        static_slices=tuple(range(P)),
        n_reseeds=reseeds,
    )


def default_threads() -> int:
    """Parallelism cap from ``CARCLUST_THREADS`` (1 when unset or invalid)."""
    try:
        return max(1, int(os.environ.get("CARCLUST_THREADS", "1")))
    except ValueError:
        return 1


def fit_multistart(panel: LongitudinalPanel, config: FitConfig, n_jobs: int | None = None) -> FitResult:
    """Best of ``config.n_restarts`` independent restarts by objective.

    Ties go to the lowest restart index, so the result does not depend on
    ``n_jobs``.
    """
    config.validate(panel)

    def run(r):
        try:
            return fit(panel, config, restart_index=r)
        except (CarClustError, np.linalg.LinAlgError) as exc:
            return exc

    jobs = n_jobs if n_jobs is not None else 1
    restarts = range(config.n_restarts)
    if jobs > 1 and config.n_restarts > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run, restarts))
    else:
        outcomes = [run(r) for r in restarts]

    best = None
    objectives = []
    for out in outcomes:
        if isinstance(out, Exception):
            objectives.append(float("nan"))
            continue
        objectives.append(out.objective)
        if best is None or out.objective < best.objective:
            best = out
    if best is None:
        raise AllRestartsFailedError(list(enumerate(outcomes)))
    return replace(best, restart_objectives=objectives)
