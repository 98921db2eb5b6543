"""Small Lloyd's k-means used to seed the slicewise initialization."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def sq_distances(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, shape ``(len(x), len(centers))``."""
    diff = x[:, None, :] - centers[None, :, :]
    return np.einsum("ngj,ngj->ng", diff, diff)


def kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = [x[rng.integers(n)]]
    d2 = sq_distances(x, np.array(centers))[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers.append(x[idx])
        d2 = np.minimum(d2, sq_distances(x, x[idx][None])[:, 0])
    return np.array(centers)


def kmeans(x: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 100):
    """Return ``(labels, centers)``; every cluster keeps at least one point."""
    n = x.shape[0]
    centers = kmeans_pp(x, k, rng)
    labels = np.full(n, -1)
    for _ in range(max_iter):
        d2 = sq_distances(x, centers)
        new = np.argmin(d2, axis=1)
        counts = np.bincount(new, minlength=k)
        for g in np.flatnonzero(counts == 0):
            # steal the worst-fitted point from a cluster that can spare it
            resid = d2[np.arange(n), new]
            donors = counts[new] > 1
            i = int(np.argmax(np.where(donors, resid, -np.inf)))
            counts[new[i]] -= 1
            new[i] = g
            counts[g] = 1
        if np.array_equal(new, labels):
            break
        labels = new
        for g in range(k):
            centers[g] = x[labels == g].mean(axis=0)
    return labels, centers


def match_labels(prev_centers: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Permutation ``perm`` so that ``perm[b]`` is the label in ``prev`` matched to ``b``."""
    cost = sq_distances(prev_centers, centers)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(cols), dtype=np.intp)
    perm[cols] = rows
    return perm
