"""Brute-force reference computations used to check the estimator.

Nothing here calls into carclust's numerical routines: every quantity is
rebuilt from explicit loops or full unit-level designs.
"""

import itertools

import numpy as np


def random_labels(rng, T, n, G):
    """(T, n) labels with every cluster occupied at every time."""
    labels = np.empty((T, n), dtype=int)
    for t in range(T):
        row = np.concatenate([np.arange(G), rng.integers(G, size=n - G)])
        labels[t] = rng.permutation(row)
    return labels


def naive_objective(x, labels, xbar, c, lags):
    """Loop-level residual sum; x (T, n, J), xbar (T-1, G, J), lags (P, J, J)."""
    T, n, J = x.shape
    P = len(lags)
    total = 0.0
    for t in range(P, T):
        for i in range(n):
            g = labels[t][i]
            for j in range(J):
                pred = c[j]
                for p in range(1, P + 1):
                    for k in range(J):
                        pred += lags[p - 1][j][k] * xbar[t - p][g][k]
                total += (x[t][i][j] - pred) ** 2
    return total


def indicator(labels_t, G):
    u = np.zeros((len(labels_t), G))
    u[np.arange(len(labels_t)), labels_t] = 1.0
    return u


def lag1_centroid_oracle(x, labels, c, a, G):
    """Per slice, solve min ||vec(Y) - (A kron U) vec(Z)|| by explicit normal equations."""
    T, n, J = x.shape
    out = np.empty((T - 1, G, J))
    for s in range(T - 1):
        u = indicator(labels[s + 1], G)
        y = x[s + 1] - np.outer(np.ones(n), c)
        design = np.kron(a, u)
        rhs = y.reshape(-1, order="F")
        z = np.linalg.pinv(design.T @ design) @ (design.T @ rhs)
        out[s] = z.reshape((G, J), order="F")
    return out


def sequential_sweep_oracle(x, labels, xbar, c, lags, G):
    """Slice-by-slice exact minimization with unit-level Kronecker designs."""
    T, n, J = x.shape
    P = len(lags)
    xbar = xbar.copy()
    for s in range(T - 1):
        blocks, targets = [], []
        for p in range(1, P + 1):
            t = s + p
            if t < P or t >= T:
                continue
            u = indicator(labels[t], G)
            resid = x[t] - np.outer(np.ones(n), c)
            for q in range(1, P + 1):
                if q != p:
                    resid = resid - u @ xbar[t - q] @ lags[q - 1].T
            blocks.append(np.kron(lags[p - 1], u))
            targets.append(resid.reshape(-1, order="F"))
        d = np.vstack(blocks)
        y = np.concatenate(targets)
        z = np.linalg.pinv(d.T @ d) @ d.T @ y
        xbar[s] = z.reshape((G, J), order="F")
    return xbar


def stacked_coefficient_oracle(x, labels, xbar, P, G):
    """Return (B, normal-equation matrix, rhs) from the full unit-level design."""
    T, n, J = x.shape
    rows, targets = [], []
    for t in range(P, T):
        u = indicator(labels[t], G)
        zdot = np.hstack([np.ones((G, 1))] + [xbar[t - p] for p in range(1, P + 1)])
        rows.append(u @ zdot)
        targets.append(x[t])
    d = np.vstack(rows)
    y = np.vstack(targets)
    lhs = d.T @ d
    rhs = d.T @ y
    bt = np.linalg.pinv(lhs) @ rhs
    return bt.T, lhs, rhs


def within_ss(xt, labels_t):
    total = 0.0
    for g in set(labels_t.tolist()):
        members = xt[labels_t == g]
        total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def enumerated_lag1_optimum(x, G):
    """Global minimum of the lag-1 loss by enumerating every partition sequence.

    For fixed partitions the inner minimum over centroids and coefficients is
    the sum of within-cluster sums of squares at the fitted times: predictions
    are constant within a cluster, so no choice can beat the class means, and
    c = 0, A = I, Xbar_s = class means of time s+1 attains them.
    """
    T, n, _ = x.shape
    per_time = list(itertools.product(range(G), repeat=n))
    best = np.inf
    for seq in itertools.product(per_time, repeat=T - 1):
        val = sum(within_ss(x[t + 1], np.array(seq[t])) for t in range(T - 1))
        best = min(best, val)
    return best


def inner_alternation(x, labels, G, P=1, iters=500, seed=0):
    """Alternate generic LS over (Xbar, B) for fixed labels from a random start."""
    rng = np.random.default_rng(seed)
    T, n, J = x.shape
    xbar = rng.normal(size=(T - 1, G, J))
    for _ in range(iters):
        b, _, _ = stacked_coefficient_oracle(x, labels, xbar, P, G)
        c, a = b[:, 0], b[:, 1:]
        xbar_new = lag1_centroid_oracle(x, labels, c, a, G)
        # unoccupied cluster rows are free; keep them where they were
        for s in range(T - 1):
            occ = np.bincount(labels[s + 1], minlength=G) > 0
            xbar[s, occ] = xbar_new[s, occ]
    b, _, _ = stacked_coefficient_oracle(x, labels, xbar, P, G)
    return naive_objective(x, labels, xbar, b[:, 0], [b[:, 1:]])


def grouped_mean_oracle(x, labels, G):
    """Means by explicit loops, x (T, n, J)."""
    T, n, J = x.shape
    out = np.zeros((T, G, J))
    for t in range(T):
        for g in range(G):
            acc = np.zeros(J)
            cnt = 0
            for i in range(n):
                if labels[t][i] == g:
                    acc += x[t][i]
                    cnt += 1
            out[t, g] = acc / cnt
    return out
