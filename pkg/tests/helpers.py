"""Independent dense constructions used as oracles in several test modules."""

import numpy as np


def lower_dense(e, n, p):
    m = np.eye(n * p)
    for k, b in enumerate(e):
        m[(k + 1) * p:(k + 2) * p, k * p:(k + 1) * p] = b
    return m


def upper_dense(q, p):
    n = len(q)
    m = np.zeros((n * p, n * p))
    for k, b in enumerate(q):
        m[k * p:(k + 1) * p, k * p:(k + 1) * p] = b
        if k + 1 < n:
            m[k * p:(k + 1) * p, (k + 1) * p:(k + 2) * p] = np.eye(p)
    return m


def dense_product(q, e_layers, p):
    """``L^(0) ... L^(theta-1) R`` by plain dense multiplication."""
    n = len(q)
    acc = np.eye(n * p)
    for layer in e_layers:
        acc = acc @ lower_dense(layer, n, p)
    return acc @ upper_dense(q, p)


def cofactor_det(a):
    """Laplace expansion along the first row; exact enough for small integer grids."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 0:
        return 1.0
    if n == 1:
        return float(a[0, 0])
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(a, 0, axis=0), j, axis=1)
        total += (-1) ** j * a[0, j] * cofactor_det(minor)
    return total


def boosted_grid(rng, k, p, boost=3.0, scale=1.0):
    g = rng.uniform(-scale, scale, (k, k, p, p))
    for i in range(k):
        g[i, i] += boost * np.eye(p)
    return g
