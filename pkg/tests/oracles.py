"""Independent reference computations used by the tests.

None of these share code with the package: the likelihood oracles solve
the primal constrained problems directly.
"""

import numpy as np
from scipy import linalg


def interior_start(w):
    """A strictly positive probability vector with ``sum p w = 0``."""
    w = np.asarray(w, dtype=float)
    pos, neg, zero = w > 0, w < 0, w == 0
    e = 0.5 / w.size if zero.any() else 0.0
    s_pos, s_neg = w[pos].sum(), -w[neg].sum()
    # a = t / s_pos on positives, b = t / s_neg on negatives balances the moment
    t = (1.0 - e * zero.sum()) / (pos.sum() / s_pos + neg.sum() / s_neg)
    p = np.empty_like(w)
    p[pos], p[neg], p[zero] = t / s_pos, t / s_neg, e
    return p


def el_primal_log_ratio(w, tol=1e-15, maxiter=200):
    """``-2 max sum log(n p_i)`` subject to ``sum p = 1``, ``sum p w = 0``.

    Damped Newton iterations restricted to the null space of the
    constraints, started from a feasible interior point.
    """
    w = np.asarray(w, dtype=float)
    n = w.size
    p = interior_start(w)
    basis = linalg.null_space(np.vstack([np.ones(n), w]))
    if basis.shape[1] == 0:
        return -2.0 * np.sum(np.log(n * p))
    for _ in range(maxiter):
        grad = basis.T @ (1.0 / p)
        hess = basis.T @ (basis / p[:, None] ** 2)
        step = linalg.solve(hess, grad, assume_a="pos")
        if grad @ step < tol:
            break
        d = basis @ step
        a = 1.0
        f0 = np.sum(np.log(p))
        while np.any(p + a * d <= 0) or np.sum(np.log(p + a * d)) < f0:
            a /= 2.0
            if a < 1e-30:
                break
        p = p + a * d
    return -2.0 * np.sum(np.log(n * p))


def euclidean_kkt(w):
    """``min sum (n p_i - 1)^2`` subject to ``sum p = 1``, ``sum p w = 0``.

    Solves the KKT system of the equality-constrained quadratic program.
    """
    w = np.asarray(w, dtype=float)
    n = w.size
    a = np.vstack([np.ones(n), w])
    kkt = np.zeros((n + 2, n + 2))
    kkt[:n, :n] = 2.0 * n * n * np.eye(n)
    kkt[:n, n:] = a.T
    kkt[n:, :n] = a
    rhs = np.concatenate([2.0 * n * np.ones(n), [1.0, 0.0]])
    p = linalg.solve(kkt, rhs)[:n]
    return float(np.sum((n * p - 1.0) ** 2))


def bisect_lambda(w, iters=200):
    """Root of ``sum w / (1 + lam w)`` by plain bisection."""
    w = np.asarray(w, dtype=float)
    lo, hi = (-1 + 1e-12) / w.max(), (-1 + 1e-12) / w.min()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.sum(w / (1 + mid * w)) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def random_instance(gen, max_support=6, max_n=10):
    """Weights with at most ``max_support`` positive entries and a ``mu``
    strictly inside the range of the supported responses."""
    m = int(gen.integers(2, max_support + 1))
    n = int(gen.integers(m, max_n + 1))
    k = np.zeros(n)
    k[:m] = gen.uniform(0.05, 1.0, m)
    y = gen.normal(size=n) * gen.uniform(0.2, 3.0)
    lo, hi = y[:m].min(), y[:m].max()
    mu = gen.uniform(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo))
    order = gen.permutation(n)
    return k[order], y[order], float(mu)
