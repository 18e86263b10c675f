"""Pure-Python implementation of the empirical-likelihood inner solve.

Mirrors ``_el_core.pyx`` step for step; used when the compiled extension is
unavailable or ``FEL_PURE_PYTHON`` is set.
"""

import math

import numpy as np

EPS = np.finfo(float).eps


def _zeroin(g, xa, xb, fa, fb, ftol, maxiter):
    """Brent's bracketing root finder; returns ``(x, fx, converged, iters)``.

    ``g`` is strictly decreasing with ``fa > 0 > fb``.
    """
    xpre, xcur, fpre, fcur = xa, xb, fa, fb
    xblk = fblk = spre = scur = 0.0
    for it in range(maxiter):
        if fpre != 0 and fcur != 0 and (fpre < 0) != (fcur < 0):
            xblk, fblk = xpre, fpre
            spre = scur = xcur - xpre
        if abs(fblk) < abs(fcur):
            xpre, xcur, xblk = xcur, xblk, xcur
            fpre, fcur, fblk = fcur, fblk, fcur
        delta = (4 * EPS * abs(xcur) + 1e-300) / 2
        sbis = (xblk - xcur) / 2
        if fcur == 0 or abs(fcur) <= ftol or abs(sbis) < delta:
            return xcur, fcur, True, it
        if abs(spre) > delta and abs(fcur) < abs(fpre):
            if xpre == xblk:
                stry = -fcur * (xcur - xpre) / (fcur - fpre)
            else:
                dpre = (fpre - fcur) / (xpre - xcur)
                dblk = (fblk - fcur) / (xblk - xcur)
                stry = -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            if 2 * abs(stry) < min(abs(spre), 3 * abs(sbis) - delta):
                spre, scur = scur, stry
            else:
                spre = scur = sbis
        else:
            spre = scur = sbis
        xpre, fpre = xcur, fcur
        if abs(scur) > delta:
            xcur += scur
        else:
            xcur += delta if sbis > 0 else -delta
        fcur = g(xcur)
    return xcur, fcur, abs(fcur) <= ftol, maxiter


def solve_lambda(w, tol=1e-12, delta=1e-10, maxiter=500):
    """Root of ``sum w / (1 + lam w)`` on the admissible interval.

    Returns ``(lam, g(lam), converged, boundary, iterations)``.
    """
    w = np.ascontiguousarray(w, dtype=np.float64)
    wmax = float(w.max()) if w.size else 0.0
    wmin = float(w.min()) if w.size else 0.0
    if wmax == 0.0 and wmin == 0.0:
        return 0.0, 0.0, True, False, 0
    if not (wmax > 0.0 and wmin < 0.0):
        return math.nan, math.nan, False, True, 0
    ftol = tol * max(wmax, -wmin)

    def g(lam):
        return float(np.sum(w / (1.0 + lam * w)))

    lo = (-1.0 + delta) / wmax
    hi = (-1.0 + delta) / wmin
    flo, fhi = g(lo), g(hi)
    lam, glam, conv, it = _zeroin(g, lo, hi, flo, fhi, ftol, maxiter)
    return lam, glam, conv, False, it


def log_ratio(w, tol=1e-12, delta=1e-10, maxiter=500):
    """``(lr, lam, converged, boundary)`` with ``lr = 2 sum log(1 + lam w)``."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    lam, _, conv, boundary, _ = solve_lambda(w, tol, delta, maxiter)
    if boundary:
        return math.inf, lam, conv, True
    if lam == 0.0:
        return 0.0, lam, conv, False
    lr = 2.0 * float(np.sum(np.log1p(lam * w)))
    return max(lr, 0.0), lam, conv, False


def profile_log_ratio(k, v, mu, tol=1e-12, delta=1e-10, maxiter=500):
    """``log_ratio`` of the scores ``k * (v - mu)``."""
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return log_ratio(k * (v - mu), tol, delta, maxiter)
