# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled empirical-likelihood inner solve.

Same algorithm and return conventions as ``_el_fallback``; all loops run
without the GIL.
"""

from libc.math cimport fabs, log1p, INFINITY, NAN
from libc.stdlib cimport malloc, free

import numpy as np

cdef double EPS = 2.220446049250313e-16


cdef inline double _g(const double* w, Py_ssize_t n, double lam) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        s += w[i] / (1.0 + lam * w[i])
    return s


cdef int _solve(const double* w, Py_ssize_t n, double tol, double delta, int maxiter,
                double* lam_out, double* g_out, int* conv_out, int* iters_out) noexcept nogil:
    """Returns 0 on an interior solve, 1 if all scores vanish, 2 on hull violation."""
    cdef double wmax = 0.0, wmin = 0.0, ftol
    cdef Py_ssize_t i
    cdef double xpre, xcur, fpre, fcur, xblk = 0.0, fblk = 0.0, spre = 0.0, scur = 0.0
    cdef double dlt, sbis, stry, dpre, dblk, lim
    cdef int it
    if n > 0:
        wmax = w[0]
        wmin = w[0]
    for i in range(1, n):
        if w[i] > wmax:
            wmax = w[i]
        if w[i] < wmin:
            wmin = w[i]
    if wmax == 0.0 and wmin == 0.0:
        lam_out[0] = 0.0
        g_out[0] = 0.0
        conv_out[0] = 1
        iters_out[0] = 0
        return 1
    if not (wmax > 0.0 and wmin < 0.0):
        lam_out[0] = NAN
        g_out[0] = NAN
        conv_out[0] = 0
        iters_out[0] = 0
        return 2
    ftol = tol * (wmax if wmax > -wmin else -wmin)
    xpre = (-1.0 + delta) / wmax
    xcur = (-1.0 + delta) / wmin
    fpre = _g(w, n, xpre)
    fcur = _g(w, n, xcur)
    for it in range(maxiter):
        if fpre != 0 and fcur != 0 and (fpre < 0) != (fcur < 0):
            xblk = xpre
            fblk = fpre
            spre = xcur - xpre
            scur = spre
        if fabs(fblk) < fabs(fcur):
            xpre = xcur
            xcur = xblk
            xblk = xpre
            fpre = fcur
            fcur = fblk
            fblk = fpre
        dlt = (4 * EPS * fabs(xcur) + 1e-300) / 2
        sbis = (xblk - xcur) / 2
        if fcur == 0 or fabs(fcur) <= ftol or fabs(sbis) < dlt:
            lam_out[0] = xcur
            g_out[0] = fcur
            conv_out[0] = 1
            iters_out[0] = it
            return 0
        if fabs(spre) > dlt and fabs(fcur) < fabs(fpre):
            if xpre == xblk:
                stry = -fcur * (xcur - xpre) / (fcur - fpre)
            else:
                dpre = (fpre - fcur) / (xpre - xcur)
                dblk = (fblk - fcur) / (xblk - xcur)
                stry = -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            lim = 3 * fabs(sbis) - dlt
            if fabs(spre) < lim:
                lim = fabs(spre)
            if 2 * fabs(stry) < lim:
                spre = scur
                scur = stry
            else:
                spre = sbis
                scur = sbis
        else:
            spre = sbis
            scur = sbis
        xpre = xcur
        fpre = fcur
        if fabs(scur) > dlt:
            xcur += scur
        elif sbis > 0:
            xcur += dlt
        else:
            xcur -= dlt
        fcur = _g(w, n, xcur)
    lam_out[0] = xcur
    g_out[0] = fcur
    conv_out[0] = 1 if fabs(fcur) <= ftol else 0
    iters_out[0] = maxiter
    return 0


cdef double _lr(const double* w, Py_ssize_t n, double lam) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        s += log1p(lam * w[i])
    s *= 2.0
    return s if s > 0.0 else 0.0


def solve_lambda(w, double tol=1e-12, double delta=1e-10, int maxiter=500):
    """Root of ``sum w / (1 + lam w)`` on the admissible interval.

    Returns ``(lam, g(lam), converged, boundary, iterations)``.
    """
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double lam, gval
    cdef int conv, iters, status
    cdef Py_ssize_t n = wv.shape[0]
    cdef const double* ptr = &wv[0] if n > 0 else NULL
    with nogil:
        status = _solve(ptr, n, tol, delta, maxiter, &lam, &gval, &conv, &iters)
    return lam, gval, bool(conv), status == 2, iters


def log_ratio(w, double tol=1e-12, double delta=1e-10, int maxiter=500):
    """``(lr, lam, converged, boundary)`` with ``lr = 2 sum log(1 + lam w)``."""
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double lam, gval, lr = 0.0
    cdef int conv, iters, status
    cdef Py_ssize_t n = wv.shape[0]
    cdef const double* ptr = &wv[0] if n > 0 else NULL
    with nogil:
        status = _solve(ptr, n, tol, delta, maxiter, &lam, &gval, &conv, &iters)
        if status == 2:
            lr = INFINITY
        elif lam != 0.0:
            lr = _lr(ptr, n, lam)
    return lr, lam, bool(conv), status == 2


def profile_log_ratio(k, v, double mu, double tol=1e-12, double delta=1e-10,
                      int maxiter=500):
    """``log_ratio`` of the scores ``k * (v - mu)``."""
    cdef const double[::1] kv = np.ascontiguousarray(k, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = kv.shape[0], i
    if vv.shape[0] != n:
        raise ValueError("weights and values differ in length")
    cdef double lam, gval, lr = 0.0
    cdef int conv, iters, status
    cdef double* w = <double*> malloc((n if n > 0 else 1) * sizeof(double))
    if w == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                w[i] = kv[i] * (vv[i] - mu)
            status = _solve(w, n, tol, delta, maxiter, &lam, &gval, &conv, &iters)
            if status == 2:
                lr = INFINITY
            elif lam != 0.0:
                lr = _lr(w, n, lam)
    finally:
        free(w)
    return lr, lam, bool(conv), status == 2
