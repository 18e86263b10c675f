"""Empirical likelihood for the kernel estimating equation.

The Nadaraya-Watson estimate solves ``sum K_i (Y_i - mu) = 0``. Profiling the
multinomial likelihood under that constraint gives

    lr(mu) = 2 sum log(1 + lam w_i),   w_i = K_i (Y_i - mu),

with ``lam`` the root of ``sum w_i / (1 + lam w_i) = 0``. Confidence intervals
are the level sets ``{mu : lr(mu) <= chi2_1 quantile}``. The bias-corrected
variant replaces ``Y_i`` by ``Y_i - r(X_i) + r(x0)`` using the fitted smoother.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize, special

from ._backend import core
from .curves import Curve, FunctionalDataset
from .errors import (
    BracketingFailed,
    DegenerateScores,
    EmptyNeighborhood,
    InsufficientSupport,
    InvalidArgument,
)
from .kernel_smoothing import KernelSmoother, SmootherConfig, WeightProfile, weighted_mean

__all__ = [
    "ELProblem",
    "ELEvaluation",
    "IntervalResult",
    "chi2_quantile",
    "normal_quantile",
    "solve_lambda",
    "el_log_ratio",
    "euclidean_log_ratio",
    "corrected_responses",
    "bias_corrected_scores",
    "profile_interval",
    "el_confidence_interval",
]

LAMBDA_TOL = 1e-12
LAMBDA_DELTA = 1e-10
MAX_EXPANSIONS = 60


@dataclass(frozen=True)
class ELProblem:
    """Estimating-function values ``w_i`` and the sample count ``n``."""

    scores: NDArray[np.float64]
    n: int

    def __post_init__(self):
        w = np.ascontiguousarray(self.scores, dtype=np.float64)
        if w.ndim != 1 or w.size > self.n:
            raise InvalidArgument("scores must be 1-d with at most n entries")
        if not np.all(np.isfinite(w)):
            raise InvalidArgument("scores must be finite")
        object.__setattr__(self, "scores", w)


@dataclass(frozen=True)
class ELEvaluation:
    lr: float
    lam: float
    converged: bool
    boundary: bool


@dataclass(frozen=True)
class IntervalResult:
    method: str
    estimate: float
    lo: float
    hi: float
    level: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    def shifted(self, offset: float) -> "IntervalResult":
        diag = dict(self.diagnostics, shift=offset)
        return IntervalResult(self.method, self.estimate + offset, self.lo + offset,
                              self.hi + offset, self.level, diag)


def normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise InvalidArgument(f"probability must lie in (0, 1), got {p}")
    return float(special.ndtri(p))


def chi2_quantile(p: float) -> float:
    """Quantile of chi-square with one degree of freedom."""
    if not 0.0 < p < 1.0:
        raise InvalidArgument(f"probability must lie in (0, 1), got {p}")
    return normal_quantile((1.0 + p) / 2.0) ** 2


def solve_lambda(problem: ELProblem | ArrayLike, tol: float = LAMBDA_TOL) -> ELEvaluation:
    """Lagrange multiplier and ``lr`` for a set of scores.

    All-zero scores give ``lr = 0``; scores that do not straddle zero give
    ``boundary=True`` and ``lr = inf``.
    """
    w = problem.scores if isinstance(problem, ELProblem) else np.asarray(problem, float)
    lr, lam, conv, boundary = core.log_ratio(w, tol, LAMBDA_DELTA)
    return ELEvaluation(lr, lam, conv, boundary)


def el_log_ratio(K: ArrayLike, Y: ArrayLike, mu: float) -> ELEvaluation:
    K = np.asarray(K, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    support = K > 0
    lr, lam, conv, boundary = core.profile_log_ratio(
        K[support], Y[support], float(mu), LAMBDA_TOL, LAMBDA_DELTA
    )
    return ELEvaluation(lr, lam, conv, boundary)


def euclidean_log_ratio(K: ArrayLike, Y: ArrayLike, mu: float) -> float:
    """Closed-form Euclidean likelihood ratio ``min sum (n p_i - 1)^2``.

    All ``n`` samples enter the centering, including those with zero weight.
    """
    K = np.asarray(K, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    n = K.size
    w = K * (Y - mu)
    centered = w - (np.sum(K * Y) / n - np.sum(K) / n * mu)
    den = float(centered @ centered)
    if den == 0.0:
        raise DegenerateScores("all centered scores are equal")
    return float(np.sum(w)) ** 2 / den


def corrected_responses(smoother: KernelSmoother, prof: WeightProfile,
                        responses: Optional[NDArray[np.float64]] = None) -> NDArray[np.float64]:
    """``Y_i - r(X_i) + r(x0)`` for every training sample.

    Entries outside the support of ``prof`` are returned but never used.
    """
    y = smoother.y if responses is None else responses
    fitted, usable = smoother.fitted_values(responses=responses)
    support = prof.raw_weights > 0
    bad = np.flatnonzero(support & ~usable)
    if bad.size:
        raise EmptyNeighborhood(
            f"no fitted value at training curve {bad[0]} (empty leave-one-out neighborhood)",
            index=int(bad[0]),
        )
    r0 = _weighted_mean(prof, y)
    return np.where(support, y - np.nan_to_num(fitted) + r0, y)


def bias_corrected_scores(ds: FunctionalDataset, x0: Curve, cfg: SmootherConfig,
                          mu: float, smoother: KernelSmoother | None = None) -> ELProblem:
    smoother = smoother or KernelSmoother(ds, cfg)
    prof = smoother.profile(x0)
    if prof.effective_count == 0:
        raise EmptyNeighborhood("empty neighborhood at the query curve",
                                min_distance=prof.min_distance)
    v = corrected_responses(smoother, prof)
    return ELProblem(prof.raw_weights * (v - mu), len(ds))


def _weighted_mean(prof: WeightProfile, y: NDArray[np.float64]) -> float:
    k = prof.raw_weights
    if not np.any(k > 0):
        raise EmptyNeighborhood("empty neighborhood at the query curve",
                                min_distance=prof.min_distance)
    return weighted_mean(k, y)


def _endpoint(ratio: Callable[[float], float], center: float, step: float,
              threshold: float, direction: float) -> float:
    inner, outer, val = center, center, 0.0
    for _ in range(MAX_EXPANSIONS):
        outer = center + direction * step
        val = ratio(outer)
        if val > threshold:
            break
        inner = outer
        step *= 2.0
    else:
        raise BracketingFailed(
            f"likelihood ratio stays below {threshold:.4g} after {MAX_EXPANSIONS} expansions"
        )
    # lr is +inf beyond the convex hull; bisect back until the bracket end is finite
    for _ in range(200):
        if math.isfinite(val):
            break
        mid = 0.5 * (inner + outer)
        vmid = ratio(mid)
        if vmid > threshold:
            outer, val = mid, vmid
        else:
            inner = mid
    else:
        raise BracketingFailed("could not locate a finite bracket end")
    xtol = min(1e-8, 1e-13 * (abs(center) + step))
    return optimize.brentq(lambda m: ratio(m) - threshold, min(inner, outer),
                           max(inner, outer), xtol=xtol, maxiter=500)


def profile_interval(K: ArrayLike, V: ArrayLike, alpha: float = 0.05,
                     kind: Literal["el", "euclidean"] = "el",
                     method: Optional[str] = None) -> IntervalResult:
    """Interval ``{mu : ratio(mu) <= chi2 quantile}`` for the equation
    ``sum K_i (V_i - mu) = 0``.

    The bracket around the root grows geometrically from one sandwich
    standard error before each endpoint is refined with Brent's method.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidArgument(f"alpha must lie in (0, 1), got {alpha}")
    K = np.asarray(K, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    support = K > 0
    count = int(np.count_nonzero(support))
    method = method or kind
    if count == 0:
        raise EmptyNeighborhood("empty neighborhood at the query curve")
    if count < 2:
        raise InsufficientSupport("a single support point cannot carry an interval")
    ks, vs = K[support], V[support]
    center = weighted_mean(ks, vs)
    level = 1.0 - alpha
    diag = {"effective_count": count}
    if np.all(vs == vs[0]):
        diag.update(lambda_lo=0.0, lambda_hi=0.0)
        return IntervalResult(method, center, center, center, level, diag)
    threshold = chi2_quantile(level)
    step = float(np.sqrt(np.sum((ks * (vs - center)) ** 2)) / ks.sum())
    if not step > 0:
        step = float(vs.max() - vs.min())

    if kind == "el":
        def ratio(mu):
            return core.profile_log_ratio(ks, vs, mu, LAMBDA_TOL, LAMBDA_DELTA)[0]
    elif kind == "euclidean":
        def ratio(mu):
            return euclidean_log_ratio(K, V, mu)
    else:
        raise InvalidArgument(f"unknown likelihood kind {kind!r}")

    lo = _endpoint(ratio, center, step, threshold, -1.0)
    hi = _endpoint(ratio, center, step, threshold, 1.0)
    lo, hi = min(lo, center), max(hi, center)
    if kind == "el":
        diag["lambda_lo"] = core.profile_log_ratio(ks, vs, lo, LAMBDA_TOL, LAMBDA_DELTA)[1]
        diag["lambda_hi"] = core.profile_log_ratio(ks, vs, hi, LAMBDA_TOL, LAMBDA_DELTA)[1]
    return IntervalResult(method, center, lo, hi, level, diag)


def el_confidence_interval(ds: FunctionalDataset, x0: Curve, cfg: SmootherConfig,
                           alpha: float = 0.05,
                           variant: Literal["plain", "corrected", "euclidean"] = "plain",
                           smoother: KernelSmoother | None = None) -> IntervalResult:
    """Empirical (or Euclidean) likelihood interval for the regression at ``x0``."""
    smoother = smoother or KernelSmoother(ds, cfg)
    prof = smoother.profile(x0)
    if prof.effective_count == 0:
        raise EmptyNeighborhood(
            f"no training curve within the bandwidth (closest at {prof.min_distance:.6g})",
            min_distance=prof.min_distance,
        )
    if variant == "plain":
        res = profile_interval(prof.raw_weights, smoother.y, alpha, "el", "el")
    elif variant == "corrected":
        v = corrected_responses(smoother, prof)
        res = profile_interval(prof.raw_weights, v, alpha, "el", "el_corrected")
    elif variant == "euclidean":
        res = profile_interval(prof.raw_weights, smoother.y, alpha, "euclidean", "euclidean")
    else:
        raise InvalidArgument(f"unknown variant {variant!r}")
    res.diagnostics["bandwidth"] = smoother.h
    return res
