"""Normal-approximation intervals with a plug-in variance.

The variance of the kernel estimate is estimated as
``sigma2_hat * sum K_i^2 / (sum K_i)^2``, where ``sigma2_hat`` is the mean
squared residual of the smoother over the training set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike

from .curves import Curve, FunctionalDataset
from .empirical_likelihood import IntervalResult, corrected_responses, normal_quantile
from .errors import EmptyNeighborhood, InvalidArgument
from .kernel_smoothing import KernelSmoother, SmootherConfig, WeightProfile, weighted_mean

__all__ = [
    "VarianceEstimate",
    "ResidualVariance",
    "kernel_factor",
    "residual_variance",
    "smoother_residual_variance",
    "normal_interval",
    "normal_interval_from_profile",
]


@dataclass(frozen=True)
class VarianceEstimate:
    sigma2_hat: float
    kernel_factor: float

    @property
    def se(self) -> float:
        return math.sqrt(self.sigma2_hat * self.kernel_factor)


@dataclass(frozen=True)
class ResidualVariance:
    """Mean squared residual and how many samples were usable."""

    value: float
    n_used: int
    n_skipped: int


def kernel_factor(K: ArrayLike) -> float:
    K = np.asarray(K, dtype=np.float64)
    if not K.sum() > 0:
        raise EmptyNeighborhood("kernel factor of an empty profile")
    K = K / K.max()  # scale-free; avoids underflow of K^2
    tot = K.sum()
    return float(np.sum(K * K) / (tot * tot))


def smoother_residual_variance(smoother: KernelSmoother,
                               loo: Optional[bool] = None) -> ResidualVariance:
    """Mean of ``(Y_i - r(X_i))^2`` over the samples with a fitted value.

    With ``loo=None`` the fit follows ``smoother.cfg.loo_fitted``.
    """
    fitted, usable = smoother.fitted_values(loo=loo)
    if not np.any(usable):
        raise EmptyNeighborhood("no training sample has a fitted value")
    resid = smoother.y[usable] - fitted[usable]
    n_used = int(usable.sum())
    return ResidualVariance(float(resid @ resid) / n_used, n_used, len(usable) - n_used)


def residual_variance(ds: FunctionalDataset, cfg: SmootherConfig,
                      loo: Optional[bool] = None) -> float:
    return smoother_residual_variance(KernelSmoother(ds, cfg), loo).value


def normal_interval_from_profile(smoother: KernelSmoother, prof: WeightProfile,
                                 sigma2: float, alpha: float = 0.05,
                                 corrected: bool = False) -> IntervalResult:
    if not 0.0 < alpha < 1.0:
        raise InvalidArgument(f"alpha must lie in (0, 1), got {alpha}")
    k = prof.raw_weights
    count = prof.effective_count
    if count == 0:
        raise EmptyNeighborhood(
            f"no training curve within the bandwidth (closest at {prof.min_distance:.6g})",
            min_distance=prof.min_distance,
        )
    v = corrected_responses(smoother, prof) if corrected else smoother.y
    support = k > 0
    center = weighted_mean(k[support], v[support])
    var = VarianceEstimate(sigma2, kernel_factor(k))
    half = normal_quantile(1.0 - alpha / 2.0) * var.se
    diag = {"effective_count": count, "se": var.se, "sigma2_hat": sigma2,
            "kernel_factor": var.kernel_factor, "bandwidth": smoother.h}
    method = "normal_corrected" if corrected else "normal"
    return IntervalResult(method, center, center - half, center + half, 1.0 - alpha, diag)


def normal_interval(ds: FunctionalDataset, x0: Curve, cfg: SmootherConfig,
                    alpha: float = 0.05, corrected: bool = False,
                    smoother: KernelSmoother | None = None) -> IntervalResult:
    """Symmetric interval ``center +/- z se``.

    ``corrected=True`` centers it at the root of the bias-corrected equation.
    """
    smoother = smoother or KernelSmoother(ds, cfg)
    sigma2 = smoother_residual_variance(smoother, loo=True).value
    return normal_interval_from_profile(smoother, smoother.profile(x0), sigma2,
                                        alpha, corrected)
