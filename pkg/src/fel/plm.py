"""Semi-functional partially linear model ``Y = Z beta + r(X) + eps``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from .curves import Curve, FunctionalDataset
from .empirical_likelihood import IntervalResult, el_confidence_interval
from .errors import EmptyNeighborhood, InvalidArgument, SingularDesign
from .kernel_smoothing import KernelSmoother, SmootherConfig

__all__ = ["PLMFit", "smoother_matrix", "profile_objective", "profile_beta",
           "plm_el_interval"]


@dataclass(frozen=True)
class PLMFit:
    beta_hat: NDArray[np.float64]
    smoother_cfg: SmootherConfig
    partial_responses: NDArray[np.float64]

    def partial_dataset(self, ds: FunctionalDataset) -> FunctionalDataset:
        return FunctionalDataset(ds.grid, ds.values, self.partial_responses, None, ds.ids)

    def linear_part(self, z: ArrayLike) -> float:
        return float(np.asarray(z, dtype=np.float64) @ self.beta_hat)


def smoother_matrix(ds: FunctionalDataset, cfg: SmootherConfig) -> NDArray[np.float64]:
    """Row-normalized self-inclusive kernel weights between training curves."""
    sm = KernelSmoother(ds.with_responses(np.zeros(len(ds))), cfg)
    k = sm.kernel_matrix
    tot = k.sum(axis=1)
    empty = np.flatnonzero(tot <= 0)
    if empty.size:
        raise EmptyNeighborhood(f"smoother row {empty[0]} has no weight", index=int(empty[0]))
    return k / tot[:, None]


def profile_objective(beta: ArrayLike, S: NDArray[np.float64], y: NDArray[np.float64],
                      z: NDArray[np.float64]) -> float:
    """``sum_i (Y_i - Z_i beta - r(X_i, beta))^2``."""
    resid = y - z @ np.asarray(beta, dtype=np.float64)
    resid = resid - S @ resid
    return float(resid @ resid)


def profile_beta(ds: FunctionalDataset, cfg: SmootherConfig,
                 S: Optional[NDArray[np.float64]] = None) -> PLMFit:
    """Profile least-squares estimate of the linear coefficients.

    The profiled criterion is linear least squares in the smoothed-out
    design ``(I - S) Z`` against ``(I - S) Y``; it is solved by pivoted QR.
    Unless ``cfg`` fixes the bandwidth, a pilot bandwidth is cross-validated
    on the raw responses, then re-selected on the pilot partial responses;
    the final fit uses that second bandwidth.
    """
    y = ds.require_responses()
    z = ds.linear_covariates
    if z is None or z.shape[1] == 0:
        raise InvalidArgument("profile_beta needs at least one linear covariate")
    if S is None and not cfg.is_resolved:
        pilot = profile_beta(ds, cfg.resolve(ds))
        cfg = cfg.resolve(pilot.partial_dataset(ds))
    elif not cfg.is_resolved:
        cfg = cfg.resolve(ds)
    if S is None:
        S = smoother_matrix(ds, cfg)
    zt = z - S @ z
    yt = y - S @ y
    q, r, piv = linalg.qr(zt, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    # relative to the raw design, so columns that smoothing cancels count as zero
    scale = float(np.linalg.norm(z, axis=0).max())
    tol = 10 * max(zt.shape) * np.finfo(float).eps
    if diag.size == 0 or diag[-1] <= tol * max(diag[0], scale):
        raise SingularDesign("the smoothed-out linear design is rank deficient")
    coef = linalg.solve_triangular(r, q.T @ yt)
    beta = np.empty_like(coef)
    beta[piv] = coef
    return PLMFit(beta, cfg, y - z @ beta)


def plm_el_interval(ds: FunctionalDataset, x0: Curve, cfg: SmootherConfig,
                    alpha: float = 0.05, corrected: bool = True,
                    beta: Optional[ArrayLike] = None,
                    z0: Optional[ArrayLike] = None) -> IntervalResult:
    """Plug-in empirical likelihood interval for ``r(x0)``.

    Uses ``beta`` when given, otherwise the profile estimate. With ``z0`` the
    interval is shifted by ``z0 beta`` to cover the full regression function.
    """
    y = ds.require_responses()
    if ds.n_linear == 0:
        partial = y
        beta_used = np.zeros(0)
    elif beta is None:
        fit = profile_beta(ds, cfg)
        cfg, partial, beta_used = fit.smoother_cfg, fit.partial_responses, fit.beta_hat
    else:
        beta_used = np.asarray(beta, dtype=np.float64)
        partial = y - ds.linear_covariates @ beta_used
    pds = FunctionalDataset(ds.grid, ds.values, partial)
    res = el_confidence_interval(pds, x0, cfg, alpha,
                                 "corrected" if corrected else "plain")
    res.diagnostics["beta"] = [float(b) for b in beta_used]
    if z0 is not None:
        res = res.shifted(float(np.asarray(z0, dtype=np.float64) @ beta_used))
    return res
