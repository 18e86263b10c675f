"""Kernels, the functional Nadaraya-Watson estimator and bandwidth selection."""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .curves import Curve, FunctionalDataset, SemiMetricSpec, pairwise_euclidean
from .errors import (
    DegenerateDistances,
    EmptyNeighborhood,
    GridMismatch,
    InvalidArgument,
    InvalidConfig,
)

__all__ = [
    "Kernel",
    "SmootherConfig",
    "WeightProfile",
    "KernelSmoother",
    "kernel_eval",
    "weight_profile",
    "nw_estimate",
    "cv_bandwidth",
    "cv_criterion",
    "default_h_grid",
]


class Kernel(str, enum.Enum):
    """Kernels supported on [0, 1]."""

    QUADRATIC = "quadratic"
    UNIFORM = "uniform"

    def __call__(self, s: ArrayLike) -> NDArray[np.float64]:
        s = np.asarray(s, dtype=np.float64)
        if np.any(s < 0) or np.any(np.isnan(s)):
            raise InvalidArgument("kernel argument must be nonnegative")
        inside = s <= 1.0
        if self is Kernel.QUADRATIC:
            return np.where(inside, 1.0 - s * s, 0.0)
        return inside.astype(np.float64)


def kernel_eval(k: Union[Kernel, str], s: float) -> float:
    return float(Kernel(k)(s))


@dataclass(frozen=True)
class SmootherConfig:
    """Kernel, semi-metric and bandwidth rule.

    Exactly one of ``bandwidth`` (a fixed ``h``) and ``h_grid`` (candidates for
    leave-one-out cross-validation) should be set; with neither, a grid of
    ``grid_size`` distance quantiles is built at resolve time.
    ``loo_fitted`` switches the fitted values used by the bias correction and
    the residual variance to leave-one-out fits.
    """

    kernel: Kernel = Kernel.QUADRATIC
    semimetric: SemiMetricSpec = field(default_factory=SemiMetricSpec)
    bandwidth: Optional[float] = None
    h_grid: Optional[tuple] = None
    grid_size: int = 15
    loo_fitted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kernel", Kernel(self.kernel))
        if self.bandwidth is not None:
            if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
                raise InvalidConfig(f"bandwidth must be positive, got {self.bandwidth}")
        if self.h_grid is not None:
            grid = tuple(float(h) for h in self.h_grid)
            if not grid or any(not (np.isfinite(h) and h > 0) for h in grid):
                raise InvalidConfig("cv grid must be nonempty and strictly positive")
            object.__setattr__(self, "h_grid", grid)
        if self.grid_size < 1:
            raise InvalidConfig("grid_size must be >= 1")

    @property
    def is_resolved(self) -> bool:
        return self.bandwidth is not None and self.semimetric.is_fitted

    def resolve(self, ds: FunctionalDataset) -> "SmootherConfig":
        """Fit the semi-metric and pick the bandwidth on ``ds``."""
        spec = self.semimetric if self.semimetric.is_fitted else self.semimetric.fit(ds)
        cfg = replace(self, semimetric=spec)
        if cfg.bandwidth is not None:
            return cfg
        grid = cfg.h_grid or tuple(default_h_grid(ds, spec, cfg.grid_size))
        return replace(cfg, bandwidth=cv_bandwidth(ds, replace(cfg, h_grid=grid)))


@dataclass(frozen=True)
class WeightProfile:
    raw_weights: NDArray[np.float64]
    distances: NDArray[np.float64]

    @property
    def effective_count(self) -> int:
        return int(np.count_nonzero(self.raw_weights > 0))

    @property
    def min_distance(self) -> float:
        return float(self.distances.min()) if self.distances.size else float("inf")


def weighted_mean(k: NDArray[np.float64], y: NDArray[np.float64]) -> float:
    """``sum k y / sum k``, anchored at a supported ``y`` so constants are exact."""
    k = np.asarray(k, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    a = y[np.flatnonzero(k > 0)[0]]
    return float(a + k @ (y - a) / k.sum())


class KernelSmoother:
    """Nadaraya-Watson smoother fitted to a training set.

    Resolves the configuration once (semi-metric fit, bandwidth by CV) and
    caches the train-train kernel matrix, so that many query points can be
    handled cheaply.
    """

    def __init__(self, ds: FunctionalDataset, cfg: SmootherConfig | None = None):
        cfg = cfg or SmootherConfig()
        ds.require_responses()
        if len(ds) < 2:
            raise InvalidArgument("need at least 2 training samples")
        self.ds = ds
        self.cfg = cfg if cfg.is_resolved else cfg.resolve(ds)
        self.h = float(self.cfg.bandwidth)
        self._train_features = self.cfg.semimetric.features(ds.values, ds.grid)
        self._kmat: Optional[NDArray[np.float64]] = None
        self._fitted: dict = {}

    @property
    def y(self) -> NDArray[np.float64]:
        return self.ds.responses

    def distances(self, queries) -> NDArray[np.float64]:
        """Distances from each query curve (rows) to every training curve."""
        vals = _query_values(queries, self.ds)
        feats = self.cfg.semimetric.features(vals, self.ds.grid)
        return pairwise_euclidean(feats, self._train_features)

    def profile(self, x0) -> WeightProfile:
        d = self.distances(x0)[0]
        return WeightProfile(self.cfg.kernel(d / self.h), d)

    def profiles(self, queries) -> list[WeightProfile]:
        d = self.distances(queries)
        k = self.cfg.kernel(d / self.h)
        return [WeightProfile(k[i], d[i]) for i in range(d.shape[0])]

    def estimate(self, x0) -> float:
        prof = self.profile(x0)
        return estimate_from_profile(prof, self.y)

    @property
    def kernel_matrix(self) -> NDArray[np.float64]:
        """``K[i, j] = K(d(X_j, X_i) / h)``; row ``i`` smooths at curve ``i``."""
        if self._kmat is None:
            d = pairwise_euclidean(self._train_features, self._train_features)
            self._kmat = self.cfg.kernel(d / self.h)
        return self._kmat

    def fitted_values(self, loo: Optional[bool] = None,
                      responses: Optional[NDArray[np.float64]] = None):
        """Smoothed values at the training curves.

        Returns ``(values, usable)``; ``usable`` is False where the
        leave-one-out neighborhood is empty (values there are NaN).
        """
        loo = self.cfg.loo_fitted if loo is None else loo
        key = (loo, None if responses is None else responses.tobytes())
        if key not in self._fitted:
            y = self.y if responses is None else np.asarray(responses, dtype=np.float64)
            k = self.kernel_matrix
            if loo:
                k = k.copy()
                np.fill_diagonal(k, 0.0)
            tot = k.sum(axis=1)
            usable = tot > 0
            vals = np.full(len(y), np.nan)
            a = y[0]
            vals[usable] = a + (k[usable] @ (y - a)) / tot[usable]
            self._fitted[key] = (vals, usable)
        return self._fitted[key]


def _query_values(queries, ds: FunctionalDataset) -> NDArray[np.float64]:
    if isinstance(queries, Curve):
        if queries.grid != ds.grid:
            raise GridMismatch("query curve is not on the training grid")
        return queries.values[None, :]
    if isinstance(queries, FunctionalDataset):
        if queries.grid != ds.grid:
            raise GridMismatch("query curves are not on the training grid")
        return queries.values
    return np.atleast_2d(np.asarray(queries, dtype=np.float64))


def estimate_from_profile(prof: WeightProfile, y: NDArray[np.float64]) -> float:
    if prof.effective_count == 0:
        raise EmptyNeighborhood(
            f"no training curve within the bandwidth (closest at {prof.min_distance:.6g})",
            min_distance=prof.min_distance,
        )
    return weighted_mean(prof.raw_weights, y)


def weight_profile(ds: FunctionalDataset, x0: Curve, cfg: SmootherConfig) -> WeightProfile:
    if not cfg.is_resolved:
        cfg = cfg.resolve(ds)
    spec = cfg.semimetric
    d = pairwise_euclidean(spec.features(x0.values, ds.grid),
                           spec.features(ds.values, ds.grid))[0]
    return WeightProfile(cfg.kernel(d / cfg.bandwidth), d)


def nw_estimate(ds: FunctionalDataset, x0: Curve, cfg: SmootherConfig) -> float:
    """Kernel-weighted mean of the responses around ``x0``."""
    return estimate_from_profile(weight_profile(ds, x0, cfg), ds.require_responses())


def _tie_tolerance(y: NDArray[np.float64]) -> float:
    # Absorbs rounding noise in the LOO predictions; real ties are exact.
    eps = np.finfo(float).eps
    spread = float(np.sum((y - y.mean()) ** 2))
    return 1e-12 * spread + y.size * (8 * eps * float(np.abs(y).max())) ** 2


def cv_criterion(dist: NDArray[np.float64], y: NDArray[np.float64], h: float,
                 kernel: Kernel) -> float:
    """Leave-one-out squared error at bandwidth ``h`` from a distance matrix.

    Samples with an empty leave-one-out neighborhood add the sample variance
    of ``y`` instead of a squared error.
    """
    k = kernel(dist / h)
    np.fill_diagonal(k, 0.0)
    tot = k.sum(axis=1)
    ok = tot > 0
    pred = (k[ok] @ y) / tot[ok]
    penalty = float(np.var(y, ddof=1)) if y.size > 1 else 0.0
    return float(np.sum((y[ok] - pred) ** 2) + penalty * np.count_nonzero(~ok))


def cv_bandwidth(ds: FunctionalDataset, cfg: SmootherConfig,
                 threads: int = 1) -> float:
    """Candidate bandwidth minimizing the leave-one-out criterion.

    Ties go to the larger bandwidth.
    """
    if not cfg.h_grid:
        raise InvalidArgument("cv needs a nonempty grid of candidate bandwidths")
    y = ds.require_responses()
    if len(ds) < 3:
        raise InvalidArgument("cv needs at least 3 samples")
    spec = cfg.semimetric if cfg.semimetric.is_fitted else cfg.semimetric.fit(ds)
    feats = spec.features(ds.values, ds.grid)
    dist = pairwise_euclidean(feats, feats)
    grid = cfg.h_grid
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            crit = list(pool.map(lambda h: cv_criterion(dist, y, h, cfg.kernel), grid))
    else:
        crit = [cv_criterion(dist, y, h, cfg.kernel) for h in grid]
    best = min(crit)
    tol = _tie_tolerance(y)
    return max(h for h, c in zip(grid, crit) if c <= best + tol)


def default_h_grid(ds: FunctionalDataset, spec: SemiMetricSpec,
                   count: int = 15) -> list[float]:
    """``count`` quantiles of the positive pairwise distances.

    Probabilities are equally spaced on [0.05, 0.5]; a single candidate sits
    at the midpoint probability 0.275.
    """
    if count < 1:
        raise InvalidArgument("count must be >= 1")
    if len(ds) < 2:
        raise InvalidArgument("need at least 2 curves")
    if not spec.is_fitted:
        spec = spec.fit(ds)
    feats = spec.features(ds.values, ds.grid)
    dist = pairwise_euclidean(feats, feats)
    pooled = dist[np.triu_indices(len(ds), k=1)]
    pooled = pooled[pooled > 0]
    if pooled.size == 0:
        raise DegenerateDistances("all pairwise distances are zero")
    probs = [0.275] if count == 1 else np.linspace(0.05, 0.5, count)
    return [float(h) for h in np.quantile(pooled, probs)]
