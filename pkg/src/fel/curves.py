"""Curves on a shared grid and the semi-metrics used to compare them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    GridMismatch,
    GridTooShort,
    InvalidArgument,
    InvalidComponents,
    SpecNotFitted,
)

__all__ = [
    "Grid",
    "Curve",
    "FunctionalDataset",
    "SemiMetricSpec",
    "quadrature_weights",
    "estimate_derivative",
    "derivative_matrix",
    "semimetric_distance",
    "fit_pca_semimetric",
]


def _frozen(a: ArrayLike, ndim: int) -> NDArray[np.float64]:
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != ndim:
        raise InvalidArgument(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing abscissae shared by every curve of a dataset."""

    points: NDArray[np.float64]

    def __post_init__(self):
        pts = _frozen(self.points, 1)
        if pts.size < 3:
            raise GridTooShort(f"a grid needs at least 3 points, got {pts.size}")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgument("grid points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise InvalidArgument("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and np.array_equal(self.points, other.points)

    def __hash__(self) -> int:
        return hash(self.points.tobytes())

    @classmethod
    def uniform(cls, start: float, stop: float, num: int) -> "Grid":
        return cls(np.linspace(start, stop, num))

    @property
    def weights(self) -> NDArray[np.float64]:
        return quadrature_weights(self.points)


@dataclass(frozen=True, eq=False)
class Curve:
    grid: Grid
    values: NDArray[np.float64]

    def __post_init__(self):
        vals = _frozen(self.values, 1)
        if vals.size != len(self.grid):
            raise GridMismatch(
                f"curve has {vals.size} values but the grid has {len(self.grid)} points"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidArgument("curve values must be finite")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class FunctionalDataset:
    """``n`` curves on one grid, optional responses and linear covariates.

    Curves are stored row-wise in ``values`` (shape ``(n, m)``). ``responses``
    may be ``None`` for query sets; ``linear_covariates`` has shape ``(n, p)``.
    """

    grid: Grid
    values: NDArray[np.float64]
    responses: Optional[NDArray[np.float64]] = None
    linear_covariates: Optional[NDArray[np.float64]] = None
    ids: Optional[tuple] = None

    def __post_init__(self):
        vals = _frozen(self.values, 2)
        n, m = vals.shape
        if m != len(self.grid):
            raise GridMismatch(f"curves have {m} values but the grid has {len(self.grid)}")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgument("curve values must be finite")
        object.__setattr__(self, "values", vals)
        if self.responses is not None:
            y = _frozen(self.responses, 1)
            if y.size != n:
                raise InvalidArgument(f"{y.size} responses for {n} curves")
            if not np.all(np.isfinite(y)):
                raise InvalidArgument("responses must be finite")
            object.__setattr__(self, "responses", y)
        if self.linear_covariates is not None:
            z = np.array(self.linear_covariates, dtype=np.float64)
            if z.ndim == 1:
                z = z[:, None]
            z = _frozen(z, 2)
            if z.shape[0] != n:
                raise InvalidArgument(f"{z.shape[0]} covariate rows for {n} curves")
            if not np.all(np.isfinite(z)):
                raise InvalidArgument("linear covariates must be finite")
            object.__setattr__(self, "linear_covariates", z)
        if self.ids is not None:
            ids = tuple(str(i) for i in self.ids)
            if len(ids) != n:
                raise InvalidArgument(f"{len(ids)} ids for {n} curves")
            object.__setattr__(self, "ids", ids)

    @classmethod
    def from_curves(cls, curves: Sequence[Curve], responses=None,
                    linear_covariates=None) -> "FunctionalDataset":
        if not curves:
            raise InvalidArgument("at least one curve is required")
        grid = curves[0].grid
        if any(c.grid != grid for c in curves):
            raise GridMismatch("all curves must share one grid")
        return cls(grid, np.stack([c.values for c in curves]), responses,
                   linear_covariates)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n_linear(self) -> int:
        if self.linear_covariates is None:
            return 0
        return self.linear_covariates.shape[1]

    def curve(self, i: int) -> Curve:
        return Curve(self.grid, self.values[i])

    def require_responses(self) -> NDArray[np.float64]:
        if self.responses is None:
            raise InvalidArgument("this operation needs responses")
        return self.responses

    def with_responses(self, responses) -> "FunctionalDataset":
        return FunctionalDataset(self.grid, self.values, responses,
                                 self.linear_covariates, self.ids)

    def subset(self, index) -> "FunctionalDataset":
        index = np.asarray(index)
        return FunctionalDataset(
            self.grid,
            self.values[index],
            None if self.responses is None else self.responses[index],
            None if self.linear_covariates is None else self.linear_covariates[index],
            None if self.ids is None else tuple(np.asarray(self.ids, dtype=object)[index]),
        )


def quadrature_weights(grid) -> NDArray[np.float64]:
    """Composite trapezoid weights; they sum to ``t_m - t_1``.

    Accepts a :class:`Grid` or any increasing sequence of at least two points.
    """
    t = grid.points if isinstance(grid, Grid) else np.asarray(grid, dtype=np.float64)
    if t.ndim != 1 or t.size < 2:
        raise GridTooShort("quadrature needs at least 2 points")
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise InvalidArgument("grid points must be strictly increasing")
    w = np.zeros_like(t)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


def derivative_matrix(values: NDArray[np.float64], grid: Grid,
                      order: int) -> NDArray[np.float64]:
    """Differentiate each row of ``values`` ``order`` times along the grid.

    Central differences inside, second-order one-sided differences at the
    two ends, applied repeatedly.
    """
    if order < 0:
        raise InvalidArgument("derivative order must be >= 0")
    if order and len(grid) < order + 2:
        raise GridTooShort(
            f"order-{order} derivative needs at least {order + 2} grid points"
        )
    out = np.asarray(values, dtype=np.float64)
    for _ in range(order):
        out = np.gradient(out, grid.points, axis=-1, edge_order=2)
    return out


def estimate_derivative(c: Curve, order: int = 1) -> Curve:
    if order < 1:
        raise InvalidArgument("derivative order must be >= 1")
    return Curve(c.grid, derivative_matrix(c.values, c.grid, order))


@dataclass(frozen=True, eq=False)
class SemiMetricSpec:
    """Which semi-metric to use, plus fitted state for the PCA variant.

    ``kind="deriv_l2"`` compares ``order``-th derivatives in quadrature-weighted
    L2. ``kind="pca"`` compares the first ``q`` principal-component scores;
    it carries ``mean``, ``components`` (rows orthonormal under the quadrature
    inner product) and ``eigenvalues`` once fitted.
    """

    kind: Literal["deriv_l2", "pca"] = "deriv_l2"
    order: int = 1
    q: int = 0
    grid: Optional[Grid] = None
    mean: Optional[NDArray[np.float64]] = field(default=None, repr=False)
    components: Optional[NDArray[np.float64]] = field(default=None, repr=False)
    eigenvalues: Optional[NDArray[np.float64]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == "deriv_l2":
            if int(self.order) != self.order or self.order < 0:
                raise InvalidArgument("derivative order must be a nonnegative integer")
        elif self.kind == "pca":
            if int(self.q) != self.q or self.q < 1:
                raise InvalidComponents("pca needs q >= 1 components")
        else:
            raise InvalidArgument(f"unknown semi-metric kind {self.kind!r}")

    @classmethod
    def deriv(cls, order: int = 1) -> "SemiMetricSpec":
        return cls("deriv_l2", order=order)

    @classmethod
    def pca(cls, q: int) -> "SemiMetricSpec":
        return cls("pca", q=q)

    @classmethod
    def parse(cls, text: str) -> "SemiMetricSpec":
        """Parse ``deriv:k`` or ``pca:q``."""
        kind, _, arg = text.partition(":")
        try:
            num = int(arg)
        except ValueError:
            raise InvalidArgument(f"bad semi-metric {text!r}; use deriv:k or pca:q") from None
        if kind == "deriv":
            return cls.deriv(num)
        if kind == "pca":
            return cls.pca(num)
        raise InvalidArgument(f"bad semi-metric {text!r}; use deriv:k or pca:q")

    def describe(self) -> str:
        return f"deriv:{self.order}" if self.kind == "deriv_l2" else f"pca:{self.q}"

    @property
    def is_fitted(self) -> bool:
        return self.kind == "deriv_l2" or self.components is not None

    def fit(self, ds: FunctionalDataset) -> "SemiMetricSpec":
        """Return a spec ready for use on ``ds``'s grid."""
        if self.kind == "pca":
            return fit_pca_semimetric(ds, self.q)
        return self

    def features(self, values: NDArray[np.float64], grid: Grid) -> NDArray[np.float64]:
        """Map curves (rows) to vectors whose Euclidean distance is the semi-metric."""
        values = np.atleast_2d(values)
        if self.kind == "deriv_l2":
            deriv = derivative_matrix(values, grid, self.order)
            return deriv * np.sqrt(grid.weights)
        if self.components is None:
            raise SpecNotFitted("the pca semi-metric must be fitted first")
        if grid != self.grid:
            raise GridMismatch("curves are not on the grid the pca semi-metric was fitted on")
        return ((values - self.mean) * grid.weights) @ self.components.T

    def pairwise(self, a: NDArray[np.float64], b: NDArray[np.float64],
                 grid: Grid) -> NDArray[np.float64]:
        """Distance matrix between the rows of ``a`` and the rows of ``b``."""
        return pairwise_euclidean(self.features(a, grid), self.features(b, grid))


def pairwise_euclidean(fa: NDArray[np.float64], fb: NDArray[np.float64],
                       chunk: int = 1 << 22) -> NDArray[np.float64]:
    # Direct differences (not the Gram expansion) keep d(a, a) == 0 and
    # d(a, b) == d(b, a) bit-for-bit.
    out = np.empty((fa.shape[0], fb.shape[0]))
    rows = max(1, chunk // max(1, fb.size))
    for start in range(0, fa.shape[0], rows):
        diff = fa[start:start + rows, None, :] - fb[None, :, :]
        out[start:start + rows] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return out


def semimetric_distance(spec: SemiMetricSpec, a: Curve, b: Curve) -> float:
    if a.grid != b.grid:
        raise GridMismatch("curves live on different grids")
    return float(spec.pairwise(a.values, b.values, a.grid)[0, 0])


def fit_pca_semimetric(ds: FunctionalDataset, q: int) -> SemiMetricSpec:
    """Fit the PCA semi-metric with ``q`` components on ``ds``.

    The covariance operator is discretized with trapezoid weights ``W`` and
    diagonalized in the symmetric form ``W^1/2 C W^1/2``; eigenvectors are
    mapped back so that they are orthonormal under ``<f, g> = sum W f g``.
    """
    n, m = ds.values.shape
    if int(q) != q or q < 1 or q > min(n, m):
        raise InvalidComponents(f"q must lie in [1, {min(n, m)}], got {q}")
    w = ds.grid.weights
    sw = np.sqrt(w)
    mean = ds.values.mean(axis=0)
    centered = (ds.values - mean) * sw
    cov = centered.T @ centered / n
    cov = (cov + cov.T) / 2
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")[:q]
    evals = np.clip(evals[order], 0.0, None)
    psi = evecs[:, order].T
    # sign convention: first non-negligible coordinate positive
    for row in psi:
        big = np.flatnonzero(np.abs(row) > 1e-12 * np.abs(row).max())
        if big.size and row[big[0]] < 0:
            row *= -1
    components = psi / sw
    mean.setflags(write=False)
    components.setflags(write=False)
    evals.setflags(write=False)
    return SemiMetricSpec("pca", q=q, grid=ds.grid, mean=mean,
                          components=components, eigenvalues=evals)
