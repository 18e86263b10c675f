"""One entry point for every interval method over a fitted smoother."""

from __future__ import annotations

from typing import Iterable, Sequence

from .empirical_likelihood import IntervalResult, corrected_responses, profile_interval
from .errors import EmptyNeighborhood, FELError, InvalidArgument
from .kernel_smoothing import KernelSmoother, WeightProfile
from .normal_intervals import normal_interval_from_profile, smoother_residual_variance

METHODS = ("el", "el_corrected", "euclidean", "normal", "normal_corrected")
STUDY_METHODS = ("el", "normal", "el_corrected", "normal_corrected")


def parse_methods(text: str | Iterable[str]) -> tuple[str, ...]:
    names = text.split(",") if isinstance(text, str) else list(text)
    names = [n.strip() for n in names if n.strip()]
    unknown = [n for n in names if n not in METHODS]
    if unknown or not names:
        raise InvalidArgument(f"unknown methods {unknown}; choose from {', '.join(METHODS)}")
    return tuple(dict.fromkeys(names))


class IntervalBuilder:
    """Builds intervals at query curves for a fixed training fit.

    ``sigma2_loo`` selects leave-one-out residuals for the normal intervals'
    noise variance.
    """

    def __init__(self, smoother: KernelSmoother, alpha: float = 0.05,
                 sigma2_loo: bool = True):
        if not 0.0 < alpha < 1.0:
            raise InvalidArgument(f"alpha must lie in (0, 1), got {alpha}")
        self.smoother = smoother
        self.alpha = alpha
        self.sigma2_loo = sigma2_loo
        self._sigma2 = None

    @property
    def sigma2(self):
        if self._sigma2 is None:
            self._sigma2 = smoother_residual_variance(self.smoother, loo=self.sigma2_loo)
        return self._sigma2

    def build(self, prof: WeightProfile, method: str) -> IntervalResult:
        sm = self.smoother
        if prof.effective_count == 0:
            raise EmptyNeighborhood(
                f"no training curve within the bandwidth (closest at {prof.min_distance:.6g})",
                min_distance=prof.min_distance,
            )
        if method == "el":
            res = profile_interval(prof.raw_weights, sm.y, self.alpha, "el", method)
        elif method == "el_corrected":
            v = corrected_responses(sm, prof)
            res = profile_interval(prof.raw_weights, v, self.alpha, "el", method)
        elif method == "euclidean":
            res = profile_interval(prof.raw_weights, sm.y, self.alpha, "euclidean", method)
        elif method in ("normal", "normal_corrected"):
            return normal_interval_from_profile(sm, prof, self.sigma2.value, self.alpha,
                                                corrected=method == "normal_corrected")
        else:
            raise InvalidArgument(f"unknown method {method!r}")
        res.diagnostics["bandwidth"] = sm.h
        return res

    def build_all(self, queries, methods: Sequence[str]) -> list[dict]:
        """For each query, map method -> IntervalResult or the FELError raised."""
        out = []
        for prof in self.smoother.profiles(queries):
            row = {}
            for m in methods:
                try:
                    row[m] = self.build(prof, m)
                except FELError as exc:
                    row[m] = exc
            out.append(row)
        return out
