"""Kernel regression with functional covariates and likelihood-based intervals.

Fits the functional Nadaraya-Watson estimator and builds point-wise
confidence intervals for the regression function by empirical likelihood
(plain or bias-corrected), Euclidean likelihood and normal approximation.
"""

from ._backend import BACKEND
from .curves import *  # noqa: F401,F403
from .curves import __all__ as _curves_all
from .datafiles import *  # noqa: F401,F403
from .datafiles import __all__ as _data_all
from .empirical_likelihood import *  # noqa: F401,F403
from .empirical_likelihood import __all__ as _el_all
from .errors import *  # noqa: F401,F403
from .errors import __all__ as _errors_all
from .intervals import METHODS, STUDY_METHODS, IntervalBuilder, parse_methods
from .kernel_smoothing import *  # noqa: F401,F403
from .kernel_smoothing import __all__ as _ks_all
from .normal_intervals import *  # noqa: F401,F403
from .normal_intervals import __all__ as _normal_all
from .plm import *  # noqa: F401,F403
from .plm import __all__ as _plm_all
from .simulation import *  # noqa: F401,F403
from .simulation import __all__ as _sim_all

__version__ = "0.1.0"

__all__ = (
    ["BACKEND", "METHODS", "STUDY_METHODS", "IntervalBuilder", "parse_methods"]
    + _curves_all + _data_all + _el_all + _errors_all + _ks_all + _normal_all
    + _plm_all + _sim_all
)
