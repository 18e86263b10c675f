"""Selects the compiled inner solver, falling back to pure Python.

Set ``FEL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _el_fallback

if os.environ.get("FEL_PURE_PYTHON", "").strip() not in ("", "0"):
    core = _el_fallback
    BACKEND = "python"
else:
    try:
        from . import _el_core as core

        BACKEND = "compiled"
    except ImportError:
        core = _el_fallback
        BACKEND = "python"

IMPLEMENTATIONS = {"python": _el_fallback}
if BACKEND == "compiled":
    IMPLEMENTATIONS["compiled"] = core
else:
    try:
        from . import _el_core as _compiled

        IMPLEMENTATIONS["compiled"] = _compiled
    except ImportError:
        pass
