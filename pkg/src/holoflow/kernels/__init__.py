"""Hot-kernel backend selection.

The compiled Cython core is used when it imports cleanly; otherwise the
pure-numpy fallback takes over.  Override with HOLOFLOW_BACKEND=compiled
(error if missing) or HOLOFLOW_BACKEND=python.
"""

import importlib
import os

from . import fallback

_requested = os.environ.get("HOLOFLOW_BACKEND", "auto")
if _requested not in ("auto", "compiled", "python"):
    raise RuntimeError(
        f"HOLOFLOW_BACKEND must be auto|compiled|python, got {_requested!r}")

compiled = None
if _requested in ("auto", "compiled"):
    try:
        compiled = importlib.import_module("holoflow.kernels._core")
    except ImportError:
        if _requested == "compiled":
            raise RuntimeError(
                "HOLOFLOW_BACKEND=compiled but holoflow.kernels._core is not "
                "built; run `pip install -e . --no-build-isolation` with "
                "Cython available") from None

BACKEND = "compiled" if compiled is not None else "python"
_active = compiled if compiled is not None else fallback

su2_exp = _active.su2_exp
transport = _active.transport
thomas = _active.thomas

__all__ = ["BACKEND", "su2_exp", "transport", "thomas", "fallback", "compiled"]
