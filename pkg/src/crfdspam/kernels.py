"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise, or when
``CRFDSPAM_PURE_PYTHON`` is set to a non-empty value other than ``0``, the
numpy fallback is used. ``BACKEND`` names the active one.
"""

import os

from . import _pykernels

_force_py = os.environ.get("CRFDSPAM_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_py:
        raise ImportError("pure-python backend forced")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

best_split = _impl.best_split
apply_tree = _impl.apply_tree
kneighbors = _impl.kneighbors


def available_backends() -> dict:
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
