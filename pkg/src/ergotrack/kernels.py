"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``ERGOTRACK_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("ERGOTRACK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

rotation_mismatch_counts = _impl.rotation_mismatch_counts
rotation_mismatch_counts_exact = _impl.rotation_mismatch_counts_exact
sft_min_cost_path = _impl.sft_min_cost_path


def backends():
    """Return the available kernel modules keyed by name."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
