"""Hot numeric kernels.

The numba backend is used when numba imports cleanly, unless the environment
variable ``SOFTENING_DISABLE_NUMBA`` is set to a truthy value, in which case
the pure-numpy reference kernels are used. Both backends share signatures and
take all randomness as input arrays, so results agree to rounding.
"""

import os

from . import _numpy

BACKEND = "numpy"
_impl = _numpy

if os.environ.get("SOFTENING_DISABLE_NUMBA", "").strip().lower() not in ("1", "true", "yes", "on"):
    try:
        from . import _numba as _impl  # noqa: F811

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba missing
        _impl = _numpy


def backends():
    """Map of available backend name to kernel module."""
    out = {"numpy": _numpy}
    try:
        from . import _numba

        out["numba"] = _numba
    except ImportError:  # pragma: no cover
        pass
    return out


snf_path = _impl.snf_path
ou_path = _impl.ou_path
ensemble_advance = _impl.ensemble_advance
ensemble_refill = _impl.ensemble_refill
ensemble_accumulate = _impl.ensemble_accumulate
kde_eval = _impl.kde_eval
smooth_uniform = _impl.smooth_uniform
fp_log_density = _impl.fp_log_density
isj_fixed_point = _impl.isj_fixed_point

__all__ = [
    "BACKEND",
    "backends",
    "snf_path",
    "ou_path",
    "ensemble_advance",
    "ensemble_refill",
    "ensemble_accumulate",
    "kde_eval",
    "smooth_uniform",
    "fp_log_density",
    "isj_fixed_point",
]
