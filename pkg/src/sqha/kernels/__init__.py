"""Hot loops behind a backend switch.

Set ``SQHA_DISABLE_NUMBA=1`` to force the pure-numpy implementations; the
numba ones are used otherwise when numba imports cleanly.
"""
import os

from . import _numpy

BACKEND = "numpy"
_impl = _numpy

if os.environ.get("SQHA_DISABLE_NUMBA", "").strip().lower() not in ("1", "true", "yes", "on"):
    try:
        from . import _numba as _impl  # noqa: F811
        BACKEND = "numba"
    except ImportError:  # pragma: no cover
        _impl = _numpy

band_factor = _impl.band_factor
band_solve = _impl.band_solve
band_matvec = _impl.band_matvec
convolve_valid = _impl.convolve_valid
cubic_interp = _impl.cubic_interp

__all__ = ["BACKEND", "band_factor", "band_solve", "band_matvec", "convolve_valid", "cubic_interp"]
