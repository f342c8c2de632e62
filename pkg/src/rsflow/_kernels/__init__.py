"""Kernel backend selection.

The compiled extension is preferred; the NumPy fallback is used when the
extension is missing (source checkout without a build) or when the
environment variable ``RSFL_PURE_PY=1`` forces it.  Both backends export
the same functions with identical semantics.
"""
from __future__ import annotations

import os

if os.environ.get("RSFL_PURE_PY", "") == "1":
    from . import pydp as _impl

    HAVE_COMPILED = False
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        HAVE_COMPILED = True
    except ImportError:
        from . import pydp as _impl

        HAVE_COMPILED = False

BACKEND = _impl.BACKEND
monotone_imax = _impl.monotone_imax
monotone_table = _impl.monotone_table
slope_imax = _impl.slope_imax
slope_table = _impl.slope_table
relaxed_reach = _impl.relaxed_reach
lorenz_orbit = _impl.lorenz_orbit
lorenz_orbit_batch = _impl.lorenz_orbit_batch

__all__ = [
    "BACKEND",
    "HAVE_COMPILED",
    "monotone_imax",
    "monotone_table",
    "slope_imax",
    "slope_table",
    "relaxed_reach",
    "lorenz_orbit",
    "lorenz_orbit_batch",
]
