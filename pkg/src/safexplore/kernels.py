"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it imports; otherwise, or when
``SAFEXPLORE_PURE_PYTHON=1`` is set, the numpy fallback is used. Both expose
the same functions with the same semantics.
"""

from __future__ import annotations

import os

from . import _fallback

_core = None
if os.environ.get("SAFEXPLORE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core  # type: ignore[no-redef]
    except ImportError:  # extension not built
        _core = None

BACKEND = "cython" if _core is not None else "python"

hj_max_rate = _fallback.hj_max_rate


def hj_sweep(V, out, lo, step, count, prm, dt, cache=None):
    if _core is not None:
        return _core.hj_sweep(V, out, lo, step, count, prm, dt)
    return _fallback.hj_sweep(V, out, lo, step, count, prm, dt, cache)


def hj_cache(lo, step, count, prm):
    """Precomputed node drifts for the numpy sweep (unused by the compiled one)."""
    if _core is not None:
        return None
    return _fallback.hj_drifts(lo, step, count, prm)


def interp_grad(V, lo, step, count, periodic, pts):
    if _core is not None and V.ndim == 4 and V.flags.c_contiguous:
        return _core.interp_grad4(V, lo, step, count, periodic, pts)
    if _core is not None and V.ndim == 2 and V.flags.c_contiguous:
        return _core.interp_grad2(V, lo, step, count, periodic, pts)
    return _fallback.interp_grad(V, lo, step, count, periodic, pts)


def interp(V, lo, step, count, periodic, pts):
    return _fallback.interp(V, lo, step, count, periodic, pts)


def disc_covered(cx, cy, rho, centers, radii):
    if _core is not None:
        return _core.disc_covered(cx, cy, rho, centers, radii)
    return _fallback.disc_covered(cx, cy, rho, centers, radii)
