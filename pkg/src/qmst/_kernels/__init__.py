"""Hot numeric kernels with a compiled core and a NumPy fallback.

The compiled extension (``qmst._kernels._core``, Cython) is preferred when
importable; otherwise the pure NumPy implementation is used.  Set
``QMST_KERNEL=python`` to force the fallback or ``QMST_KERNEL=cython`` to
require the extension.  ``BACKEND`` reports which one is active.
"""

import os

import numpy as np

_requested = os.environ.get("QMST_KERNEL", "").strip().lower()
if _requested not in ("", "cython", "c", "python", "numpy"):
    raise RuntimeError(f"QMST_KERNEL must be 'cython' or 'python', got {_requested!r}")

if _requested in ("python", "numpy"):
    from . import _fallback as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        if _requested in ("cython", "c"):
            raise
        from . import _fallback as _impl

        BACKEND = "python"


def segment_design(s, poly_order):
    """Design matrix and least-squares projector for in-segment fits.

    The abscissa is the in-segment index recentered to the segment midpoint
    and scaled to [-1, 1], which keeps the Vandermonde system well
    conditioned up to order 5.  Returns ``(design, proj)`` with shapes
    (s, m+1) and (m+1, s); both backends consume these unchanged.
    """
    if s < poly_order + 2:
        raise ValueError(f"scale {s} too short for polynomial order {poly_order}")
    k = np.arange(1.0, s + 1.0)
    t = (2.0 * k - (s + 1.0)) / (s - 1.0)
    design = np.vander(t, poly_order + 1, increasing=True)
    proj = np.linalg.pinv(design)
    return design, np.ascontiguousarray(proj)


def _c64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def segment_residuals(profiles, design, proj):
    """Detrended residuals of all forward and backward segments.

    ``profiles`` is (B, T); the segment length is ``design.shape[0]``.
    Output is (B, 2M, s) with M = T // s; the first M rows per series are
    the segments counted from the start, the last M those counted from the
    end.
    """
    profiles = _c64(profiles)
    if profiles.ndim != 2:
        raise ValueError("profiles must be 2-D (series, time)")
    s = design.shape[0]
    if profiles.shape[1] < s:
        raise ValueError(f"series length {profiles.shape[1]} shorter than scale {s}")
    return _impl.segment_residuals(profiles, _c64(design), _c64(proj))


def pair_f2(rx, ry):
    """Signed per-segment covariance sequence of two residual stacks."""
    rx = _c64(rx)
    ry = _c64(ry)
    if rx.shape != ry.shape:
        raise ValueError("residual stacks must have identical shapes")
    return _impl.pair_f2(rx, ry)


def panel_sign_power_means(resid, q_values):
    """All-pairs averages of sign(f2)|f2|^(q/2) over segments.

    Returns (nq, N, N); exactly symmetric, diagonal non-negative.
    """
    resid = _c64(resid)
    q = _c64(np.atleast_1d(q_values))
    if np.any(q <= 0):
        raise ValueError("q values must be positive")
    return _impl.panel_sign_power_means(resid, q)
