"""Multiscale detrended (cross-)fluctuation analysis.

Profiles, segment-wise polynomial detrending, q-order fluctuation
functions, and log-log scaling exponents.  The segment math runs on the
kernels in :mod:`qmst._kernels`.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DataError, DegeneracyError

__all__ = [
    "DetrendConfig",
    "SegmentCovariances",
    "FluctuationSet",
    "ScalingExponents",
    "profile",
    "default_scales",
    "segment_covariances",
    "fluctuation_functions",
    "estimate_exponents",
    "pair_pipeline",
    "write_fluctuations",
]


def default_scales(length, poly_order=2, count=20):
    """Log-spaced integer scale grid from max(10, m+2) up to length // 5.

    About ``count`` distinct values, at least 10 segments at the largest
    scale.
    """
    lo = max(10, poly_order + 2)
    hi = length // 5
    if hi < lo:
        raise DataError(f"series length {length} too short for a scale grid (need >= {5 * lo})")
    grid = np.unique(np.geomspace(lo, hi, count).round().astype(int))
    return tuple(int(s) for s in grid)


@dataclass(frozen=True)
class DetrendConfig:
    """Detrending settings: polynomial order, q grid, scale grid."""

    q_values: tuple = (1.0, 4.0)
    scales: tuple = (10,)
    poly_order: int = 2

    def __post_init__(self):
        q = tuple(float(v) for v in self.q_values)
        s = tuple(int(v) for v in self.scales)
        object.__setattr__(self, "q_values", q)
        object.__setattr__(self, "scales", s)
        if not q:
            raise DataError("at least one q value required")
        if any(v <= 0 for v in q):
            raise DataError(f"q values must be > 0, got {q}")
        if not s:
            raise DataError("at least one scale required")
        if any(b <= a for a, b in zip(s, s[1:])):
            raise DataError(f"scales must be strictly increasing, got {s}")
        if not 1 <= self.poly_order <= 5:
            raise DataError(f"polynomial order must be in 1..5, got {self.poly_order}")
        if s[0] < self.poly_order + 2:
            raise DataError(
                f"smallest scale {s[0]} violates s >= m+2 for order {self.poly_order}"
            )

    def validate_length(self, length):
        """Check that every scale admits at least 4 segments of ``length``."""
        for s in self.scales:
            if 2 * (length // s) < 4:
                raise DataError(
                    f"scale {s} leaves fewer than 4 segments on a series of length {length}"
                )


def profile(x, subtract_mean=True):
    """Cumulative sum of a (mean-subtracted) series.

    Mean subtraction before integration is the standard convention and the
    default; pass ``subtract_mean=False`` for the raw running sum.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise DataError("profile input must be a non-empty 1-D series")
    if subtract_mean:
        x = x - x.mean()
    return np.cumsum(x)


@dataclass(frozen=True)
class SegmentCovariances:
    """Per-segment detrended covariances at one scale.

    ``values`` has length 2*M with M = T' // s: segments counted from the
    series start, then from its end.  Signed for a pair, non-negative when
    the two profiles coincide.
    """

    scale: int
    values: np.ndarray

    @property
    def n_segments(self):
        return len(self.values)


def segment_covariances(xp, yp, scale, poly_order):
    """Detrend both profiles per segment and return the covariance sequence.

    Each segment of length ``scale`` gets an independent order-``poly_order``
    least-squares polynomial fit; the covariance is the product mean of the
    two residual series over the in-segment index.
    """
    xp = np.asarray(xp, dtype=np.float64)
    yp = np.asarray(yp, dtype=np.float64)
    if xp.shape != yp.shape or xp.ndim != 1:
        raise DataError("profiles must be 1-D and of equal length")
    t = xp.size
    if scale > t:
        raise DataError(f"scale {scale} exceeds series length {t}")
    if scale < poly_order + 2:
        raise DataError(f"scale {scale} violates s >= m+2 for order {poly_order}")
    design, proj = _kernels.segment_design(scale, poly_order)
    resid = _kernels.segment_residuals(np.stack([xp, yp]), design, proj)
    f2 = _kernels.pair_f2(resid[0], resid[1])
    return SegmentCovariances(scale=scale, values=f2)


def _signed_root(s_val, q):
    # outer 1/q power of a signed average, kept real: sign(S) |S|^(1/q)
    return np.sign(s_val) * np.abs(s_val) ** (1.0 / q)


def _fluct_values(f2_xy, f2_xx, f2_yy, q):
    """Signed power means S and the rooted fluctuation values F at one (q, s)."""
    s_xy = np.mean(np.sign(f2_xy) * np.abs(f2_xy) ** (0.5 * q))
    s_xx = np.mean(f2_xx ** (0.5 * q))
    s_yy = np.mean(f2_yy ** (0.5 * q))
    return (s_xy, s_xx, s_yy), (_signed_root(s_xy, q), s_xx ** (1.0 / q), s_yy ** (1.0 / q))


@dataclass(frozen=True)
class FluctuationSet:
    """Fluctuation functions of one pair over a (q, scale) grid.

    ``f_xy`` is signed; ``f_xx`` and ``f_yy`` are non-negative.  The
    ``power_*`` arrays hold the segment averages before the outer 1/q root
    (the quantities ratio-ed by :func:`qmst.rhoq.rho_q`).
    """

    q_values: tuple
    scales: tuple
    f_xy: np.ndarray
    f_xx: np.ndarray
    f_yy: np.ndarray
    power_xy: np.ndarray = field(repr=False)
    power_xx: np.ndarray = field(repr=False)
    power_yy: np.ndarray = field(repr=False)

    def index(self, q, s):
        try:
            qi = self.q_values.index(float(q))
            si = self.scales.index(int(s))
        except ValueError:
            raise KeyError(f"(q={q}, s={s}) not present in this fluctuation set") from None
        return qi, si

    def is_degenerate(self, q, s):
        """True when a univariate average vanished at this (q, s)."""
        qi, si = self.index(q, s)
        return self.power_xx[qi, si] == 0.0 or self.power_yy[qi, si] == 0.0


def fluctuation_functions(cov_xy, cov_xx, cov_yy, q_values):
    """q-order fluctuation functions from segment covariance sequences.

    The bivariate value keeps the sign of the covariance average; the
    univariate ones are plain power means.  All sequences must come from
    the same scale.  An all-zero variance sequence yields F = 0, flagged
    via :meth:`FluctuationSet.is_degenerate`.
    """
    if not (cov_xy.scale == cov_xx.scale == cov_yy.scale):
        raise DataError("covariance sequences come from different scales")
    n = cov_xy.n_segments
    if cov_xx.n_segments != n or cov_yy.n_segments != n:
        raise DataError("covariance sequences have different segment counts")
    q_values = tuple(float(q) for q in q_values)
    if any(q <= 0 for q in q_values):
        raise DataError(f"q values must be > 0, got {q_values}")
    nq = len(q_values)
    shape = (nq, 1)
    power = [np.empty(shape) for _ in range(3)]
    fluct = [np.empty(shape) for _ in range(3)]
    for qi, q in enumerate(q_values):
        svals, fvals = _fluct_values(cov_xy.values, cov_xx.values, cov_yy.values, q)
        for a, sv, fv in zip(range(3), svals, fvals):
            power[a][qi, 0] = sv
            fluct[a][qi, 0] = fv
    return FluctuationSet(
        q_values=q_values,
        scales=(cov_xy.scale,),
        f_xy=fluct[0],
        f_xx=fluct[1],
        f_yy=fluct[2],
        power_xy=power[0],
        power_xx=power[1],
        power_yy=power[2],
    )


def pair_pipeline(x, y, cfg):
    """Full profile -> detrend -> fluctuation chain for one pair.

    Returns a :class:`FluctuationSet` over every (q, s) in ``cfg``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("pair series must be 1-D and of equal length")
    cfg.validate_length(x.size)
    xp = profile(x)
    yp = profile(y)
    nq, ns = len(cfg.q_values), len(cfg.scales)
    power = [np.empty((nq, ns)) for _ in range(3)]
    fluct = [np.empty((nq, ns)) for _ in range(3)]
    stacked = np.stack([xp, yp])
    for si, s in enumerate(cfg.scales):
        design, proj = _kernels.segment_design(s, cfg.poly_order)
        resid = _kernels.segment_residuals(stacked, design, proj)
        f2_xy = _kernels.pair_f2(resid[0], resid[1])
        f2_xx = _kernels.pair_f2(resid[0], resid[0])
        f2_yy = _kernels.pair_f2(resid[1], resid[1])
        for qi, q in enumerate(cfg.q_values):
            svals, fvals = _fluct_values(f2_xy, f2_xx, f2_yy, q)
            for a in range(3):
                power[a][qi, si] = svals[a]
                fluct[a][qi, si] = fvals[a]
    return FluctuationSet(
        q_values=cfg.q_values,
        scales=cfg.scales,
        f_xy=fluct[0],
        f_xx=fluct[1],
        f_yy=fluct[2],
        power_xy=power[0],
        power_xx=power[1],
        power_yy=power[2],
    )


@dataclass(frozen=True)
class ScalingExponents:
    """Log-log slopes of the fluctuation functions over a scale range.

    ``h_x``/``h_y`` are the univariate generalized Hurst exponents,
    ``lambda_xy`` the bivariate scaling exponent; NaN marks a q at which
    the fitted quantity was not strictly positive across the fit range
    (no scaling reported).  ``r2_*`` are the matching coefficients of
    determination.
    """

    q_values: tuple
    fit_range: tuple
    h_x: np.ndarray
    h_y: np.ndarray
    lambda_xy: np.ndarray
    r2_x: np.ndarray
    r2_y: np.ndarray
    r2_xy: np.ndarray


def _loglog_slope(scales, values):
    ls = np.log(scales)
    lv = np.log(values)
    slope, intercept = np.polyfit(ls, lv, 1)
    pred = slope * ls + intercept
    ss_res = np.sum((lv - pred) ** 2)
    ss_tot = np.sum((lv - lv.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, r2


def estimate_exponents(fs, fit_range=None):
    """OLS slopes of log F versus log s per q, within ``fit_range``.

    ``fit_range`` is an inclusive (s_min, s_max) pair; default spans all
    scales.  At least 3 scales must fall inside.  A quantity with any
    non-positive value in range is reported as NaN for that q.
    """
    scales = np.asarray(fs.scales, dtype=np.float64)
    if fit_range is None:
        fit_range = (fs.scales[0], fs.scales[-1])
    s_min, s_max = fit_range
    mask = (scales >= s_min) & (scales <= s_max)
    if mask.sum() < 3:
        raise DataError(f"fit range {fit_range} covers fewer than 3 scales")
    sel = scales[mask]
    nq = len(fs.q_values)
    h_x = np.full(nq, np.nan)
    h_y = np.full(nq, np.nan)
    lam = np.full(nq, np.nan)
    r2_x = np.full(nq, np.nan)
    r2_y = np.full(nq, np.nan)
    r2_xy = np.full(nq, np.nan)
    for qi in range(nq):
        for vals, slot, r2slot in (
            (fs.f_xx[qi, mask], h_x, r2_x),
            (fs.f_yy[qi, mask], h_y, r2_y),
            (fs.f_xy[qi, mask], lam, r2_xy),
        ):
            if np.all(vals > 0):
                slot[qi], r2slot[qi] = _loglog_slope(sel, vals)
    return ScalingExponents(
        q_values=fs.q_values,
        fit_range=(int(s_min), int(s_max)),
        h_x=h_x,
        h_y=h_y,
        lambda_xy=lam,
        r2_x=r2_x,
        r2_y=r2_y,
        r2_xy=r2_xy,
    )


def write_fluctuations(path, fs, pair_label="X:Y", delimiter=","):
    """Write a fluctuation set as tabular text (pair, q, s, Fxy, Fxx, Fyy)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(delimiter.join(("pair", "q", "s", "Fxy", "Fxx", "Fyy")) + "\n")
        for qi, q in enumerate(fs.q_values):
            for si, s in enumerate(fs.scales):
                row = (
                    pair_label,
                    repr(q),
                    str(s),
                    repr(float(fs.f_xy[qi, si])),
                    repr(float(fs.f_xx[qi, si])),
                    repr(float(fs.f_yy[qi, si])),
                )
                fh.write(delimiter.join(row) + "\n")
