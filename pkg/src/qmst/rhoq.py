"""Amplitude-selective detrended cross-correlation coefficients.

``rho_q`` ratios the signed segment-power averages of a pair; at q = 2 it
reduces to the classic detrended cross-correlation coefficient.  The panel
version assembles the N x N matrix C(q, s) with per-asset univariate
averages computed once, and the derived metric distance matrix D(q, s)
(entries sqrt(2(1 - C)), a metric for q >= 1).
"""

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DataError, DegeneracyError

__all__ = ["QCorrMatrix", "QDistMatrix", "rho_q", "corr_matrix", "corr_matrices", "to_distance"]

CLAMP_TOL = 1e-12


def _clamp_corr(value, context):
    if abs(value) > 1.0 + CLAMP_TOL:
        raise DegeneracyError(f"|rho| = {abs(value)} exceeds 1 + {CLAMP_TOL} for {context}")
    return min(1.0, max(-1.0, value))


def rho_q(fs, q, s):
    """Detrended cross-correlation coefficient of a pair at one (q, s).

    Computed from the pre-root segment-power averages of the pair's
    :class:`~qmst.detrend.FluctuationSet`; clamped to [-1, 1] within a
    1e-12 tolerance, beyond which the value is treated as a defect.
    """
    qi, si = fs.index(q, s)
    num = fs.power_xy[qi, si]
    den_x = fs.power_xx[qi, si]
    den_y = fs.power_yy[qi, si]
    if den_x <= 0.0 or den_y <= 0.0:
        side = "X" if den_x <= 0.0 else "Y"
        raise DegeneracyError(f"degenerate pair: series {side} has zero fluctuation at (q={q}, s={s})")
    if abs(num) == den_x and den_x == den_y:
        # identical series up to sign: the ratio is mathematically +-1
        return 1.0 if num > 0 else -1.0
    value = num / np.sqrt(den_x * den_y)
    return _clamp_corr(float(value), f"(q={q}, s={s})")


@dataclass(frozen=True)
class QCorrMatrix:
    """Symmetric unit-diagonal matrix of pairwise rho_q values at one (q, s)."""

    q: float
    s: int
    assets: tuple
    values: np.ndarray

    def __post_init__(self):
        v = self.values
        n = len(self.assets)
        if v.shape != (n, n):
            raise DataError(f"matrix shape {v.shape} does not match {n} assets")

    def to_json_dict(self):
        return {
            "q": self.q,
            "s": self.s,
            "assets": list(self.assets),
            "values": [[float(x) for x in row] for row in self.values],
        }


@dataclass(frozen=True)
class QDistMatrix:
    """Metric distances sqrt(2(1 - C)) with zero diagonal, entries in [0, 2]."""

    q: float
    s: int
    assets: tuple
    values: np.ndarray


def _panel_power_means(returns, q_values, s, poly_order):
    """Signed power-mean matrices S(q) for all asset pairs at scale s."""
    profiles = np.cumsum(returns - returns.mean(axis=1, keepdims=True), axis=1)
    design, proj = _kernels.segment_design(s, poly_order)
    resid = _kernels.segment_residuals(profiles, design, proj)
    return _kernels.panel_sign_power_means(resid, np.asarray(q_values))


def _corr_from_power_means(s_mat, assets, q, s):
    diag = np.diagonal(s_mat).copy()
    bad = [assets[i] for i in np.nonzero(diag <= 0.0)[0]]
    if bad:
        raise DegeneracyError(
            f"degenerate assets at (q={q}, s={s}) with zero fluctuation: {', '.join(bad)}"
        )
    denom = np.sqrt(diag[:, None] * diag[None, :])
    c = s_mat / denom
    worst = np.abs(c).max()
    if worst > 1.0 + CLAMP_TOL:
        raise DegeneracyError(f"|rho| = {worst} exceeds 1 + {CLAMP_TOL} at (q={q}, s={s})")
    c = np.clip(c, -1.0, 1.0)
    np.fill_diagonal(c, 1.0)
    return QCorrMatrix(q=float(q), s=int(s), assets=tuple(assets), values=c)


def corr_matrices(panel, q_values, s, poly_order=2):
    """C(q, s) for every q in ``q_values`` in one pass over the panel.

    The per-asset univariate averages (the matrix diagonals) are computed
    once and shared by all pairs.
    """
    q_values = tuple(float(q) for q in q_values)
    if any(q <= 0 for q in q_values):
        raise DataError(f"q values must be > 0, got {q_values}")
    if panel.n_assets < 2:
        raise DataError("panel must contain at least 2 assets")
    if s < poly_order + 2:
        raise DataError(f"scale {s} violates s >= m+2 for order {poly_order}")
    if 2 * (panel.n_samples // s) < 4:
        raise DataError(f"scale {s} leaves fewer than 4 segments on a window of {panel.n_samples}")
    s_mats = _panel_power_means(panel.returns, q_values, s, poly_order)
    return [
        _corr_from_power_means(s_mats[qi], panel.assets, q, s)
        for qi, q in enumerate(q_values)
    ]


def corr_matrix(panel, q, s, cfg=None):
    """N x N matrix of pairwise rho_q values for a return panel.

    ``cfg`` (a :class:`~qmst.detrend.DetrendConfig`) supplies the
    polynomial order; only its ``poly_order`` is consulted here.
    """
    poly = cfg.poly_order if cfg is not None else 2
    return corr_matrices(panel, (float(q),), s, poly_order=poly)[0]


def to_distance(c):
    """Elementwise metric transform of a correlation matrix."""
    d = np.sqrt(2.0 * (1.0 - c.values))
    np.fill_diagonal(d, 0.0)
    return QDistMatrix(q=c.q, s=c.s, assets=c.assets, values=d)


def write_matrix(path, mat, delimiter=","):
    """Square tabular text with a header row/column of asset labels."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(delimiter.join(("", *mat.assets)) + "\n")
        for label, row in zip(mat.assets, mat.values):
            fh.write(delimiter.join((label, *(repr(float(x)) for x in row))) + "\n")


def write_matrix_json(path, mat):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mat.to_json_dict(), fh, sort_keys=True)
        fh.write("\n")
