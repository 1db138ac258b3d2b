"""Spectral diagnostics of correlation matrices and market-factor filtering.

The leading eigenmode of C(q, s) is the market factor; its squared
expansion coefficients and their Shannon entropy measure how evenly the
assets participate in it.  Regressing each (standardized) series on the
factor projection removes that common component and leaves residual
series from which a filtered matrix C' can be rebuilt.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegeneracyError
from .panel import ReturnPanel
from .rhoq import corr_matrix

__all__ = [
    "EigenSummary",
    "ResidualPanel",
    "eigen_summary",
    "entropy",
    "filter_market_factor",
    "residual_corr",
]

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class EigenSummary:
    """Full descending spectrum plus leading-eigenvector diagnostics."""

    eigenvalues: np.ndarray
    v1: np.ndarray
    v1_squared: np.ndarray
    entropy: float

    @property
    def lambda1(self):
        return float(self.eigenvalues[0])

    def to_json_dict(self, q=None, s=None):
        d = {
            "lambda": [float(x) for x in self.eigenvalues],
            "v1": [float(x) for x in self.v1],
            "entropy": self.entropy,
        }
        if q is not None:
            d["q"] = q
        if s is not None:
            d["s"] = s
        return d


def entropy(v1_squared):
    """Shannon entropy of a probability-like vector, with 0 ln 0 = 0."""
    p = np.asarray(v1_squared, dtype=np.float64)
    if np.any(p < 0):
        raise DataError("entropy input must be non-negative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise DataError(f"entropy input sums to {p.sum()}, expected 1 within 1e-9")
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def eigen_summary(c):
    """Descending eigen-decomposition of a symmetric correlation matrix.

    The leading eigenvector's sign is fixed so its component sum is
    positive.  Accepts a QCorrMatrix or a plain symmetric array.
    """
    values = c.values if hasattr(c, "values") else np.asarray(c, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise DataError("eigen input must be a square matrix")
    if np.abs(values - values.T).max() > SYMMETRY_TOL:
        raise DataError("matrix is not symmetric within 1e-10")
    w, v = np.linalg.eigh(values)
    w = w[::-1]
    v1 = v[:, -1]
    ssum = v1.sum()
    if ssum < 0 or (ssum == 0 and v1[np.argmax(v1 != 0)] < 0):
        v1 = -v1
    v1sq = v1 * v1
    h = entropy(v1sq / v1sq.sum())
    return EigenSummary(eigenvalues=w, v1=v1, v1_squared=v1sq, entropy=h)


@dataclass(frozen=True)
class ResidualPanel:
    """Residual series after removing the market-factor projection.

    Carries the factor series ``factor`` (Z at each sample) and the
    per-asset regression coefficients ``intercepts`` / ``loadings``.
    """

    timestamps: np.ndarray
    assets: tuple
    residuals: np.ndarray
    factor: np.ndarray
    intercepts: np.ndarray
    loadings: np.ndarray

    def as_return_panel(self):
        return ReturnPanel(
            timestamps=self.timestamps, assets=self.assets, returns=self.residuals
        )


def filter_market_factor(panel, v1):
    """Regress each standardized series on the leading-mode projection.

    Each asset's series is standardized over the window (zero mean, unit
    population variance), the factor series is the v1-weighted sum of the
    standardized series, and ordinary least squares per asset yields the
    residuals (orthogonal to the factor by construction).
    """
    v1 = np.asarray(v1, dtype=np.float64)
    if v1.shape != (panel.n_assets,):
        raise DataError(f"eigenvector length {v1.shape} does not match {panel.n_assets} assets")
    r = panel.returns
    mu = r.mean(axis=1, keepdims=True)
    sd = r.std(axis=1, keepdims=True)
    flat = np.nonzero(sd[:, 0] == 0.0)[0]
    if flat.size:
        names = ", ".join(panel.assets[i] for i in flat)
        raise DegeneracyError(f"constant series in window: {names}")
    c = (r - mu) / sd
    z = v1 @ c
    zm = z.mean()
    zv = ((z - zm) ** 2).mean()
    if zv == 0.0:
        raise DegeneracyError("market-factor series has zero variance")
    loadings = ((c - c.mean(axis=1, keepdims=True)) @ (z - zm)) / (zv * z.size)
    intercepts = c.mean(axis=1) - loadings * zm
    resid = c - intercepts[:, None] - loadings[:, None] * z[None, :]
    return ResidualPanel(
        timestamps=panel.timestamps,
        assets=panel.assets,
        residuals=resid,
        factor=z,
        intercepts=intercepts,
        loadings=loadings,
    )


def residual_corr(resid, q, s, cfg=None):
    """Filtered correlation matrix C'(q, s) from residual series."""
    return corr_matrix(resid.as_return_panel(), q, s, cfg)


def write_eigen_jsonl(path, records):
    """One EigenSummary JSON object per line; ``records`` yields dicts."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
