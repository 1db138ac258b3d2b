"""Synthetic series and panels with known ground truth.

All generators are deterministic per (parameters, seed).  Randomness comes
from NumPy's PCG64 stream; Gaussian variates are produced by the inverse
normal CDF applied to uniforms, so fixture values are portable across
platforms.  Multi-asset panels derive one child stream per asset from the
seed via ``SeedSequence`` spawning.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import DataError
from .panel import ReturnPanel

__all__ = [
    "SynthSpec",
    "gen_fgn",
    "gen_cascade",
    "gen_corr_pair",
    "gen_factor_panel",
    "gen_crash_panel",
    "generate",
    "panel_to_prices",
]

EPOCH_MS = 1609459200000  # 2021-01-01T00:00:00Z
STEP_MS = 60000


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def _child_rngs(seed, count):
    return [np.random.Generator(np.random.PCG64(ss)) for ss in np.random.SeedSequence(seed).spawn(count)]


def standard_normals(rng, n):
    """Deterministic N(0,1) draws via the inverse CDF of PCG64 uniforms."""
    u = rng.random(n)
    u[u == 0.0] = 2.0**-53
    return ndtri(u)


def _check_power_of_two(t):
    if t < 2 or (t & (t - 1)) != 0:
        raise DataError(f"length {t} must be a power of two")


def gen_fgn(hurst, length, seed):
    """Stationary fractional Gaussian noise by exact circulant embedding.

    The embedding reproduces the autocovariance
    0.5 (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) exactly; a negative
    embedding spectrum (which does not occur for this covariance) is
    rejected rather than truncated.
    """
    if not 0.0 < hurst < 1.0:
        raise DataError(f"Hurst exponent must lie in (0, 1), got {hurst}")
    _check_power_of_two(length)
    n = length
    k = np.arange(n + 1, dtype=np.float64)
    gamma = 0.5 * (np.abs(k + 1) ** (2 * hurst) - 2 * np.abs(k) ** (2 * hurst) + np.abs(k - 1) ** (2 * hurst))
    row = np.concatenate([gamma[:n], [gamma[n]], gamma[1:n][::-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-9 * lam.max():
        raise DataError(f"circulant embedding not non-negative definite (min eigenvalue {lam.min()})")
    lam = np.clip(lam, 0.0, None)
    g = standard_normals(_rng(seed), 2 * n)
    g1, g2 = g[:n], g[n:]
    w = np.empty(2 * n, dtype=np.complex128)
    w[0] = np.sqrt(lam[0] / (2 * n)) * g1[0]
    w[1:n] = np.sqrt(lam[1:n] / (4 * n)) * (g1[1:] + 1j * g2[1:])
    w[n] = np.sqrt(lam[n] / (2 * n)) * g2[0]
    w[n + 1 :] = np.conj(w[1:n][::-1])
    return np.fft.fft(w)[:n].real


def gen_cascade(weight, depth, seed):
    """Binomial multiplicative cascade, centered to zero mean.

    Each dyadic split multiplies the parent mass by (weight, 1-weight) in
    a seed-chosen order, so the total mass stays 1 before centering.  The
    value distribution (and therefore the multifractal spectrum) matches
    the deterministic cascade with the same weight.
    """
    if not 0.5 < weight < 1.0:
        raise DataError(f"cascade weight must lie in (0.5, 1), got {weight}")
    if depth < 10:
        raise DataError(f"cascade depth must be >= 10, got {depth}")
    rng = _rng(seed)
    measure = np.ones(1)
    for _ in range(depth):
        flip = rng.integers(0, 2, size=measure.size).astype(bool)
        left = np.where(flip, 1.0 - weight, weight) * measure
        right = np.where(flip, weight, 1.0 - weight) * measure
        measure = np.column_stack([left, right]).ravel()
    return measure - measure.mean()


def gen_corr_pair(r, length, seed):
    """Jointly Gaussian i.i.d. pair with population correlation ``r``."""
    if not -1.0 <= r <= 1.0:
        raise DataError(f"correlation must lie in [-1, 1], got {r}")
    g = standard_normals(_rng(seed), 2 * length)
    z1, z2 = g[:length], g[length:]
    return z1, r * z1 + np.sqrt(1.0 - r * r) * z2


def _panel(returns, prefix="A"):
    n, t = returns.shape
    width = max(2, len(str(n - 1)))
    assets = tuple(f"{prefix}{i:0{width}d}" for i in range(n))
    ts = EPOCH_MS + STEP_MS * np.arange(1, t + 1, dtype=np.int64)
    return ReturnPanel(timestamps=ts, assets=assets, returns=returns)


def gen_factor_panel(n_assets, length, beta, sigma, seed):
    """One-factor panel: r_i = beta * Z + sigma * eps_i, all i.i.d. N(0,1)."""
    if n_assets < 2:
        raise DataError(f"need at least 2 assets, got {n_assets}")
    rngs = _child_rngs(seed, n_assets + 1)
    z = standard_normals(rngs[0], length)
    rows = np.empty((n_assets, length))
    for i in range(n_assets):
        rows[i] = beta * z + sigma * standard_normals(rngs[i + 1], length)
    return _panel(rows)


def gen_crash_panel(n_assets, length, jump, t_crash, sigma, seed, burst=10):
    """Independent Gaussian panel with a common negative jump burst.

    The jump ``jump`` (< 0) is added to every asset's return on ``burst``
    consecutive samples centered at ``t_crash``.
    """
    if n_assets < 10:
        raise DataError(f"need at least 10 assets, got {n_assets}")
    if not 0 < t_crash < length:
        raise DataError(f"crash time {t_crash} outside series of length {length}")
    if jump >= 0:
        raise DataError(f"jump must be negative, got {jump}")
    rngs = _child_rngs(seed, n_assets)
    rows = np.empty((n_assets, length))
    for i in range(n_assets):
        rows[i] = sigma * standard_normals(rngs[i], length)
    lo = max(0, t_crash - burst // 2)
    hi = min(length, lo + burst)
    rows[:, lo:hi] += jump
    return _panel(rows)


@dataclass(frozen=True)
class SynthSpec:
    """Declarative description of a synthetic dataset."""

    kind: str
    length: int = 0
    seed: int = 0
    hurst: float = 0.7
    weight: float = 0.7
    depth: int = 16
    r: float = 0.0
    n_assets: int = 10
    beta: float = 1.0
    sigma: float = 1.0
    jump: float = -0.1
    t_crash: int = 0
    params: dict = field(default_factory=dict)

    KINDS = ("fgn", "cascade", "corr_pair", "factor_panel", "crash_panel")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DataError(f"unknown synthetic kind {self.kind!r} (expected one of {self.KINDS})")


def generate(spec):
    """Materialize a SynthSpec as a ReturnPanel."""
    if spec.kind == "fgn":
        return _panel(gen_fgn(spec.hurst, spec.length, spec.seed)[None, :], prefix="FGN")
    if spec.kind == "cascade":
        return _panel(gen_cascade(spec.weight, spec.depth, spec.seed)[None, :], prefix="CAS")
    if spec.kind == "corr_pair":
        x, y = gen_corr_pair(spec.r, spec.length, spec.seed)
        return _panel(np.stack([x, y]), prefix="P")
    if spec.kind == "factor_panel":
        return gen_factor_panel(spec.n_assets, spec.length, spec.beta, spec.sigma, spec.seed)
    if spec.kind == "crash_panel":
        t_crash = spec.t_crash or spec.length // 2
        return gen_crash_panel(
            spec.n_assets, spec.length, spec.jump, t_crash, spec.sigma, spec.seed
        )
    raise DataError(f"unknown synthetic kind {spec.kind!r}")


def panel_to_prices(rp):
    """Pseudo-prices exp(cumsum(returns)) with a unit starting price.

    Returns (timestamps, prices) with one more time point than the return
    panel, so that converting back yields the original returns.
    """
    t0 = rp.timestamps[0] - STEP_MS
    ts = np.concatenate([[t0], rp.timestamps])
    logp = np.concatenate(
        [np.zeros((rp.n_assets, 1)), np.cumsum(rp.returns, axis=1)], axis=1
    )
    return ts, np.exp(logp)
