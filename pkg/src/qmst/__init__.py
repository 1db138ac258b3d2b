"""Amplitude-selective detrended cross-correlation networks.

Builds q-order detrended fluctuation functions and cross-correlation
coefficients for multivariate time series, the derived metric distance
matrices and minimum spanning trees, spectral and entropy diagnostics,
market-factor filtering, and rolling-window measure series, plus
synthetic generators with known ground truth for validation.
"""

from ._kernels import BACKEND as kernel_backend
from .detrend import (
    DetrendConfig,
    FluctuationSet,
    ScalingExponents,
    SegmentCovariances,
    default_scales,
    estimate_exponents,
    fluctuation_functions,
    pair_pipeline,
    profile,
    segment_covariances,
)
from .errors import DataError, DegeneracyError, QmstError
from .graph import QMst, TreeMetrics, build_mst, deltacon0, resistance_distance, tree_metrics
from .panel import (
    PricePanel,
    ReturnPanel,
    cumulative_returns,
    load_prices,
    slice_window,
    to_returns,
)
from .rhoq import QCorrMatrix, QDistMatrix, corr_matrix, rho_q, to_distance
from .rolling import (
    RollingConfig,
    WindowSeries,
    measure_acf,
    measure_correlations,
    run_rolling,
    window_count,
)
from .spectra import (
    EigenSummary,
    ResidualPanel,
    eigen_summary,
    entropy,
    filter_market_factor,
    residual_corr,
)
from .synth import (
    SynthSpec,
    gen_cascade,
    gen_corr_pair,
    gen_crash_panel,
    gen_factor_panel,
    gen_fgn,
)

__version__ = "0.1.0"

__all__ = [
    "kernel_backend",
    "DetrendConfig",
    "FluctuationSet",
    "ScalingExponents",
    "SegmentCovariances",
    "default_scales",
    "estimate_exponents",
    "fluctuation_functions",
    "pair_pipeline",
    "profile",
    "segment_covariances",
    "DataError",
    "DegeneracyError",
    "QmstError",
    "QMst",
    "TreeMetrics",
    "build_mst",
    "deltacon0",
    "resistance_distance",
    "tree_metrics",
    "PricePanel",
    "ReturnPanel",
    "cumulative_returns",
    "load_prices",
    "slice_window",
    "to_returns",
    "QCorrMatrix",
    "QDistMatrix",
    "corr_matrix",
    "rho_q",
    "to_distance",
    "RollingConfig",
    "WindowSeries",
    "measure_acf",
    "measure_correlations",
    "run_rolling",
    "window_count",
    "EigenSummary",
    "ResidualPanel",
    "eigen_summary",
    "entropy",
    "filter_market_factor",
    "residual_corr",
    "SynthSpec",
    "gen_cascade",
    "gen_corr_pair",
    "gen_crash_panel",
    "gen_factor_panel",
    "gen_fgn",
    "__version__",
]
