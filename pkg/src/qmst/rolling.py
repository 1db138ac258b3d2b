"""Rolling-window pipeline and measure-series analysis.

For every window position the full chain runs per (q, s): correlation
matrix, eigen summary, distance matrix, spanning tree, tree metrics, plus
tree distances between configured q pairs and (optionally) the same chain
on market-factor-filtered residuals.  Windows are independent pure
computations, so thread-level parallelism cannot change the results.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DataError, DegeneracyError
from .graph import build_mst, deltacon0, resistance_distance, tree_metrics
from .panel import slice_window
from .rhoq import _corr_from_power_means, to_distance
from .spectra import eigen_summary, filter_market_factor

__all__ = [
    "RollingConfig",
    "WindowSeries",
    "window_count",
    "window_starts",
    "run_rolling",
    "measure_acf",
    "measure_correlations",
]

MEASURE_NAMES = ("lambda1", "v1sq_max", "entropy", "kmax", "avg_path_len")


@dataclass(frozen=True)
class RollingConfig:
    """Window geometry and per-window analysis settings."""

    window: int = 10080
    step: int = 1440
    q_values: tuple = (1.0, 4.0)
    scales: tuple = (10,)
    poly_order: int = 2
    filter_market: bool = False
    q_pairs: tuple = ((1.0, 4.0),)
    tracked_assets: tuple = ()
    keep_trees: bool = False

    def __post_init__(self):
        object.__setattr__(self, "q_values", tuple(float(q) for q in self.q_values))
        object.__setattr__(self, "scales", tuple(int(s) for s in self.scales))
        object.__setattr__(self, "q_pairs", tuple((float(a), float(b)) for a, b in self.q_pairs))
        object.__setattr__(self, "tracked_assets", tuple(self.tracked_assets))
        if self.step < 1:
            raise DataError(f"step must be >= 1, got {self.step}")
        if any(q <= 0 for q in self.q_values):
            raise DataError(f"q values must be > 0, got {self.q_values}")
        if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise DataError(f"scales must be strictly increasing, got {self.scales}")
        if not 1 <= self.poly_order <= 5:
            raise DataError(f"polynomial order must be in 1..5, got {self.poly_order}")
        if self.scales and self.scales[0] < self.poly_order + 2:
            raise DataError(
                f"smallest scale {self.scales[0]} violates s >= m+2 for order {self.poly_order}"
            )
        if self.scales and self.window < 4 * max(self.scales):
            raise DataError(
                f"window {self.window} shorter than 4x the largest scale {max(self.scales)}"
            )
        for qa, qb in self.q_pairs:
            if qa not in self.q_values or qb not in self.q_values:
                raise DataError(f"distance pair ({qa}, {qb}) not covered by q values {self.q_values}")


def window_count(n_samples, window, step):
    """Number of rolling windows: floor((n - W) / step) + 1."""
    if window > n_samples:
        return 0
    return (n_samples - window) // step + 1


def window_starts(n_samples, window, step):
    k = window_count(n_samples, window, step)
    return [i * step for i in range(k)]


@dataclass(frozen=True)
class SeriesBlock:
    """Per-(q, s) measure series plus per-(q-pair, s) tree distances."""

    measures: dict
    kmax_assets: dict
    tracked: dict
    eigen: dict
    distances: dict
    trees: dict = None


@dataclass(frozen=True)
class WindowSeries:
    """Everything the rolling driver produced, aligned on window index."""

    config: RollingConfig
    assets: tuple
    window_ends: np.ndarray
    starts: np.ndarray
    drops: tuple
    notes: tuple
    raw: SeriesBlock
    filtered: SeriesBlock = None

    @property
    def n_windows(self):
        return len(self.window_ends)


def _degenerate_rows(returns):
    # exactly constant rows can never carry correlation information
    return set(np.nonzero(np.ptp(returns, axis=1) == 0.0)[0])


def _window_chain(returns, assets, q_values, scales, designs):
    """Correlation/eigen/tree chain for one window's return rows."""
    profiles = np.cumsum(returns - returns.mean(axis=1, keepdims=True), axis=1)
    per_qs = {}
    for s in scales:
        design, proj = designs[s]
        resid = _kernels.segment_residuals(profiles, design, proj)
        s_mats = _kernels.panel_sign_power_means(resid, np.asarray(q_values))
        for qi, q in enumerate(q_values):
            c = _corr_from_power_means(s_mats[qi], assets, q, s)
            eig = eigen_summary(c)
            tree = build_mst(to_distance(c))
            per_qs[(q, s)] = (c, eig, tree, tree_metrics(tree))
    return per_qs


def _residual_scales_degenerate(returns, cfg, designs):
    """Indices of rows whose detrended fluctuations vanish at some scale."""
    profiles = np.cumsum(returns - returns.mean(axis=1, keepdims=True), axis=1)
    bad = set()
    for s in cfg.scales:
        design, proj = designs[s]
        resid = _kernels.segment_residuals(profiles, design, proj)
        f2 = np.einsum("nvk,nvk->nv", resid, resid) / s
        bad |= set(np.nonzero(~np.any(f2 > 0.0, axis=1))[0])
    return bad


def _eval_window(panel, start, cfg, designs):
    sub = slice_window(panel, start, cfg.window)
    n = sub.n_assets
    bad = _degenerate_rows(sub.returns)
    kept = [i for i in range(n) if i not in bad]
    # rows can also degenerate only after detrending (e.g. exact polynomials)
    while kept:
        extra = _residual_scales_degenerate(sub.returns[kept], cfg, designs)
        if not extra:
            break
        bad |= {kept[i] for i in extra}
        kept = [i for i in range(n) if i not in bad]
    drops = tuple(sub.assets[i] for i in sorted(bad))
    if len(kept) < 2:
        return {
            "drops": drops,
            "notes": ("window skipped: fewer than 2 non-degenerate assets",),
            "raw": None,
            "filtered": None,
        }

    assets = tuple(sub.assets[i] for i in kept)
    rows = sub.returns[kept]
    raw = _window_chain(rows, assets, cfg.q_values, cfg.scales, designs)

    filtered = None
    notes = []
    if cfg.filter_market:
        from .panel import ReturnPanel

        kept_panel = ReturnPanel(timestamps=sub.timestamps, assets=assets, returns=rows)
        filtered = {}
        for (q, s), (_, eig, _, _) in raw.items():
            try:
                resid_panel = filter_market_factor(kept_panel, eig.v1)
                chain = _window_chain(resid_panel.residuals, assets, (q,), (s,), designs)
                filtered[(q, s)] = chain[(q, s)]
            except DegeneracyError as exc:
                filtered[(q, s)] = None
                notes.append(f"filtered path degenerate at (q={q}, s={s}): {exc}")

    return {"drops": drops, "notes": tuple(notes), "raw": raw, "filtered": filtered}


def _collect_block(results, cfg, key):
    k = len(results)
    measures = {}
    kmax_assets = {}
    tracked = {}
    eigen = {}
    distances = {}
    trees = {} if cfg.keep_trees else None
    for q in cfg.q_values:
        for s in cfg.scales:
            qs = (q, s)
            measures[qs] = {m: np.full(k, np.nan) for m in MEASURE_NAMES}
            kmax_assets[qs] = [None] * k
            tracked[qs] = {a: np.full(k, np.nan) for a in cfg.tracked_assets}
            eigen[qs] = [None] * k
            if trees is not None:
                trees[qs] = [None] * k
    for qa, qb in cfg.q_pairs:
        for s in cfg.scales:
            distances[(qa, qb, s)] = {
                "d_dc0": np.full(k, np.nan),
                "d_rp1": np.full(k, np.nan),
            }

    for w, res in enumerate(results):
        block = res[key]
        if block is None:
            continue
        for (q, s), entry in block.items():
            if entry is None:
                continue
            c, eig, tree, tm = entry
            m = measures[(q, s)]
            m["lambda1"][w] = eig.lambda1
            m["v1sq_max"][w] = float(eig.v1_squared.max())
            m["entropy"][w] = eig.entropy
            m["kmax"][w] = tm.k_max
            m["avg_path_len"][w] = tm.avg_path_len
            kmax_assets[(q, s)][w] = tm.k_argmax
            for ai, a in enumerate(c.assets):
                if a in tracked[(q, s)]:
                    tracked[(q, s)][a][w] = float(eig.v1_squared[ai])
            eigen[(q, s)][w] = eig.to_json_dict(q=q, s=s)
            if trees is not None:
                trees[(q, s)][w] = tree
        for qa, qb in cfg.q_pairs:
            for s in cfg.scales:
                ea = block.get((qa, s))
                eb = block.get((qb, s))
                if ea is None or eb is None:
                    continue
                d = distances[(qa, qb, s)]
                d["d_dc0"][w] = deltacon0(ea[2].adjacency, eb[2].adjacency)
                d["d_rp1"][w] = resistance_distance(ea[2].adjacency, eb[2].adjacency)

    return SeriesBlock(
        measures=measures,
        kmax_assets={k2: tuple(v) for k2, v in kmax_assets.items()},
        tracked=tracked,
        eigen={k2: tuple(v) for k2, v in eigen.items()},
        distances=distances,
        trees={k2: tuple(v) for k2, v in trees.items()} if trees is not None else None,
    )


def run_rolling(panel, cfg, threads=1):
    """Run the per-window pipeline over every window position.

    Degenerate assets are dropped from their window only (recorded in
    ``drops``); a window left with fewer than 2 assets is skipped and its
    measures stay NaN.  Results are bit-identical for any ``threads``.
    """
    n = panel.n_samples
    starts = window_starts(n, cfg.window, cfg.step)
    if not starts:
        raise DataError(
            f"no complete window: {n} samples, window {cfg.window} (need window <= samples)"
        )
    designs = {s: _kernels.segment_design(s, cfg.poly_order) for s in cfg.scales}
    for s in cfg.scales:
        if 2 * (cfg.window // s) < 4:
            raise DataError(f"scale {s} leaves fewer than 4 segments in window {cfg.window}")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda st: _eval_window(panel, st, cfg, designs), starts))
    else:
        results = [_eval_window(panel, st, cfg, designs) for st in starts]

    ends = np.array([panel.timestamps[st + cfg.window - 1] for st in starts], dtype=np.int64)
    raw = _collect_block(results, cfg, "raw")
    filtered = _collect_block(results, cfg, "filtered") if cfg.filter_market else None
    return WindowSeries(
        config=cfg,
        assets=panel.assets,
        window_ends=ends,
        starts=np.array(starts, dtype=np.int64),
        drops=tuple(res["drops"] for res in results),
        notes=tuple(res["notes"] for res in results),
        raw=raw,
        filtered=filtered,
    )


def _fmt_q(q):
    return f"{q:g}"


def _fmt(x):
    return repr(float(x))


def write_window_series(out_dir, ws):
    """Write measure tables, distance tables, and eigen summaries.

    One tabular file per (q, s), one distance file per (q-pair, s), one
    JSON-lines eigen file per (q, s); filtered counterparts carry a
    ``_filtered`` suffix.  Returns the list of file names written.
    """
    import json
    import os

    written = []
    blocks = [("", ws.raw)]
    if ws.filtered is not None:
        blocks.append(("_filtered", ws.filtered))
    cfg = ws.config
    for suffix, block in blocks:
        for q in cfg.q_values:
            for s in cfg.scales:
                qs = (q, s)
                name = f"measures_q{_fmt_q(q)}_s{s}{suffix}.csv"
                cols = ["window_end", "lambda1", "v1sq_max", "entropy", "kmax", "kmax_asset", "avg_path_len"]
                cols += [f"v1sq_{a}" for a in cfg.tracked_assets]
                m = block.measures[qs]
                with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
                    fh.write(",".join(cols) + "\n")
                    for w in range(ws.n_windows):
                        kmax = m["kmax"][w]
                        row = [
                            str(int(ws.window_ends[w])),
                            _fmt(m["lambda1"][w]),
                            _fmt(m["v1sq_max"][w]),
                            _fmt(m["entropy"][w]),
                            str(int(kmax)) if np.isfinite(kmax) else "nan",
                            block.kmax_assets[qs][w] or "",
                            _fmt(m["avg_path_len"][w]),
                        ]
                        row += [_fmt(block.tracked[qs][a][w]) for a in cfg.tracked_assets]
                        fh.write(",".join(row) + "\n")
                written.append(name)

                ename = f"eigen_q{_fmt_q(q)}_s{s}{suffix}.jsonl"
                with open(os.path.join(out_dir, ename), "w", encoding="utf-8") as fh:
                    for w in range(ws.n_windows):
                        rec = block.eigen[qs][w]
                        if rec is None:
                            payload = {"window_end": int(ws.window_ends[w]), "skipped": True}
                        else:
                            payload = {"window_end": int(ws.window_ends[w]), **rec}
                        fh.write(json.dumps(payload, sort_keys=True) + "\n")
                written.append(ename)

        for qa, qb in cfg.q_pairs:
            for s in cfg.scales:
                d = block.distances[(qa, qb, s)]
                name = f"distances_q{_fmt_q(qa)}_q{_fmt_q(qb)}_s{s}{suffix}.csv"
                with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
                    fh.write("window_end,d_dc0,d_rp1\n")
                    for w in range(ws.n_windows):
                        fh.write(
                            ",".join(
                                (
                                    str(int(ws.window_ends[w])),
                                    _fmt(d["d_dc0"][w]),
                                    _fmt(d["d_rp1"][w]),
                                )
                            )
                            + "\n"
                        )
                written.append(name)
    return written


def measure_acf(x, max_lag):
    """Autocorrelation of a measure series with the biased 1/K normalization.

    Uses the sample mean and the biased sample variance, so the lag-0
    value is exactly 1.
    """
    x = np.asarray(x, dtype=np.float64)
    k = x.size
    if k < max_lag + 2:
        raise DataError(f"series of length {k} too short for max lag {max_lag}")
    if not np.all(np.isfinite(x)):
        raise DataError("measure series contains non-finite values")
    xm = x - x.mean()
    var = (xm * xm).sum() / k
    if var == 0.0:
        raise DegeneracyError("constant measure series has no autocorrelation")
    out = np.empty(max_lag + 1)
    for lag in range(max_lag + 1):
        out[lag] = (xm[: k - lag] * xm[lag:]).sum() / k / var
    return out


def measure_correlations(series):
    """Pearson correlation matrix across named measure series.

    ``series`` maps name -> 1-D array; all arrays must share length >= 3.
    A constant series gets NaN in its row and column.
    """
    names = list(series)
    if len(names) < 2:
        raise DataError("need at least 2 measure series")
    arrs = [np.asarray(series[n], dtype=np.float64) for n in names]
    k = arrs[0].size
    if k < 3:
        raise DataError(f"need at least 3 windows, got {k}")
    if any(a.size != k for a in arrs):
        raise DataError("measure series have different lengths")
    m = len(names)
    out = np.full((m, m), np.nan)
    centered = [a - a.mean() for a in arrs]
    norms = [math.sqrt(float((c * c).sum())) for c in centered]
    for i in range(m):
        for j in range(i, m):
            if norms[i] > 0 and norms[j] > 0:
                out[i, j] = out[j, i] = float((centered[i] * centered[j]).sum()) / (
                    norms[i] * norms[j]
                )
        if norms[i] > 0:
            out[i, i] = 1.0
    return names, out
