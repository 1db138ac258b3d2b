"""Price ingestion, grid alignment, and log-return panels.

Input is delimiter-separated text with a header row.  Wide layout:
``timestamp,TICKER1,TICKER2,...``; long layout: ``timestamp,asset,price``.
Timestamps are ISO-8601 or integer epoch milliseconds, auto-detected per
column (must be homogeneous).  Panels are immutable after construction.
"""

import csv
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import DataError

__all__ = [
    "PricePanel",
    "ReturnPanel",
    "load_prices",
    "to_returns",
    "cumulative_returns",
    "slice_window",
    "write_wide",
]


def _parse_timestamp_column(raw, where):
    """Epoch-ms int64 array from a homogeneous string column."""
    def is_int(v):
        t = v[1:] if v[:1] in "+-" else v
        return t.isdigit() and t != ""

    if all(is_int(v) for v in raw):
        return np.array([int(v) for v in raw], dtype=np.int64)
    out = np.empty(len(raw), dtype=np.int64)
    for i, v in enumerate(raw):
        if is_int(v):
            raise DataError(f"{where}: mixed timestamp formats (epoch and ISO) at value {v!r}")
        try:
            dt = datetime.fromisoformat(v.replace("Z", "+00:00"))
        except ValueError:
            raise DataError(f"{where}: unparseable timestamp {v!r}") from None
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        out[i] = round(dt.timestamp() * 1000)
    return out


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PricePanel:
    """Aligned strictly positive prices of N assets on a uniform time grid."""

    timestamps: np.ndarray
    assets: tuple
    prices: np.ndarray
    dt_ms: int = 0
    sectors: tuple = None
    dropped_assets: tuple = ()

    def __post_init__(self):
        ts = _readonly(np.asarray(self.timestamps, dtype=np.int64))
        px = _readonly(np.asarray(self.prices, dtype=np.float64))
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", px)
        object.__setattr__(self, "assets", tuple(self.assets))
        n, t = px.shape
        if n < 2:
            raise DataError(f"need at least 2 assets, got {n}")
        if t < 2:
            raise DataError(f"need at least 2 time points, got {t}")
        if len(self.assets) != n:
            raise DataError("asset label count does not match price rows")
        if len(set(self.assets)) != n:
            raise DataError("asset labels must be unique")
        if ts.shape != (t,):
            raise DataError("timestamp count does not match price columns")
        diffs = np.diff(ts)
        if np.any(diffs <= 0):
            k = int(np.argmax(diffs <= 0))
            raise DataError(f"timestamps not strictly increasing at index {k + 1}")
        if np.any(diffs != diffs[0]):
            k = int(np.argmax(diffs != diffs[0]))
            raise DataError(f"non-uniform timestamp spacing at index {k + 1}")
        object.__setattr__(self, "dt_ms", int(diffs[0]))
        if not np.all(np.isfinite(px)) or np.any(px <= 0):
            raise DataError("prices must be finite and strictly positive")
        if self.sectors is not None and len(self.sectors) != n:
            raise DataError("sector label count does not match assets")

    @property
    def n_assets(self):
        return len(self.assets)

    @property
    def n_points(self):
        return self.prices.shape[1]


@dataclass(frozen=True)
class ReturnPanel:
    """Log-returns of N assets; timestamps mark each return interval's end."""

    timestamps: np.ndarray
    assets: tuple
    returns: np.ndarray
    sectors: tuple = None

    def __post_init__(self):
        ts = _readonly(np.asarray(self.timestamps, dtype=np.int64))
        r = _readonly(np.asarray(self.returns, dtype=np.float64))
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "returns", r)
        object.__setattr__(self, "assets", tuple(self.assets))
        n, t = r.shape
        if len(self.assets) != n:
            raise DataError("asset label count does not match return rows")
        if len(set(self.assets)) != n:
            raise DataError("asset labels must be unique")
        if ts.shape != (t,):
            raise DataError("timestamp count does not match return columns")
        if not np.all(np.isfinite(r)):
            raise DataError("returns must be finite")
        if self.sectors is not None and len(self.sectors) != n:
            raise DataError("sector label count does not match assets")

    @property
    def n_assets(self):
        return len(self.assets)

    @property
    def n_samples(self):
        return self.returns.shape[1]


def _read_rows(source, delimiter):
    with open(source, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise DataError(f"{source}: needs a header row and at least one data row")
    return rows


def _parse_price(cell, source, line):
    try:
        p = float(cell)
    except ValueError:
        raise DataError(f"{source}: row {line}: unparseable price {cell!r}") from None
    if not np.isfinite(p) or p <= 0:
        raise DataError(f"{source}: row {line}: non-positive price {cell!r}")
    return p


def load_prices(source, layout="wide", delimiter=","):
    """Read a price file and align every asset on the union time grid.

    Interior gaps are filled by carrying the last observed price forward
    (yielding zero log-returns there); assets with no observation at the
    grid start are excluded rather than back-filled, and reported in
    ``dropped_assets``.
    """
    rows = _read_rows(source, delimiter)
    header, data = rows[0], rows[1:]

    if layout == "wide":
        assets = [h.strip() for h in header[1:]]
        if len(assets) < 2:
            raise DataError(f"{source}: wide layout needs at least 2 asset columns")
        raw_ts = [r[0].strip() for r in data]
        ts = _parse_timestamp_column(raw_ts, source)
        if np.any(np.diff(ts) <= 0):
            k = int(np.argmax(np.diff(ts) <= 0))
            raise DataError(f"{source}: row {k + 3}: non-monotone timestamps")
        obs = {a: {} for a in assets}
        for li, r in enumerate(data):
            if len(r) != len(header):
                raise DataError(f"{source}: row {li + 2}: expected {len(header)} fields, got {len(r)}")
            for a, cell in zip(assets, r[1:]):
                cell = cell.strip()
                if cell == "":
                    continue
                obs[a][int(ts[li])] = _parse_price(cell, source, li + 2)
    elif layout == "long":
        if len(header) < 3:
            raise DataError(f"{source}: long layout needs (timestamp, asset, price) columns")
        raw_ts = [r[0].strip() for r in data]
        ts = _parse_timestamp_column(raw_ts, source)
        obs = {}
        last_seen = {}
        for li, r in enumerate(data):
            if len(r) < 3:
                raise DataError(f"{source}: row {li + 2}: expected 3 fields, got {len(r)}")
            a = r[1].strip()
            t = int(ts[li])
            p = _parse_price(r[2], source, li + 2)
            series = obs.setdefault(a, {})
            if t in series:
                raise DataError(f"{source}: row {li + 2}: duplicate observation for {a}")
            if a in last_seen and t <= last_seen[a]:
                raise DataError(f"{source}: row {li + 2}: non-monotone timestamps for {a}")
            last_seen[a] = t
            series[t] = p
        assets = sorted(obs)
    else:
        raise DataError(f"unknown layout {layout!r} (expected 'wide' or 'long')")

    grid = np.array(sorted({t for series in obs.values() for t in series}), dtype=np.int64)
    if grid.size < 2:
        raise DataError(f"{source}: fewer than 2 distinct timestamps")

    kept, dropped, rows_out = [], [], []
    for a in assets:
        series = obs[a]
        if not series:
            dropped.append(a)
            continue
        if min(series) > int(grid[0]):
            dropped.append(a)
            continue
        vals = np.empty(grid.size)
        last = np.nan
        for i, t in enumerate(grid):
            last = series.get(int(t), last)
            vals[i] = last
        kept.append(a)
        rows_out.append(vals)

    if len(kept) < 2:
        raise DataError(
            f"{source}: fewer than 2 alignable assets (dropped: {', '.join(dropped) or 'none'})"
        )
    return PricePanel(
        timestamps=grid,
        assets=tuple(kept),
        prices=np.array(rows_out),
        dropped_assets=tuple(dropped),
    )


def to_returns(p):
    """Element-wise log-returns of a price panel (length T-1 per asset)."""
    r = np.diff(np.log(p.prices), axis=1)
    return ReturnPanel(
        timestamps=p.timestamps[1:],
        assets=p.assets,
        returns=r,
        sectors=p.sectors,
    )


def cumulative_returns(r):
    """Running sum of each asset's return series, as an N x (T-1) matrix."""
    return np.cumsum(r.returns, axis=1)


def slice_window(r, start, length):
    """Contiguous sub-panel of ``length`` samples starting at ``start``."""
    if start < 0 or length < 1 or start + length > r.n_samples:
        raise DataError(
            f"window [{start}, {start + length}) out of range for {r.n_samples} samples"
        )
    return ReturnPanel(
        timestamps=r.timestamps[start : start + length],
        assets=r.assets,
        returns=r.returns[:, start : start + length],
        sectors=r.sectors,
    )


def write_wide(path, timestamps, assets, values, delimiter=","):
    """Wide-layout tabular text: header ``timestamp,ASSET...``, one row per time."""
    values = np.asarray(values)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(delimiter.join(("timestamp", *assets)) + "\n")
        for j, t in enumerate(timestamps):
            fh.write(delimiter.join((str(int(t)), *(repr(float(v)) for v in values[:, j]))) + "\n")
