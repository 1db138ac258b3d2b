"""Command-line interface.

Subcommands: ``returns`` (prices to log-returns), ``analyze`` (rolling
pipeline), ``synth`` (synthetic panels), ``graphdist`` (compare two saved
trees), ``mfdfa`` (per-series scaling-exponent report).  Exit codes:
0 success, 2 usage, 3 data error, 4 numeric degeneracy.

Every ``analyze`` run writes a ``manifest.json`` with the fully resolved
configuration; passing that manifest back via ``--config`` reproduces the
run byte for byte.  Outputs are staged in a temporary directory and moved
into place only on success.
"""

import argparse
import json
import os
import shutil
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__, _kernels, detrend, graph, panel, rolling, synth
from .errors import DataError, DegeneracyError

ANALYZE_DEFAULTS = {
    "layout": "wide",
    "q": "1,4",
    "scales": "10",
    "order": "2",
    "window": "10080",
    "step": "1440",
    "filter": "false",
    "pairs": "1:4",
    "track": "",
    "emit_trees": "false",
    "threads": "0",
}


@contextmanager
def staged_outputs(out_dir):
    """Write into a temp stage, move into ``out_dir`` only on success."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".qmst-stage-", dir=str(out_dir.parent)))
    try:
        yield stage
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    out_dir.mkdir(parents=True, exist_ok=True)
    for item in sorted(stage.iterdir()):
        target = out_dir / item.name
        if target.is_dir():
            shutil.rmtree(target)
        os.replace(item, target)
    stage.rmdir()


def _parse_bool(v):
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise DataError(f"expected a boolean, got {v!r}")


def _parse_floats(v):
    return tuple(float(x) for x in str(v).split(",") if x.strip() != "")

def _parse_ints(v):
    return tuple(int(x) for x in str(v).split(",") if x.strip() != "")


def _parse_pairs(v):
    out = []
    for part in str(v).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            a, b = part.split(":")
            out.append((float(a), float(b)))
        except ValueError:
            raise DataError(f"bad q pair {part!r}, expected like 1:4") from None
    return tuple(out)


def _load_config_file(path):
    """Flat key=value text, or a manifest JSON (its ``config`` object)."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        cfg = doc.get("config", doc)
        return {str(k): str(v) for k, v in cfg.items()}
    out = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}: line {ln}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _resolve(args, keys):
    """Flag > config file > defaults, all as strings."""
    file_cfg = _load_config_file(args.config) if getattr(args, "config", None) else {}
    resolved = {}
    for k in keys:
        flag_val = getattr(args, k, None)
        if flag_val is not None:
            resolved[k] = str(flag_val)
        elif k in file_cfg:
            resolved[k] = file_cfg[k]
        elif k in ANALYZE_DEFAULTS:
            resolved[k] = ANALYZE_DEFAULTS[k]
    return resolved


def cmd_returns(args):
    p = panel.load_prices(args.input, layout=args.layout or "wide")
    r = panel.to_returns(p)
    cum = panel.cumulative_returns(r)
    with staged_outputs(args.out) as stage:
        panel.write_wide(stage / "returns.csv", r.timestamps, r.assets, r.returns)
        panel.write_wide(stage / "cumulative_returns.csv", r.timestamps, r.assets, cum)
    if p.dropped_assets:
        print(f"dropped (no price at grid start): {', '.join(p.dropped_assets)}", file=sys.stderr)
    print(f"wrote returns.csv and cumulative_returns.csv to {args.out}")
    return 0


def cmd_analyze(args):
    keys = list(ANALYZE_DEFAULTS) + ["input", "out"]
    cfgmap = _resolve(args, keys)
    if "input" not in cfgmap:
        raise DataError("analyze requires --input (or an input entry in --config)")
    if "out" not in cfgmap:
        raise DataError("analyze requires --out (or an out entry in --config)")

    threads = int(cfgmap["threads"]) or (os.cpu_count() or 1)
    cfg = rolling.RollingConfig(
        window=int(cfgmap["window"]),
        step=int(cfgmap["step"]),
        q_values=_parse_floats(cfgmap["q"]),
        scales=_parse_ints(cfgmap["scales"]),
        poly_order=int(cfgmap["order"]),
        filter_market=_parse_bool(cfgmap["filter"]),
        q_pairs=_parse_pairs(cfgmap["pairs"]),
        tracked_assets=tuple(t for t in cfgmap["track"].split(",") if t.strip()),
        keep_trees=_parse_bool(cfgmap["emit_trees"]),
    )
    p = panel.load_prices(cfgmap["input"], layout=cfgmap["layout"])
    r = panel.to_returns(p)
    ws = rolling.run_rolling(r, cfg, threads=threads)

    with staged_outputs(cfgmap["out"]) as stage:
        written = rolling.write_window_series(stage, ws)
        if cfg.keep_trees:
            written += _write_trees(stage, ws)
        manifest = {
            "artifact": f"qmst {__version__}",
            "kernel_backend": _kernels.BACKEND,
            "command": "analyze",
            "config": {k: cfgmap[k] for k in sorted(cfgmap)},
            "windows": ws.n_windows,
            "drops": [
                {"window": w, "window_end": int(ws.window_ends[w]), "assets": list(d)}
                for w, d in enumerate(ws.drops)
                if d
            ],
            "notes": [
                {"window": w, "notes": list(n)} for w, n in enumerate(ws.notes) if n
            ],
            "outputs": sorted(written),
        }
        with open(stage / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
    print(f"analyzed {ws.n_windows} windows; outputs in {cfgmap['out']}")
    return 0


def _write_trees(stage, ws):
    written = []
    blocks = [("", ws.raw)]
    if ws.filtered is not None:
        blocks.append(("_filtered", ws.filtered))
    for suffix, block in blocks:
        if block.trees is None:
            continue
        for (q, s), trees in block.trees.items():
            sub = stage / f"trees{suffix}" / f"q{q:g}_s{s}"
            sub.mkdir(parents=True, exist_ok=True)
            for w, tree in enumerate(trees):
                if tree is None:
                    continue
                name = f"w{w:05d}.json"
                graph.write_tree_json(sub / name, tree)
                written.append(f"trees{suffix}/q{q:g}_s{s}/{name}")
    return written


def cmd_synth(args):
    spec = synth.SynthSpec(
        kind=args.kind,
        length=args.length,
        seed=args.seed,
        hurst=args.hurst,
        weight=args.weight,
        depth=args.depth,
        r=args.rho,
        n_assets=args.n_assets,
        beta=args.beta,
        sigma=args.sigma,
        jump=args.jump,
        t_crash=args.t_crash,
    )
    rp = synth.generate(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".qmst-", dir=str(out.parent))
    os.close(fd)
    try:
        if args.emit == "prices":
            ts, prices = synth.panel_to_prices(rp)
            panel.write_wide(tmp, ts, rp.assets, prices)
        else:
            panel.write_wide(tmp, rp.timestamps, rp.assets, rp.returns)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    print(f"wrote {args.emit} for kind={spec.kind} to {out}")
    return 0


def cmd_graphdist(args):
    t1 = graph.load_tree_json(args.tree_a)
    t2 = graph.load_tree_json(args.tree_b)
    if t1.assets != t2.assets:
        raise DataError("trees are defined over different node sets")
    d0 = graph.deltacon0(t1.adjacency, t2.adjacency)
    d1 = graph.resistance_distance(t1.adjacency, t2.adjacency)
    result = {"d_dc0": d0, "d_rp1": d1}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(result, fh, sort_keys=True)
            fh.write("\n")
    print(f"d_dc0={d0!r} d_rp1={d1!r}")
    return 0


def _read_series_file(path):
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise DataError(f"{path}: needs a header row and data rows")
    header = rows[0][1:]
    try:
        data = np.array([[float(c) for c in r[1:]] for r in rows[1:]])
    except ValueError as exc:
        raise DataError(f"{path}: unparseable value ({exc})") from None
    return header, data.T


def cmd_mfdfa(args):
    names, series = _read_series_file(args.input)
    if args.column:
        if args.column not in names:
            raise DataError(f"column {args.column!r} not in {names}")
        idx = [names.index(args.column)]
    else:
        idx = range(len(names))
    q_values = _parse_floats(args.q)
    m = args.order
    length = series.shape[1]
    scales = _parse_ints(args.scales) if args.scales else detrend.default_scales(length, m)
    cfg = detrend.DetrendConfig(q_values=q_values, scales=scales, poly_order=m)
    if args.fit:
        lo, hi = args.fit.split(":")
        fit_range = (int(lo), int(hi))
    else:
        fit_range = None
    with staged_outputs(args.out) as stage:
        with open(stage / "exponents.csv", "w", encoding="utf-8") as eh:
            eh.write("series,q,h,r2,s_min,s_max\n")
            for i in idx:
                fs = detrend.pair_pipeline(series[i], series[i], cfg)
                detrend.write_fluctuations(
                    stage / f"fluctuations_{names[i]}.csv", fs, pair_label=f"{names[i]}:{names[i]}"
                )
                ex = detrend.estimate_exponents(fs, fit_range)
                for qi, q in enumerate(ex.q_values):
                    eh.write(
                        ",".join(
                            (
                                names[i],
                                f"{q:g}",
                                repr(float(ex.h_x[qi])),
                                repr(float(ex.r2_x[qi])),
                                str(ex.fit_range[0]),
                                str(ex.fit_range[1]),
                            )
                        )
                        + "\n"
                    )
    print(f"wrote exponents.csv and fluctuation tables to {args.out}")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="qmst", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"qmst {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p_ret = sub.add_parser("returns", help="convert a price file to log-return tables")
    p_ret.add_argument("--input", required=True)
    p_ret.add_argument("--layout", choices=("wide", "long"))
    p_ret.add_argument("--out", required=True)
    p_ret.set_defaults(func=cmd_returns)

    p_an = sub.add_parser("analyze", help="rolling-window correlation/tree analysis")
    p_an.add_argument("--input")
    p_an.add_argument("--layout", choices=("wide", "long"))
    p_an.add_argument("--out")
    p_an.add_argument("--config", help="key=value file or a previous run's manifest.json")
    p_an.add_argument("--q", help="comma-separated q values (default 1,4)")
    p_an.add_argument("--scales", help="comma-separated scales (default 10)")
    p_an.add_argument("--order", type=int, help="detrending polynomial order (default 2)")
    p_an.add_argument("--window", type=int, help="window length in samples (default 10080)")
    p_an.add_argument("--step", type=int, help="window step in samples (default 1440)")
    p_an.add_argument("--filter", action="store_const", const="true", help="also analyze market-factor-filtered residuals")
    p_an.add_argument("--pairs", help="q pairs for tree distances, like 1:4 (default 1:4)")
    p_an.add_argument("--track", help="comma-separated assets whose v1^2 to record")
    p_an.add_argument("--emit-trees", dest="emit_trees", action="store_const", const="true", help="write per-window tree edge lists")
    p_an.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p_an.set_defaults(func=cmd_analyze)

    p_sy = sub.add_parser("synth", help="generate a synthetic panel file")
    p_sy.add_argument("--kind", required=True, choices=synth.SynthSpec.KINDS)
    p_sy.add_argument("--out", required=True)
    p_sy.add_argument("--length", type=int, default=4096)
    p_sy.add_argument("--seed", type=int, default=0)
    p_sy.add_argument("--hurst", type=float, default=0.7)
    p_sy.add_argument("--weight", type=float, default=0.7)
    p_sy.add_argument("--depth", type=int, default=16)
    p_sy.add_argument("--rho", type=float, default=0.0)
    p_sy.add_argument("--n-assets", dest="n_assets", type=int, default=10)
    p_sy.add_argument("--beta", type=float, default=1.0)
    p_sy.add_argument("--sigma", type=float, default=1.0)
    p_sy.add_argument("--jump", type=float, default=-0.1)
    p_sy.add_argument("--t-crash", dest="t_crash", type=int, default=0)
    p_sy.add_argument("--emit", choices=("prices", "returns"), default="prices")
    p_sy.set_defaults(func=cmd_synth)

    p_gd = sub.add_parser("graphdist", help="distances between two saved trees")
    p_gd.add_argument("--tree-a", dest="tree_a", required=True)
    p_gd.add_argument("--tree-b", dest="tree_b", required=True)
    p_gd.add_argument("--out")
    p_gd.set_defaults(func=cmd_graphdist)

    p_mf = sub.add_parser("mfdfa", help="scaling-exponent report for series in a wide file")
    p_mf.add_argument("--input", required=True)
    p_mf.add_argument("--column", help="restrict to one series (default: all)")
    p_mf.add_argument("--q", default="1,2,4")
    p_mf.add_argument("--scales", help="comma-separated scales (default: automatic grid)")
    p_mf.add_argument("--order", type=int, default=2)
    p_mf.add_argument("--fit", help="fit range as smin:smax (default: all scales)")
    p_mf.add_argument("--out", required=True)
    p_mf.set_defaults(func=cmd_mfdfa)

    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except DegeneracyError as exc:
        print(f"degeneracy error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
