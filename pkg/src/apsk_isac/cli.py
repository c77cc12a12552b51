"""Command-line front end: ``apsk-isac {gen,metrics,sweep,verify}``.

CSV and JSON files are the canonical outputs; SVG figures are rendered next
to them. Option precedence is flag > ``--config`` JSON file > built-in default.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .comm_metrics import (
    DEFAULT_SAMPLES,
    ChannelSpec,
    estimate_mi,
    gap_upper_bound,
    gaussian_capacity,
    mi_lower_bound,
)
from .constellation import (
    DesignError,
    TradeoffParams,
    build_psk,
    build_qam,
    build_tradeoff_family,
    from_json,
    ring_count,
    to_json,
)
from .geometry import brute_force_dmin, min_distance
from .sense_metrics import SensingSpec, avg_crb_bound, avg_crb_monte_carlo, variance_metric
from .tradeoff import (
    SweepConfig,
    baseline_csv,
    default_workers,
    fmt,
    frontier_csv,
    grid,
    read_boundary_csv,
    sweep,
)

log = logging.getLogger("apsk_isac")

DEFAULTS = {
    "m": 6,
    "alpha": None,
    "b": 0.0,
    "c": 0.0,
    "rings": None,
    "snr_db": 10.0,
    "n_samples": DEFAULT_SAMPLES,
    "n_blocks": 10_000,
    "seed": 0,
    "L": 64,
    "sigma_s2": 1.0,
    "P": 1.0,
    "alpha_range": None,
    "grid": "0:0.25:2",
    "b_grid": None,
    "c_grid": None,
    "workers": None,
    "out_dir": ".",
    "scale": "full",
}

METRIC_COLUMNS = [
    "label", "m", "K", "snr_db", "d_min", "mi_bits", "mi_stderr", "mi_lower_bound",
    "gap_bound", "capacity", "variance", "min_energy", "L", "crb_bound", "crb_mc", "crb_mc_stderr",
]


class CliError(Exception):
    pass


def parse_range(text: str) -> tuple[int, int]:
    """``"2:33"`` -> (2, 33); a single integer gives a singleton range."""
    parts = text.split(":")
    if len(parts) == 1:
        return int(parts[0]), int(parts[0])
    if len(parts) != 2:
        raise CliError(f"bad integer range {text!r}, expected lo:hi")
    return int(parts[0]), int(parts[1])


def parse_grid(text: str) -> tuple[float, ...]:
    """``"start:step:stop"`` (inclusive) or a comma list of values."""
    if "," in text or ":" not in text:
        return tuple(float(v) for v in text.split(","))
    parts = [float(v) for v in text.split(":")]
    if len(parts) != 3 or parts[1] <= 0:
        raise CliError(f"bad grid {text!r}, expected start:step:stop")
    return grid(parts[0], parts[2], parts[1])


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over the optional config file over defaults."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            cfg.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from exc
    for k, v in vars(args).items():
        if v is not None and k not in ("func", "config"):
            cfg[k] = v
    return cfg


def _positive(cfg, *keys):
    for k in keys:
        if cfg.get(k) is not None and not cfg[k] > 0:
            raise CliError(f"--{k.replace('_', '-')} must be positive, got {cfg[k]}")


def _header(cfg: dict, keys) -> dict:
    return {k: cfg[k] for k in keys if cfg.get(k) is not None}


def constellation_from(cfg: dict):
    """Build the constellation described by the resolved options."""
    if cfg.get("input"):
        path = Path(cfg["input"])
        if not path.exists():
            raise CliError(f"input file not found: {path}")
        return from_json(path.read_text())
    m = int(cfg["m"])
    if cfg.get("psk"):
        return build_psk(m)
    if cfg.get("qam"):
        return build_qam(m)
    alpha = cfg.get("alpha")
    if alpha is None:
        raise CliError("give --alpha (with --b/--c), --psk, --qam or --input")
    alpha = int(alpha)
    if cfg.get("rings") is None and 2 ** (m - 1) + 1 < alpha < 2**m:
        # every alpha above 2^(m-1)+1 collapses to the same single ring
        raise CliError(
            f"alpha={alpha} gives K={ring_count(m, alpha)}: a single-ring PSK identical to "
            f"alpha={2 ** (m - 1) + 1}; use --psk or --alpha {2**m} for the PSK end point"
        )
    return build_tradeoff_family(TradeoffParams(m, alpha, float(cfg["b"]), float(cfg["c"]), cfg.get("rings")))


def cmd_gen(cfg: dict) -> int:
    c = constellation_from(cfg)
    out = Path(cfg.get("out") or f"{c.label.replace('/', '_').replace(' ', '')}.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(to_json(c) + "\n")
    if not cfg.get("no_plot"):
        from .plotting import plot_constellation

        plot_constellation(c, out.with_suffix(".svg"))
    print(f"wrote {out} ({c.size} points, K={c.K})")
    return 0


def metrics_row(c, cfg: dict) -> tuple[dict, dict | None]:
    ch = ChannelSpec.from_db(float(cfg["snr_db"]))
    s = SensingSpec(float(cfg["sigma_s2"]), float(cfg["P"]), int(cfg["L"]))
    report = min_distance(c) if c.design is not None else None
    d = report.d_min if report is not None else brute_force_dmin(c)
    est = estimate_mi(c, ch, int(cfg["n_samples"]), int(cfg["seed"]))
    crb = avg_crb_monte_carlo(c, s, int(cfg["n_blocks"]), int(cfg["seed"]))
    row = {
        "label": c.label, "m": c.m, "K": c.K, "snr_db": float(cfg["snr_db"]), "d_min": d,
        "mi_bits": est.value_bits, "mi_stderr": est.std_error_bits,
        "mi_lower_bound": mi_lower_bound(c, ch, d_min=d), "gap_bound": gap_upper_bound(c, ch, d_min=d),
        "capacity": gaussian_capacity(ch), "variance": variance_metric(c), "min_energy": c.min_energy,
        "L": s.L, "crb_bound": avg_crb_bound(c, s) if c.min_energy > 0 else math.nan,
        "crb_mc": crb.mean, "crb_mc_stderr": crb.std_error,
    }
    return row, (report.to_dict() if report is not None else None)


def cmd_metrics(cfg: dict) -> int:
    _positive(cfg, "n_samples", "n_blocks", "L", "sigma_s2", "P")
    c = constellation_from(cfg)
    row, report = metrics_row(c, cfg)
    buf = io.StringIO()
    for k, v in _header(cfg, ["snr_db", "n_samples", "n_blocks", "seed", "L", "sigma_s2", "P"]).items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    w.writerow([v if isinstance(v, str) else fmt(v) for v in (row[k] for k in METRIC_COLUMNS)])
    text = buf.getvalue()
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.get("json"):
        Path(cfg["json"]).write_text(json.dumps({"metrics": row, "distance": report}, indent=2) + "\n")
    return 0


def sweep_config(cfg: dict) -> SweepConfig:
    m = int(cfg["m"])
    ar = cfg.get("alpha_range")
    if ar is None:
        alpha_range = (2, 2 ** (m - 1) + 1)
    elif isinstance(ar, str):
        alpha_range = parse_range(ar)
    else:
        alpha_range = tuple(int(a) for a in ar)
    g = cfg["grid"]
    base = parse_grid(g) if isinstance(g, str) else tuple(float(v) for v in g)

    def pick(key):
        v = cfg.get(key)
        if v is None:
            return base
        return parse_grid(v) if isinstance(v, str) else tuple(float(x) for x in v)

    try:
        return SweepConfig(m, float(cfg["snr_db"]), alpha_range, pick("b_grid"), pick("c_grid"),
                           int(cfg["n_samples"]), int(cfg["seed"]))
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def cmd_sweep(cfg: dict) -> int:
    _positive(cfg, "n_samples")
    sc = sweep_config(cfg)
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    workers = int(cfg["workers"]) if cfg.get("workers") else default_workers()
    fs = sweep(sc, workers=workers)
    meta = sc.to_dict()
    (out / "frontier.csv").write_text(frontier_csv(fs, meta))
    if fs.baseline is not None:
        (out / "baseline.csv").write_text(baseline_csv(fs.baseline, meta))
    else:
        log.warning("m=%d is odd: no square-QAM time-sharing baseline written", sc.m)
    (out / "skipped.log").write_text(
        "".join(f"alpha={s.alpha} b={fmt(s.b)} c={fmt(s.c)}: {s.reason}\n" for s in fs.skipped)
    )
    if not cfg.get("no_plot"):
        from .plotting import plot_frontier

        boundary = read_boundary_csv(cfg["boundary"]) if cfg.get("boundary") else None
        plot_frontier(fs, out / "frontier.svg", boundary=boundary)
    print(f"{len(fs.points)} designs evaluated, {len(fs.skipped)} skipped, "
          f"{len(fs.frontier)} on the frontier -> {out}")
    return 0


def cmd_verify(cfg: dict) -> int:
    from .verify import SUITES, run_suites

    names = None
    if cfg.get("suite"):
        names = [n for part in cfg["suite"] for n in part.split(",") if n]
        unknown = [n for n in names if n not in SUITES]
        if unknown:
            raise CliError(f"unknown suite(s) {unknown}; choose from {', '.join(SUITES)}")
    overrides = {}
    if cfg.get("L_list"):
        overrides["crb"] = {"Ls": tuple(int(v) for v in str(cfg["L_list"]).split(","))}
    if cfg.get("dmin_scale") is not None:
        overrides["packing"] = {"dmin_scale": float(cfg["dmin_scale"])}
    results = run_suites(names, cfg["scale"], **overrides)
    for r in results:
        print(r.line())
    report = {"passed": all(r.passed for r in results), "scale": cfg["scale"],
              "suites": [r.to_dict() for r in results]}
    if cfg.get("report"):
        Path(cfg["report"]).write_text(json.dumps(report, indent=2, default=str) + "\n")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def _add_constellation_args(p):
    p.add_argument("--m", type=int, help="bits per symbol")
    p.add_argument("--alpha", type=int, help="ring-growth parameter of the tradeoff family")
    p.add_argument("--b", type=float, help="radius offset in f(k) = k - c*sqrt(k) + b")
    p.add_argument("--c", type=float, help="radius compression in f(k)")
    p.add_argument("--rings", type=int, help="override the ring count given by alpha")
    kind = p.add_mutually_exclusive_group()
    kind.add_argument("--psk", action="store_true", default=None)
    kind.add_argument("--qam", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apsk-isac", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a constellation as JSON (+ SVG scatter)")
    _add_constellation_args(p)
    p.add_argument("--input", help="constellation JSON to re-emit")
    p.add_argument("--out", help="output JSON path")
    p.add_argument("--no-plot", action="store_true", default=None)
    p.add_argument("--config")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("metrics", help="distance, rate and sensing metrics of one constellation")
    _add_constellation_args(p)
    p.add_argument("--input", help="constellation JSON")
    p.add_argument("--snr-db", dest="snr_db", type=float)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--n-blocks", dest="n_blocks", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--L", type=int, help="sensing block length")
    p.add_argument("--sigma-s2", dest="sigma_s2", type=float)
    p.add_argument("--P", type=float, help="transmit power")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--json", help="also write metrics and distance report as JSON")
    p.add_argument("--config")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep", help="sweep (alpha, b, c) and write frontier/baseline CSVs")
    p.add_argument("--m", type=int)
    p.add_argument("--snr-db", dest="snr_db", type=float)
    p.add_argument("--alpha", dest="alpha_range", help="alpha range lo:hi (default 2:2^(m-1)+1)")
    p.add_argument("--grid", help="b and c grid, start:step:stop or comma list")
    p.add_argument("--b-grid", dest="b_grid")
    p.add_argument("--c-grid", dest="c_grid")
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="worker processes (env APSK_ISAC_WORKERS)")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--boundary", help="external variance,rate_bits CSV drawn as an overlay")
    p.add_argument("--no-plot", action="store_true", default=None)
    p.add_argument("--config")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the property suites; exit 1 on any failure")
    p.add_argument("--suite", action="append", help="suite name(s), repeatable or comma-separated")
    p.add_argument("--scale", choices=["quick", "full"])
    p.add_argument("--L", dest="L_list", help="comma list of block lengths for the crb suite")
    p.add_argument("--dmin-scale", dest="dmin_scale", type=float, help=argparse.SUPPRESS)
    p.add_argument("--report", help="write a JSON report here")
    p.add_argument("--config")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    func = args.func
    try:
        cfg = resolve(args)
        return func(cfg)
    except (CliError, DesignError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
