"""Design-space sweep of the tradeoff APSK family and its Pareto frontier.

The frontier lives in the (symbol-energy variance, rate) plane: rate is
maximized, variance minimized. The PSK-QAM time-sharing segment is the
baseline it is compared against.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .comm_metrics import (
    DEFAULT_SAMPLES,
    ChannelSpec,
    MiEstimate,
    estimate_mi,
    gap_upper_bound,
)
from .constellation import DesignError, TradeoffParams, build_psk, build_qam, build_tradeoff_family
from .geometry import min_distance

log = logging.getLogger(__name__)

VAR_TIE_TOL = 1e-12
DEFAULT_GRID = tuple(0.25 * i for i in range(9))
WORKERS_ENV = "APSK_ISAC_WORKERS"

FRONTIER_COLUMNS = [
    "alpha", "b", "c", "K", "variance", "rate_bits", "rate_stderr",
    "d_min", "gap_bound", "pareto", "skipped_reason",
]
BASELINE_COLUMNS = ["lambda", "rate_bits", "variance"]

# labeled designs at m = 6; K is the tabulated ring count
REFERENCE_POINTS = {
    "A": dict(alpha=16, b=0.50, c=0.00, K=2),
    "B": dict(alpha=5, b=0.50, c=0.75, K=5),
    "C": dict(alpha=5, b=1.25, c=2.00, K=5),
    "D": dict(alpha=4, b=1.00, c=0.75, K=2),
    "E": dict(alpha=5, b=0.50, c=1.25, K=2),
    "F": dict(alpha=8, b=0.25, c=0.75, K=2),
}
REFERENCE_STRICT = ("A", "B", "C")


def fmt(x) -> str:
    """Fixed 12-significant-digit rendering used in every CSV."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return f"{float(x):.12g}"


def grid(start: float, stop: float, step: float) -> tuple[float, ...]:
    """Inclusive arithmetic grid, values rounded to kill float drift."""
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 10) for i in range(n))


@dataclass(frozen=True)
class SweepConfig:
    m: int
    snr_c_db: float
    alpha_range: tuple[int, int]
    b_grid: tuple[float, ...] = DEFAULT_GRID
    c_grid: tuple[float, ...] = DEFAULT_GRID
    n_samples: int = DEFAULT_SAMPLES
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.alpha_range
        if not self.b_grid or not self.c_grid:
            raise ValueError("b and c grids must be non-empty")
        if not 1 <= lo <= hi <= 2**self.m:
            raise ValueError(f"alpha range {self.alpha_range} must lie within [1, {2**self.m}]")

    @property
    def channel(self) -> ChannelSpec:
        return ChannelSpec.from_db(self.snr_c_db)

    def tuples(self):
        lo, hi = self.alpha_range
        for a in range(lo, hi + 1):
            for b in self.b_grid:
                for c in self.c_grid:
                    yield a, float(b), float(c)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "snr_c_db": self.snr_c_db,
            "alpha_range": list(self.alpha_range),
            "b_grid": list(self.b_grid),
            "c_grid": list(self.c_grid),
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class MetricPoint:
    params: TradeoffParams
    K: int
    rate: MiEstimate
    variance: float
    d_min: float
    gap_bound: float
    pareto: bool = False
    label: str = ""


@dataclass(frozen=True)
class SkippedTuple:
    alpha: int
    b: float
    c: float
    reason: str


@dataclass
class TimeSharingSegment:
    """Operating points ``lambda * PSK + (1 - lambda) * QAM``."""

    psk_rate: MiEstimate
    psk_variance: float
    qam_rate: MiEstimate
    qam_variance: float
    lambdas: np.ndarray

    @property
    def rates(self) -> np.ndarray:
        lam = self.lambdas
        return lam * self.psk_rate.value_bits + (1 - lam) * self.qam_rate.value_bits

    @property
    def variances(self) -> np.ndarray:
        lam = self.lambdas
        return lam * self.psk_variance + (1 - lam) * self.qam_variance

    def _lam(self, variance: float) -> float:
        span = self.qam_variance - self.psk_variance
        return float(np.clip((self.qam_variance - variance) / span, 0.0, 1.0))

    def rate_at(self, variance: float) -> float:
        lam = self._lam(variance)
        return lam * self.psk_rate.value_bits + (1 - lam) * self.qam_rate.value_bits

    def stderr_at(self, variance: float) -> float:
        lam = self._lam(variance)
        return math.hypot(lam * self.psk_rate.std_error_bits, (1 - lam) * self.qam_rate.std_error_bits)


@dataclass
class FrontierSet:
    points: list[MetricPoint]
    config: SweepConfig
    skipped: list[SkippedTuple] = field(default_factory=list)
    baseline: TimeSharingSegment | None = None

    @property
    def frontier(self) -> list[MetricPoint]:
        return sorted((p for p in self.points if p.pareto), key=lambda p: (p.variance, -p.rate.value_bits))


def tuple_seed(master: int, alpha: int, b: float, c: float) -> int:
    """64-bit seed that depends only on the master seed and the design tuple."""
    ss = np.random.SeedSequence([int(master), int(alpha), int(round(b * 100)), int(round(c * 100))])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def evaluate(p: TradeoffParams, ch: ChannelSpec, n_samples: int, seed: int, label: str = "") -> MetricPoint:
    c = build_tradeoff_family(p)
    d = min_distance(c).d_min
    rate = estimate_mi(c, ch, n_samples, seed)
    return MetricPoint(p, c.K, rate, c.moments[1], d, gap_upper_bound(c, ch, d_min=d), label=label)


def _evaluate_tuple(args):
    m, a, b, c, snr_db, n_samples, master = args
    try:
        p = TradeoffParams(m, a, b, c)
        return evaluate(p, ChannelSpec.from_db(snr_db), n_samples, tuple_seed(master, a, b, c))
    except DesignError as exc:
        return SkippedTuple(a, b, c, str(exc))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def pareto_flags(points: list[MetricPoint]) -> list[bool]:
    """Non-domination flags: lower variance and higher rate are better.

    Points within one combined standard error in rate and ``VAR_TIE_TOL`` in
    variance tie and never dominate each other.
    """
    if not points:
        return []
    v = np.array([p.variance for p in points])
    r = np.array([p.rate.value_bits for p in points])
    e = np.array([p.rate.std_error_bits for p in points])
    flags = []
    for i in range(len(points)):
        se = np.hypot(e, e[i])
        cand = (v <= v[i] + VAR_TIE_TOL) & (r >= r[i])
        tie = (np.abs(v - v[i]) <= VAR_TIE_TOL) & (r - r[i] <= se)
        strict = (v < v[i]) | (r > r[i])
        dom = cand & ~tie & strict
        dom[i] = False
        flags.append(not bool(dom.any()))
    return flags


def pareto_filter(points: list[MetricPoint]) -> list[MetricPoint]:
    """Non-dominated points, flagged, in ascending variance (stable)."""
    flags = pareto_flags(points)
    keep = [replace(p, pareto=True) for p, f in zip(points, flags) if f]
    return sorted(keep, key=lambda p: p.variance)


def sweep(cfg: SweepConfig, workers: int | None = None, baseline: bool = True) -> FrontierSet:
    """Evaluate every (alpha, b, c) tuple and flag the Pareto frontier.

    Results do not depend on ``workers``: each tuple has its own seed and the
    merge sorts on the tuple.
    """
    workers = default_workers() if workers is None else workers
    jobs = [(cfg.m, a, b, c, cfg.snr_c_db, cfg.n_samples, cfg.seed) for a, b, c in cfg.tuples()]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_evaluate_tuple, jobs, chunksize=8))
    else:
        results = [_evaluate_tuple(j) for j in jobs]

    points = [r for r in results if isinstance(r, MetricPoint)]
    skipped = [r for r in results if isinstance(r, SkippedTuple)]
    for s in skipped:
        log.debug("skipped alpha=%d b=%g c=%g: %s", s.alpha, s.b, s.c, s.reason)
    log.info("swept %d tuples: %d evaluated, %d skipped", len(results), len(points), len(skipped))

    points.sort(key=lambda p: p.params.key())
    flags = pareto_flags(points)
    points = [replace(p, pareto=f) for p, f in zip(points, flags)]
    fs = FrontierSet(points, cfg, skipped)
    if baseline and cfg.m % 2 == 0:
        fs.baseline = time_sharing_baseline(cfg.m, cfg.m, cfg.channel, cfg.n_samples, cfg.seed)
    return fs


def time_sharing_baseline(
    m_psk: int,
    m_qam: int,
    ch: ChannelSpec,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    n_lambda: int = 21,
) -> TimeSharingSegment:
    qam = build_qam(m_qam)
    psk = build_psk(m_psk)
    seeds = np.random.SeedSequence([int(seed), m_psk, m_qam]).generate_state(2, dtype=np.uint64)
    return TimeSharingSegment(
        estimate_mi(psk, ch, n_samples, int(seeds[0])),
        psk.moments[1],
        estimate_mi(qam, ch, n_samples, int(seeds[1])),
        qam.moments[1],
        np.linspace(0.0, 1.0, n_lambda),
    )


def reference_points(
    ch: ChannelSpec,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    override_rings: bool = False,
) -> list[MetricPoint]:
    """Evaluate the six labeled designs at m = 6.

    Ring counts of A-C must match the table. D-F are built with the
    formula's ring count unless ``override_rings`` forces the tabulated one.
    """
    out = []
    for label, row in REFERENCE_POINTS.items():
        rings = row["K"] if override_rings else None
        p = TradeoffParams(6, row["alpha"], row["b"], row["c"], rings=rings)
        if label in REFERENCE_STRICT and p.K != row["K"]:
            raise DesignError(f"point {label}: computed K={p.K}, table lists {row['K']}")
        if p.K != row["K"]:
            log.info("point %s: computed K=%d, table lists %d", label, p.K, row["K"])
        out.append(evaluate(p, ch, n_samples, tuple_seed(seed, p.alpha, p.b, p.c), label=label))
    return out


@dataclass(frozen=True)
class Advantage:
    variance: float
    frontier_rate: float
    baseline_rate: float
    combined_stderr: float

    @property
    def margin(self) -> float:
        return self.frontier_rate - self.baseline_rate


def frontier_advantage(fs: FrontierSet, baseline: TimeSharingSegment | None = None) -> list[Advantage]:
    """Frontier rate minus time-sharing rate at each interior frontier variance."""
    baseline = baseline or fs.baseline
    out = []
    for p in fs.frontier:
        if not baseline.psk_variance < p.variance < baseline.qam_variance:
            continue
        se = math.hypot(p.rate.std_error_bits, baseline.stderr_at(p.variance))
        out.append(Advantage(p.variance, p.rate.value_bits, baseline.rate_at(p.variance), se))
    return out


def _header(meta: dict | None) -> str:
    if not meta:
        return ""
    return "".join(f"# {k}={v}\n" for k, v in meta.items())


def frontier_csv(fs: FrontierSet, meta: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(_header(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FRONTIER_COLUMNS)
    rows = []
    for p in fs.points:
        key = p.params.key()
        rows.append((key, [
            p.params.alpha, p.params.b, p.params.c, p.K, p.variance, p.rate.value_bits,
            p.rate.std_error_bits, p.d_min, p.gap_bound, p.pareto, None,
        ]))
    for s in fs.skipped:
        rows.append(((s.alpha, s.b, s.c), [s.alpha, s.b, s.c, None, None, None, None, None, None, None, s.reason]))
    rows.sort(key=lambda r: r[0])
    for _, row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def baseline_csv(seg: TimeSharingSegment, meta: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(_header(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BASELINE_COLUMNS)
    for lam, r, v in zip(seg.lambdas, seg.rates, seg.variances):
        w.writerow([fmt(float(lam)), fmt(float(r)), fmt(float(v))])
    return buf.getvalue()


def read_boundary_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Load an external (variance, rate_bits) boundary for plotting only."""
    var, rate = [], []
    with open(path, newline="") as fh:
        rows = csv.DictReader(line for line in fh if not line.startswith("#"))
        for row in rows:
            var.append(float(row["variance"]))
            rate.append(float(row["rate_bits"]))
    return np.asarray(var), np.asarray(rate)
