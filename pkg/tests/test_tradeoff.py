import csv
import io
import math

import numpy as np
import pytest

from apsk_isac.comm_metrics import ChannelSpec, MiEstimate, estimate_mi
from apsk_isac.constellation import DesignError, TradeoffParams, build_qam
from apsk_isac.tradeoff import (
    BASELINE_COLUMNS,
    FRONTIER_COLUMNS,
    REFERENCE_POINTS,
    MetricPoint,
    SweepConfig,
    baseline_csv,
    fmt,
    frontier_advantage,
    frontier_csv,
    grid,
    pareto_filter,
    pareto_flags,
    read_boundary_csv,
    reference_points,
    sweep,
    time_sharing_baseline,
    tuple_seed,
)


def mp(rate, var, se=0.0, alpha=1):
    return MetricPoint(TradeoffParams(4, alpha), 1, MiEstimate(rate, se, 1000, 0), var, 1.0, 0.0)


@pytest.fixture(scope="module")
def small_sweep():
    cfg = SweepConfig(4, 5.0, (1, 16), grid(0, 2, 0.5), grid(0, 2, 0.5), n_samples=3000, seed=11)
    return sweep(cfg, workers=1)


def test_grid_helper():
    assert grid(0, 2, 0.25) == (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)
    assert grid(0, 1, 0.1)[-1] == 1.0


def test_pareto_hand_examples():
    pts = [mp(1, 0), mp(2, 0.5), mp(1.5, 0.6)]
    assert pareto_flags(pts) == [True, True, False]
    front = pareto_filter(pts)
    assert [p.variance for p in front] == [0, 0.5]
    assert all(p.pareto for p in front)

    assert pareto_flags([mp(1.2, 0.3)]) == [True]
    assert pareto_flags([mp(1.2, 0.3), mp(1.2, 0.3)]) == [True, True]


def test_pareto_noise_tie():
    # same variance, rates within one combined stderr: both kept
    assert pareto_flags([mp(2.0, 0.1, 0.01), mp(2.005, 0.1, 0.01)]) == [True, True]
    # beyond the stderr the lower one is dominated
    assert pareto_flags([mp(2.0, 0.1, 0.001), mp(2.1, 0.1, 0.001)]) == [False, True]


def test_pareto_random_exhaustive(rng):
    pts = [mp(float(r), float(v)) for r, v in zip(rng.uniform(0, 4, 200), rng.uniform(0, 1, 200))]
    flags = pareto_flags(pts)
    for p, f in zip(pts, flags):
        dominated = any(q.rate.value_bits >= p.rate.value_bits and q.variance <= p.variance
                        and (q.rate.value_bits > p.rate.value_bits or q.variance < p.variance) for q in pts)
        assert f == (not dominated)
    front = pareto_filter(pts)
    rates = [p.rate.value_bits for p in front]
    assert rates == sorted(rates)


def test_tuple_seed_is_pure():
    assert tuple_seed(1, 5, 0.5, 0.75) == tuple_seed(1, 5, 0.5, 0.75)
    assert len({tuple_seed(1, a, b, 0.0) for a in range(1, 5) for b in (0.0, 0.25)}) == 8
    assert 0 <= tuple_seed(0, 1, 0, 0) < 2**64


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(4, 5.0, (0, 4))
    with pytest.raises(ValueError):
        SweepConfig(4, 5.0, (1, 17))
    with pytest.raises(ValueError):
        SweepConfig(4, 5.0, (1, 4), b_grid=())


def test_sweep_invariants(small_sweep):
    fs = small_sweep
    assert len(fs.points) + len(fs.skipped) == 16 * 25
    assert all(s.reason for s in fs.skipped)
    keys = [p.params.key() for p in fs.points]
    assert keys == sorted(keys)
    front = fs.frontier
    # PSK (alpha = 16 at m = 4) has zero variance and belongs to the frontier
    assert any(p.variance == 0.0 for p in front)
    for p in front:
        assert not any(
            q.variance < p.variance and q.rate.value_bits > p.rate.value_bits for q in fs.points
        )
    rates = [p.rate.value_bits for p in front]
    assert all(b >= a - 1e-12 or abs(front[i].variance - front[i + 1].variance) <= 1e-12
               for i, (a, b) in enumerate(zip(rates, rates[1:])))
    for p in fs.points:
        assert p.variance >= 0
        assert 0 <= p.rate.value_bits <= 4 + 3 * p.rate.std_error_bits


def test_sweep_seeds_do_not_depend_on_grid(small_sweep):
    cfg = SweepConfig(4, 5.0, (3, 3), (0.5,), (0.5,), n_samples=3000, seed=11)
    single = sweep(cfg, workers=1, baseline=False).points[0]
    match = [p for p in small_sweep.points if p.params.key() == (3, 0.5, 0.5)][0]
    assert single.rate == match.rate


def test_sweep_parallel_equals_serial():
    cfg = SweepConfig(4, 5.0, (2, 5), (0.0, 1.0), (0.0, 0.5), n_samples=2000, seed=2)
    a = frontier_csv(sweep(cfg, workers=1))
    b = frontier_csv(sweep(cfg, workers=2))
    assert a == b


def test_singleton_psk_grid():
    cfg = SweepConfig(4, 5.0, (16, 16), (0.0,), (0.0,), n_samples=2000)
    fs = sweep(cfg, workers=1)
    assert len(fs.frontier) == 1
    p = fs.frontier[0]
    assert p.K == 1 and p.variance == 0.0


def test_time_sharing_baseline():
    ch = ChannelSpec.from_db(10)
    seg = time_sharing_baseline(4, 4, ch, 5000, seed=1)
    lam = seg.lambdas
    assert lam[0] == 0.0 and lam[-1] == 1.0
    assert seg.variances[-1] == 0.0
    assert seg.variances[0] == pytest.approx(0.32)
    assert seg.rates[0] == seg.qam_rate.value_bits
    assert seg.rates[-1] == seg.psk_rate.value_bits
    mid = len(lam) // 2
    assert lam[mid] == 0.5
    assert seg.rates[mid] == pytest.approx((seg.rates[0] + seg.rates[-1]) / 2)
    assert seg.variances[mid] == pytest.approx(0.16)
    assert seg.rate_at(0.16) == pytest.approx(seg.rates[mid])
    # QAM endpoint equals an independent estimate within Monte Carlo error
    ref = estimate_mi(build_qam(4), ch, 20_000, seed=77)
    assert abs(ref.value_bits - seg.qam_rate.value_bits) <= 3 * math.hypot(ref.std_error_bits, seg.qam_rate.std_error_bits)
    with pytest.raises(DesignError):
        time_sharing_baseline(4, 5, ch, 2000)


def test_reference_points():
    pts = reference_points(ChannelSpec.from_db(10), n_samples=2000)
    byl = {p.label: p for p in pts}
    assert [byl[k].K for k in "ABC"] == [2, 5, 5]
    assert [byl[k].K for k in "DEF"] == [5, 5, 4]
    forced = {p.label: p.K for p in reference_points(ChannelSpec.from_db(10), n_samples=2000, override_rings=True)}
    assert forced == {k: v["K"] for k, v in REFERENCE_POINTS.items()}


def test_frontier_advantage_uses_interior_levels(small_sweep):
    adv = frontier_advantage(small_sweep)
    base = small_sweep.baseline
    assert all(base.psk_variance < a.variance < base.qam_variance for a in adv)
    for a in adv:
        assert a.margin == pytest.approx(a.frontier_rate - base.rate_at(a.variance))


def test_csv_layout(small_sweep, tmp_path):
    text = frontier_csv(small_sweep, meta={"m": 4, "seed": 11})
    lines = text.splitlines()
    assert lines[0] == "# m=4" and lines[1] == "# seed=11"
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[2:]))))
    assert list(rows[0]) == FRONTIER_COLUMNS
    assert len(rows) == 16 * 25
    skipped = [r for r in rows if r["skipped_reason"]]
    assert len(skipped) == len(small_sweep.skipped)
    assert all(r["rate_bits"] == "" for r in skipped)
    assert {r["pareto"] for r in rows if not r["skipped_reason"]} <= {"0", "1"}

    b = baseline_csv(small_sweep.baseline)
    assert b.splitlines()[0].split(",") == BASELINE_COLUMNS

    path = tmp_path / "mba.csv"
    path.write_text("# external\nvariance,rate_bits\n0,1.5\n0.2,1.9\n")
    var, rate = read_boundary_csv(path)
    np.testing.assert_array_equal(var, [0, 0.2])


def test_fmt():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(True) == "1" and fmt(3) == "3" and fmt(None) == ""
