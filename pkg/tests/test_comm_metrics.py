import math

import numpy as np
import pytest

from apsk_isac.comm_metrics import (
    LOG2_2PIE_4,
    ChannelSpec,
    MiEstimate,
    constant_gap_check,
    estimate_mi,
    gap_upper_bound,
    gaussian_capacity,
    mi_lower_bound,
    size_for_snr,
)
from apsk_isac.constellation import TradeoffParams, build_psk, build_qam, build_tradeoff_family
from apsk_isac.geometry import brute_force_dmin

N = 50_000


def mi_quadrature(points, snr, order=48):
    """I(X;Y) for uniform input by tensor Gauss-Hermite quadrature over the noise."""
    t, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    u, v = np.meshgrid(t, t, indexing="ij")
    z = (u + 1j * v).ravel() / math.sqrt(2)
    wz = np.outer(w, w).ravel()
    s = math.sqrt(snr) * np.asarray(points)
    acc = 0.0
    for x in s:
        y = x + z
        log_num = -np.abs(z) ** 2
        d = -np.abs(y[:, None] - s[None, :]) ** 2
        top = d.max(axis=1)
        log_den = top + np.log(np.exp(d - top[:, None]).mean(axis=1))
        acc += np.sum(wz * (log_num - log_den))
    return acc / len(s) / math.log(2)


def test_channel_spec():
    ch = ChannelSpec.from_db(10)
    assert ch.snr_c == pytest.approx(10.0)
    assert ch.snr_c_db == pytest.approx(10.0)
    with pytest.raises(ValueError):
        ChannelSpec(0.0)


@pytest.mark.parametrize("snr_db, expected", [(10, math.log2(11)), (0, 1.0), (5, math.log2(1 + 10**0.5))])
def test_gaussian_capacity(snr_db, expected):
    assert gaussian_capacity(ChannelSpec.from_db(snr_db)) == pytest.approx(expected, abs=1e-12)
    assert gaussian_capacity(ChannelSpec.from_db(10)) == pytest.approx(3.4594, abs=1e-4)


@pytest.mark.parametrize("c, snr_db", [(build_psk(2), 5.0), (build_psk(3), 8.0), (build_qam(4), 10.0)])
def test_mc_matches_quadrature(c, snr_db):
    snr = 10 ** (snr_db / 10)
    est = estimate_mi(c, ChannelSpec(snr), N, seed=3)
    ref = mi_quadrature(c.points, snr)
    assert abs(est.value_bits - ref) <= 4 * est.std_error_bits


def test_high_snr_saturates_to_entropy():
    est = estimate_mi(build_psk(2), ChannelSpec.from_db(30), N, seed=1)
    assert abs(est.value_bits - 2.0) <= 3 * est.std_error_bits + 1e-12


def test_low_snr_goes_to_zero():
    for c in (build_psk(2), build_qam(4), build_tradeoff_family(TradeoffParams(6, 5, 0.5, 0.75))):
        est = estimate_mi(c, ChannelSpec(1e-6), N, seed=2)
        assert abs(est.value_bits) <= 3 * est.std_error_bits
        assert abs(est.value_bits) < 1e-4


def test_determinism_and_seed_recorded():
    c = build_qam(4)
    a = estimate_mi(c, ChannelSpec.from_db(7), 5000, seed=42)
    b = estimate_mi(c, ChannelSpec.from_db(7), 5000, seed=42)
    assert a == b
    assert a.seed == 42 and a.n_samples == 5000
    assert estimate_mi(c, ChannelSpec.from_db(7), 5000, seed=43) != a


def test_sample_count_validated():
    with pytest.raises(ValueError):
        estimate_mi(build_psk(2), ChannelSpec(1.0), 999)


def test_entropy_ceiling_and_monotone_in_snr():
    c = build_tradeoff_family(TradeoffParams(5, 3, 0.5, 0.5))
    prev = None
    for snr_db in (-5, 0, 5, 10, 15, 20, 25):
        est = estimate_mi(c, ChannelSpec.from_db(snr_db), 20_000, seed=9)
        assert 0 <= est.value_bits + 3 * est.std_error_bits
        assert est.value_bits <= c.m + 3 * est.std_error_bits
        if prev is not None:
            assert est.value_bits >= prev.value_bits - 3 * math.hypot(est.std_error_bits, prev.std_error_bits)
        prev = est


def test_rotation_invariance():
    c = build_tradeoff_family(TradeoffParams(6, 8, 0.25, 0.75))
    ch = ChannelSpec.from_db(10)
    a = estimate_mi(c, ch, N, seed=4)
    b = estimate_mi(c.rotated(0.377), ch, N, seed=5)
    assert abs(a.value_bits - b.value_bits) <= 3 * math.hypot(a.std_error_bits, b.std_error_bits)


def test_lower_bound_qpsk_formula():
    ch = ChannelSpec.from_db(10)
    expected = 2 - math.log2(2 * math.pi * math.e / 4) - math.log2(1 + 16 / (math.pi * 10 * 2))
    assert mi_lower_bound(build_psk(2), ch) == pytest.approx(expected, abs=1e-12)
    # infinite-SNR limit
    assert mi_lower_bound(build_psk(2), ChannelSpec(1e15)) == pytest.approx(2 - LOG2_2PIE_4, abs=1e-12)


def test_gap_bound_qpsk_formula_and_consistency():
    ch = ChannelSpec.from_db(10)
    s, d2 = 10.0, 2.0
    expected = math.log2(2 * math.pi * math.e / 4) + math.log2(
        (1 + s + 16 / (math.pi * d2 * s) + 16 / (math.pi * d2)) / 4
    )
    c = build_psk(2)
    assert gap_upper_bound(c, ch) == pytest.approx(expected, abs=1e-12)
    assert gap_upper_bound(c, ch) == pytest.approx(gaussian_capacity(ch) - mi_lower_bound(c, ch), abs=1e-12)


def test_gap_bound_decreases_with_distance():
    c = build_qam(4)
    ch = ChannelSpec.from_db(10)
    d = brute_force_dmin(c)
    assert gap_upper_bound(c, ch, d_min=2 * d) < gap_upper_bound(c, ch, d_min=d)
    with pytest.raises(ValueError):
        mi_lower_bound(c, ch, d_min=0.0)


@pytest.mark.parametrize("c", [build_psk(2), build_psk(3), build_qam(4), build_qam(6),
                               build_tradeoff_family(TradeoffParams(6, 16, 0.5, 0.0))])
@pytest.mark.parametrize("snr_db", [0.0, 10.0])
def test_bound_orderings(c, snr_db):
    ch = ChannelSpec.from_db(snr_db)
    est = estimate_mi(c, ch, 20_000, seed=8)
    slack = 3 * est.std_error_bits
    assert mi_lower_bound(c, ch) <= est.value_bits + slack
    assert gaussian_capacity(ch) - est.value_bits <= gap_upper_bound(c, ch) + slack


def test_size_for_snr():
    assert [size_for_snr(s) for s in (5, 10, 15, 20)] == [4, 6, 7, 9]


def test_constant_gap_single_snr_and_bound():
    rep = constant_gap_check(2, [10.0], n_samples=20_000)
    assert rep.spread == 0.0
    row = rep.rows[0]
    assert row.m == 6 and row.K == 8
    assert row.gap <= row.gap_bound + 3 * row.mi.std_error_bits
    assert isinstance(row.mi, MiEstimate)
