import itertools
import math

import numpy as np
import pytest

from apsk_isac.constellation import ApskDesign, TradeoffParams, build_apsk, build_psk, build_qam, build_tradeoff_family
from apsk_isac.geometry import fourth_moment_compare
from apsk_isac.sense_metrics import (
    SensingSpec,
    avg_crb_bound,
    avg_crb_monte_carlo,
    crb_conditional,
    variance_metric,
)


def exact_avg_crb(c, s):
    """Average conditional CRB by enumerating every block (small L only)."""
    e = c.energies
    tot = 0.0
    for blk in itertools.product(range(c.size), repeat=s.L):
        tot += s.sigma_s2 / (s.P * sum(e[i] for i in blk))
    return tot / c.size**s.L


def test_spec_validation():
    with pytest.raises(ValueError):
        SensingSpec(0.0)
    with pytest.raises(ValueError):
        SensingSpec(L=0)


def test_crb_conditional():
    s = SensingSpec(1.0, 1.0, 16)
    assert crb_conditional(np.ones(16), s) == pytest.approx(1 / 16)
    assert crb_conditional([0.5, 1.5], SensingSpec(1.0, 1.0, 2)) == pytest.approx(0.5)
    a = crb_conditional([0.3, 0.9, 2.0], SensingSpec(2.0, 1.0, 3))
    b = crb_conditional([0.3, 0.9, 2.0], SensingSpec(2.0, 2.0, 3))
    assert b == pytest.approx(a / 2)
    with pytest.raises(ValueError):
        crb_conditional([0.0, 0.0], s)


def test_bound_psk_exact():
    for L in (1, 8, 64, 100):
        s = SensingSpec(0.7, 1.3, L)
        assert avg_crb_bound(build_psk(5), s) == 0.7 / (1.3 * L)


def test_bound_qam16_plug_in():
    s = SensingSpec(1.0, 1.0, 64)
    assert avg_crb_bound(build_qam(4), s) == pytest.approx(1 / 64 + 0.32 / (64**2 * 0.2), rel=1e-12)


def test_bound_rejects_origin():
    pts = np.array([0, 1, 1j, -1]) * 1.0
    from apsk_isac.constellation import from_points

    c = from_points(pts)
    with pytest.raises(ValueError, match="origin"):
        avg_crb_bound(c, SensingSpec())


def test_mc_psk_degenerate():
    s = SensingSpec(1.0, 1.0, 64)
    est = avg_crb_monte_carlo(build_psk(4), s, 2000, seed=0)
    assert est.mean == pytest.approx(1 / 64, rel=1e-14)
    assert est.std_error == 0.0


@pytest.mark.parametrize("c", [build_qam(4), build_tradeoff_family(TradeoffParams(4, 2, 0.5, 0.5))])
def test_mc_matches_enumeration(c):
    s = SensingSpec(1.0, 1.0, 2)
    exact = exact_avg_crb(c, s)
    est = avg_crb_monte_carlo(c, s, 20_000, seed=1)
    assert abs(est.mean - exact) <= 4 * est.std_error
    assert exact <= avg_crb_bound(c, s)


def test_mc_determinism_and_validation():
    c = build_qam(4)
    s = SensingSpec(L=8)
    assert avg_crb_monte_carlo(c, s, 1000, seed=5) == avg_crb_monte_carlo(c, s, 1000, seed=5)
    with pytest.raises(ValueError):
        avg_crb_monte_carlo(c, s, 999)


@pytest.mark.parametrize("L", [8, 64, 512])
def test_jensen_floor_and_bound(L):
    s = SensingSpec(1.0, 1.0, L)
    for c in (build_qam(4), build_qam(6), build_tradeoff_family(TradeoffParams(6, 5, 0.5, 0.75))):
        est = avg_crb_monte_carlo(c, s, 5000, seed=L)
        assert est.mean >= s.floor - 3 * est.std_error
        assert est.mean <= avg_crb_bound(c, s) + 3 * est.std_error


def test_bound_excess_scales_as_inverse_square_L():
    c = build_qam(4)
    excess = {L: avg_crb_bound(c, SensingSpec(1, 1, L)) - 1 / L for L in (8, 64, 512)}
    for a, b in ((8, 64), (64, 512)):
        ratio = excess[a] / excess[b]
        assert (b / a) ** 2 / 1.2 <= ratio <= (b / a) ** 2 * 1.2


def test_variance_metric():
    assert variance_metric(build_psk(6)) == 0.0
    assert variance_metric(build_qam(4)) == pytest.approx(0.32, abs=1e-14)
    c = build_tradeoff_family(TradeoffParams(6, 2))
    ring = sum(n * r**4 for n, r in zip(c.design.ring_counts, c.ring_radii)) / 64 - 1
    assert variance_metric(c) == pytest.approx(ring, abs=1e-12)
    assert variance_metric(c) > 0


def test_bound_ordering_follows_fourth_moment_at_equal_delta():
    # inner radius 0.5 in both; outer radius fixed by unit mean energy
    a = build_apsk(ApskDesign(4, (4, 12), (0.5, math.sqrt(15 / 12))))
    b = build_apsk(ApskDesign(4, (8, 8), (0.5, math.sqrt(14 / 8))))
    assert a.min_energy == pytest.approx(b.min_energy, abs=1e-12)
    for L in (8, 64):
        s = SensingSpec(1.0, 1.0, L)
        order = np.sign(avg_crb_bound(a, s) - avg_crb_bound(b, s))
        assert order == fourth_moment_compare(a, b) != 0
