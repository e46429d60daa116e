from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tinic import gic_complex as gc, oracles, schemes
from tinic.dic import DicParams
from tinic.errors import DegenerateConstellation, InvalidArgument, SizeLimitExceeded

P_REF = DicParams(16, 12, 10, 14)
P_EX = DicParams.from_weak_order(8, 7, 6, 5)


def _ref_scheme():
    return schemes.build(P_REF, "weak1-2a", (0, 0))


def _naive_dmin(own, other, theta):
    pts = oracles.enumerate_sum(own.raw_layers() + other.rotated(theta).raw_layers()).points
    return oracles.pairwise_min_distance(pts)


def test_channel_basics():
    ch = gc.ComplexChannel.from_linear(2 ** 8.5, 2 ** 7, 2 ** 6.25, 2 ** 5, phases=(0.1, 0.4, 0.2, 0.3))
    assert ch.params == P_EX
    assert ch.relative_phase(1) == pytest.approx(0.3)
    assert ch.relative_phase(2) == pytest.approx((0.2 - 0.3) % (2 * math.pi))
    assert gc.ComplexChannel.from_db(10, 0, 0, 0).gain(1, 1) == pytest.approx(math.log2(10))
    with pytest.raises(InvalidArgument):
        gc.ComplexChannel.from_linear(1, 1, -1, 1)


def test_translation_layers():
    x1, x2 = gc.translate_to_qam(_ref_scheme(), gc.ComplexChannel.from_exponents(P_REF))
    assert [(t.layer.sub_id, t.layer.order_exponent) for t in x1.terms] == [("F11", 6), ("F13", 2), ("F16", 6)]
    assert [(t.layer.sub_id, t.layer.order_exponent) for t in x2.terms] == [("F21", 2), ("F24", 2)]
    assert x1.entropy_bits() == 14 and x2.entropy_bits() == 4
    # replicated F13: two copies at rows-below 8 and 6, q = 16
    f13 = x1.terms[1]
    assert f13.layer.power_exponents == (8, 6)
    assert f13.scale == pytest.approx(2 ** -4 + 2 ** -5)


def test_transmit_energy_bounded():
    for x in gc.translate_to_qam(_ref_scheme(), gc.ComplexChannel.from_exponents(P_REF)):
        e = gc.transmit_energy(x)
        assert e <= 1
        brute = float(np.mean(np.abs(oracles.enumerate_sum(x.raw_layers()).points) ** 2))
        assert e == pytest.approx(brute, rel=1e-9)


def test_rectangular_qam_energy():
    layer = gc.QamLayer(1, "A", 3, (0,))
    x = gc.QamSuperposition((gc.QamTerm(layer, 1.0),))
    pts = layer.points()
    assert len(pts) == 8
    assert gc.transmit_energy(x) == pytest.approx(float(np.mean(np.abs(pts) ** 2)))


@settings(max_examples=80, deadline=None)
@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.floats(0, 2 * math.pi), st.floats(0, 0.99), st.floats(0, 0.99))
def test_expanded_distance_matches_direct(d_own, d_int, theta, b_own, b_int):
    direct = abs(2 ** (b_own / 2) * d_own + 2 ** (b_int / 2) * np.exp(1j * theta) * d_int) ** 2
    assert gc.phase_distance_sq(d_own, d_int, theta, b_own, b_int) == pytest.approx(direct, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("rx", [1, 2])
def test_phase_distance_matches_brute_force(rx):
    p = DicParams.from_weak_order(10, 9, 8, 6)
    s = schemes.build(p, "weak1-2a", (0, 0))
    ch = gc.ComplexChannel.from_exponents(p, (0.3, 0.7, 0.1, 0.5))
    own, other = gc.receiver_view(gc.translate_to_qam(s, ch), rx, ch)
    pd = gc.PhaseDistance(own, other)
    thetas = np.random.default_rng(rx).uniform(0, 2 * math.pi, 12)
    got = pd.many(thetas)
    for th, d in zip(thetas, got):
        assert d == pytest.approx(_naive_dmin(own, other, th), rel=1e-9)
    if rx == 1:
        # own differences outgrow the cap, interferer ones do not: the fallback must agree
        shifted = gc.PhaseDistance(own, other, diff_cap=100)
        assert shifted.mode == "point-shift"
        assert shifted.many(thetas[:4]) == pytest.approx(got[:4], rel=1e-9)


def test_common_phase_rotation_invariant():
    s = _ref_scheme()
    ch = gc.ComplexChannel.from_exponents(P_REF, phases=(0.3, 1.1, 0.2, 2.0))
    rot = ch.with_phases((0.3 + 0.9, 1.1 + 0.9, 0.2, 2.0))
    assert gc.min_distance_at_phase(1, s, ch) == pytest.approx(gc.min_distance_at_phase(1, s, rot), rel=1e-12)


def test_no_interferer_uses_own_spacing():
    layer = gc.QamLayer(1, "A", 4, (0,))
    own = gc.QamSuperposition((gc.QamTerm(layer, 2.0),))
    pd = gc.PhaseDistance(own, gc.QamSuperposition(()))
    assert pd.many(np.linspace(0, 6, 5)) == pytest.approx([2.0] * 5)
    with pytest.raises(InvalidArgument):
        gc.PhaseDistance(gc.QamSuperposition(()), gc.QamSuperposition(()))


def test_size_caps():
    own, other = gc.layered_outage_config((6, 6, 6))
    with pytest.raises(SizeLimitExceeded):
        gc.PhaseDistance(own, other, diff_cap=10)
    with pytest.raises(SizeLimitExceeded):
        gc.PhaseDistance(own, other, diff_cap=1000, scan_cap=10)


def test_outage_curve_monotone_and_zero_target():
    pd = gc.PhaseDistance(*gc.layered_outage_config((2, 2, 2)))
    curve = gc.outage_curve(pd, [0.0, 0.05, 0.1, 0.3, 0.6, 1.0, 2.0], 2000, seed=1)
    probs = [pr for _, pr in curve]
    assert probs[0] == 0.0
    assert probs == sorted(probs)
    assert probs[-1] == 1.0  # unit spacing of layer 1 caps the distance
    with pytest.raises(InvalidArgument):
        gc.outage_curve(pd, [0.1], 0, seed=1)


def test_outage_deterministic_in_seed():
    pd = gc.PhaseDistance(*gc.layered_outage_config((2, 2, 2)))
    assert gc.outage_curve(pd, [0.2], 500, seed=4) == gc.outage_curve(pd, [0.2], 500, seed=4)
    assert not np.array_equal(gc.phase_draws(10, 4), gc.phase_draws(10, 5))


def test_dmin_at_outage_quantile():
    d = np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    assert gc.dmin_at_outage(d, 0.1) == pytest.approx(0.1)
    assert gc.dmin_at_outage(d, 0.5) == pytest.approx(0.5)


def test_equal_doubling_keeps_distance():
    # doubling m1 and m2 together is what moves d; growing m3 with m1, m2 fixed barely does
    runs = {}
    for m in [(2, 2, 2), (2, 2, 6)]:
        pd = gc.PhaseDistance(*gc.layered_outage_config(m))
        runs[m] = gc.dmin_at_outage(pd.many(gc.phase_draws(3000, 0)), 1e-2)
    assert runs[(2, 2, 6)] == pytest.approx(runs[(2, 2, 2)], rel=0.05)


def test_noiseless_limit_of_mutual_information():
    pts = oracles.qam_points(2) * 40.0
    est = gc.mc_mutual_information(pts, np.zeros(1), 1.0, 0.0, 500, np.random.default_rng(0))
    assert est.bits == pytest.approx(2.0, abs=1e-6)


def test_mutual_information_below_entropy():
    pts = oracles.qam_points(4)
    oth = oracles.qam_points(2) * 0.7
    est = gc.mc_mutual_information(pts, oth, 1.0, np.exp(0.4j), 2000, np.random.default_rng(1))
    assert 0 < est.bits <= 4 + 3 * est.stderr
    with pytest.raises(SizeLimitExceeded):
        gc.mc_mutual_information(pts, oth, 1.0, 1.0, 10, np.random.default_rng(1), cap=10)


def test_mixture_pruning_matches_full_sum():
    from scipy.special import logsumexp
    rng = np.random.default_rng(2)
    pts = oracles.enumerate_sum([(1.0, oracles.qam_points(6)), (9.5 * np.exp(0.3j), oracles.qam_points(4))]).points
    y = rng.normal(size=50) * 20 + 1j * rng.normal(size=50) * 20
    full = logsumexp(-np.abs(y[:, None] - pts[None, :]) ** 2, axis=1)
    assert gc._Mixture(pts).logsum(y) == pytest.approx(full, rel=1e-9, abs=1e-9)


def test_discrete_input_bound_random_constellations():
    res = gc.discrete_input_bound_verify(count=8, samples=1000)
    assert res["passed"], res["cases"]


def test_rate_bound_sign_and_zero_distance():
    lb = gc.rate_lower_bound_complex(10, math.inf)
    assert lb == pytest.approx(10 - math.log2(2 * math.pi * math.e / 4) + math.log2(7 / 3))
    with pytest.raises(DegenerateConstellation):
        gc.rate_lower_bound_complex(10, 0.0)


def test_gaussian_tin_example():
    r1, r2 = gc.gaussian_tin_rates(gc.ComplexChannel.from_exponents(P_REF))
    assert r1 == pytest.approx(math.log2(1 + 2 ** 16 / (1 + 2 ** 12)))
    assert r2 == pytest.approx(math.log2(1 + 2 ** 14 / (1 + 2 ** 10)))
    assert 4.0 < r2 < 4.1


def test_zero_phase_simulation():
    s = schemes.build(P_EX, "weak1-2a", (0, 0))
    ch = gc.ComplexChannel.from_exponents(P_EX)
    sim = gc.rate_pair_simulation(s, ch, 2, 200, seed=0, zero_phase=True)
    assert all(r.phases == (0.0, 0.0, 0.0, 0.0) for r in sim.per_phase)
    assert all(r.dmin[0] > 0 for r in sim.per_phase)


def test_simulation_reproducible_across_workers():
    s = schemes.build(P_EX, "weak1-2a", (0, 0))
    ch = gc.ComplexChannel.from_exponents(P_EX)
    one = gc.rate_pair_simulation(s, ch, 4, 100, seed=7, workers=1)
    two = gc.rate_pair_simulation(s, ch, 4, 100, seed=7, workers=2)
    assert [r.mi for r in one.per_phase] == [r.mi for r in two.per_phase]
    assert one.mean == two.mean
