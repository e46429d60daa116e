from __future__ import annotations

import math
import random

import numpy as np
import pytest

from tinic import gic_real as gr, oracles, schemes
from tinic.dic import DicParams
from tinic.errors import DegenerateConstellation, InvalidArgument, InvalidSuperposition, RegimeMismatch

P_EX = DicParams.from_weak_order(8, 7, 6, 5)
P_C1 = DicParams.from_weak_order(10, 6, 5, 4)


def _random_instance(rng, max_exponent=12):
    bid = rng.choice(sorted(schemes.REGISTRY))
    p = schemes.random_params(bid, rng, max_exponent=max_exponent)
    t = rng.choice(list(schemes.legal_tunables(p, bid)))
    ch = gr.RealChannel.from_exponents(p, *[rng.random() for _ in range(4)])
    return schemes.build(p, bid, t), ch


def test_channel_constructors():
    ch = gr.RealChannel.from_linear(4 ** 8.5, 4 ** 7, 4 ** 6.25, 4 ** 5)
    assert ch.params == P_EX
    assert ch.beta(1, 1) == pytest.approx(0.5) and ch.beta(1, 2) == pytest.approx(0.25)
    db = gr.RealChannel.from_db(30, 20, 10, 0)
    assert db.gain(1, 1) == pytest.approx(0.5 * math.log2(1000))
    with pytest.raises(InvalidArgument):
        gr.RealChannel.from_linear(0, 1, 1, 1)
    with pytest.raises(InvalidArgument):
        gr.RealChannel.from_exponents(P_EX, 1.0)


def test_weak_link_clamps_to_zero():
    ch = gr.RealChannel.from_linear(100, 100, 0.5, 0.5)
    assert ch.n(1, 2) == 0 and ch.beta(1, 2) == 0.0


def test_example_power_adjustment():
    s = schemes.build(P_EX, "weak1-2a", (0, 0))
    ch = gr.RealChannel.from_exponents(P_EX, 0.6, 0.3, 0.2, 0.1)
    rho = gr.power_adjustments(s, ch)
    # the replicated F13 aligns with F21 at receiver 1; the weaker of the two links is boosted
    assert rho[(1, "F13")] == 1.0
    assert rho[(2, "F21")] == pytest.approx(2 ** (0.6 - 0.3))
    flipped = gr.RealChannel.from_exponents(P_EX, 0.3, 0.6, 0.2, 0.1)
    rho = gr.power_adjustments(s, flipped)
    assert rho[(1, "F13")] == pytest.approx(2 ** 0.3) and rho[(2, "F21")] == 1.0


def test_example_receiver_scales():
    s = schemes.build(P_EX, "weak1-2a", (0, 0))
    ch = gr.RealChannel.from_exponents(P_EX)
    above, below = gr.split_noise_level(gr.translate_to_pam(s, ch), 1, ch)
    scales = {(t.layer.owner, t.layer.sub_id): t.scale for t in above.terms}
    assert scales == {(1, "F11"): 32.0, (1, "F13"): 24.0, (1, "F16"): 1.0, (2, "F21"): 16.0}
    # F24 of user 2 sits right on the noise floor at receiver 1
    assert [(t.layer.sub_id, t.scale) for t in below.terms] == [("F24", 0.5)]


def test_type1_schemes_have_unit_rho():
    rng = random.Random(5)
    for bid in ("weak1-1a", "weak1-1b", "weak1-1c"):
        for _ in range(20):
            p = schemes.random_params(bid, rng)
            s = schemes.build(p, bid, rng.choice(list(schemes.legal_tunables(p, bid))))
            ch = gr.RealChannel.from_exponents(p, *[rng.random() for _ in range(4)])
            assert gr.guard_bits(s) == 1
            assert all(v == 1.0 for v in gr.power_adjustments(s, ch).values())


def test_integer_exponents_give_power_of_two_scales():
    s = schemes.build(P_C1, "weak1-1a", (1, 1))
    ch = gr.RealChannel.from_exponents(P_C1)
    for k in (1, 2):
        above, _ = gr.split_noise_level(gr.translate_to_pam(s, ch), k, ch)
        for t in above.terms:
            assert all(math.log2(c).is_integer() for c in t.copy_scales)
        d = gr.analytic_min_distance(above)
        assert math.isinf(d) or (d >= 1 and math.log2(d).is_integer())


def test_common_offset_scales_distance():
    s = schemes.build(P_C1, "weak1-1a", (0, 1))
    base = gr.RealChannel.from_exponents(P_C1)
    for beta in (0.1, 0.5, 0.9):
        ch = gr.RealChannel.from_exponents(P_C1, beta, beta, beta, beta)
        for k in (1, 2):
            d0 = gr.analytic_min_distance(gr.split_noise_level(gr.translate_to_pam(s, base), k, base)[0])
            d = gr.analytic_min_distance(gr.split_noise_level(gr.translate_to_pam(s, ch), k, ch)[0])
            assert d == pytest.approx(d0 * 2 ** beta)


def test_analytic_distance_matches_brute_force():
    rng = random.Random(17)
    checked = 0
    while checked < 150:
        s, ch = _random_instance(rng)
        tx = gr.translate_to_pam(s, ch)
        for k in (1, 2):
            above, _ = gr.split_noise_level(tx, k, ch)
            if above.entropy_bits() > 16 or above.entropy_bits() == 0:
                continue
            d = gr.analytic_min_distance(above)
            c = oracles.enumerate_support(above)
            assert d == pytest.approx(oracles.brute_force_min_distance(c), rel=1e-9)
            assert d >= 1 - 1e-12
            # all sums distinct, so the support size is 2^(cardinality exponent)
            assert c.distinct == 2 ** gr.cardinality_exponent(above)
            checked += 1


def test_transmit_energy_at_most_one():
    rng = random.Random(23)
    for _ in range(120):
        s, ch = _random_instance(rng)
        for x in gr.translate_to_pam(s, ch):
            e = gr.transmit_energy(x)
            assert e <= 1 + 1e-12
            if x.entropy_bits() <= 14:
                ok, brute = oracles.energy_check(x.raw_layers())
                assert ok and brute == pytest.approx(e, rel=1e-9, abs=1e-15)


def test_transmit_support_fits_under_top_row():
    # amplitude stays below 2^(T - 1 - q) with T the top occupied row, counted from the bottom
    rng = random.Random(29)
    for _ in range(120):
        s, ch = _random_instance(rng)
        rho = gr.power_adjustments(s, ch)
        for k, x in zip((1, 2), gr.translate_to_pam(s, ch)):
            if not x.terms:
                continue
            top = max(b + h for copies in gr._sub_geometry(s, k).values() for b, h in copies)
            boost = max([1.0] + [v for (u, _), v in rho.items() if u == k])
            amp = sum(t.scale * (2 ** t.layer.order_exponent - 1) / 2 for t in x.terms)
            assert amp <= boost * 2.0 ** (top - 1 - s.q) + 1e-12


def test_ozarow_constant():
    assert gr.OZAROW_CONST == pytest.approx(2.7160, abs=1e-4)
    assert gr.gap_bound(1, 3) == pytest.approx(3 + gr.OZAROW_CONST)
    assert gr.gap_bound(2, 4) == pytest.approx(8 + gr.OZAROW_CONST)


def test_rate_bound_formula():
    s = schemes.build(P_C1, "weak1-1a", (0, 0))
    ch = gr.RealChannel.from_exponents(P_C1)
    above, _ = gr.split_noise_level(gr.translate_to_pam(s, ch), 1, ch)
    lb = gr.rate_lower_bound(above, above.owned_by(2))
    h = gr.cardinality_exponent(above) - gr.cardinality_exponent(above.owned_by(2))
    assert lb == pytest.approx(h - gr.OZAROW_CONST)  # d = 1 makes the log term exact
    empty = gr.Superposition(())
    assert gr.rate_lower_bound(empty, empty) == pytest.approx(-0.5 * math.log2(2 * math.pi * math.e / 12)
                                                              - 0.5 * math.log2(7 / 3))


def test_gap_certificates_examples():
    c1, c2 = gr.gap_certificate(schemes.build(P_C1, "weak1-1a", (0, 0)), gr.RealChannel.from_exponents(P_C1))
    assert (c1.g, c1.A_size, c1.gap) == (1, 3, pytest.approx(3 + gr.OZAROW_CONST))
    assert c1.holds and c2.holds
    e1, e2 = gr.gap_certificate(schemes.build(P_EX, "weak1-2a", (0, 0)),
                                gr.RealChannel.from_exponents(P_EX, 0.6, 0.3, 0.2, 0.1))
    assert (e1.g, e1.A_size) == (2, 3)
    assert e1.gap_bound == pytest.approx(6 + gr.OZAROW_CONST)
    assert e1.holds and e2.holds
    assert e1.to_json()["holds"] is True


def test_gap_within_bound_random():
    rng = random.Random(41)
    for _ in range(200):
        s, ch = _random_instance(rng, max_exponent=20)
        for c in gr.gap_certificate(s, ch):
            assert c.holds, c
            assert c.gap <= 9 * c.g + 2.72


def test_non_increasing_scales_rejected():
    layer = gr.PamLayer(1, "A", 3, 2, (0,), 3)
    sp = gr.Superposition((gr.Term(layer, 2.0, (2.0,)), gr.Term(layer, 2.0, (2.0,))))
    with pytest.raises(InvalidSuperposition):
        gr.analytic_min_distance(sp)
    zero = gr.Superposition((gr.Term(layer, 0.0, (0.0,)),))
    with pytest.raises((DegenerateConstellation, InvalidSuperposition)):
        gr.rate_lower_bound(zero, gr.Superposition(()))


def test_channel_must_match_scheme():
    s = schemes.build(P_EX, "weak1-2a", (0, 0))
    with pytest.raises(RegimeMismatch):
        gr.translate_to_pam(s, gr.RealChannel.from_exponents(P_C1))


def test_support_csv_probabilities():
    s = schemes.build(P_C1, "weak1-1a", (0, 0))
    x1, _ = gr.translate_to_pam(s, gr.RealChannel.from_exponents(P_C1))
    lines = gr.support_csv(x1).strip().split("\n")
    assert lines[0] == "point,probability"
    probs = [float(l.split(",")[1]) for l in lines[1:]]
    assert len(probs) == 2 ** x1.entropy_bits() and sum(probs) == pytest.approx(1)
    assert gr.superposition_to_json(x1)["guard"] == 1


def test_mc_information_exceeds_rate_bound():
    # Gaussian-noise mutual information of the full receiver signal against the certified bound
    s = schemes.build(P_C1, "weak1-1a", (0, 0))
    ch = gr.RealChannel.from_exponents(P_C1)
    tx = gr.translate_to_pam(s, ch)
    above, below = gr.split_noise_level(tx, 1, ch)
    full = above + below
    own = oracles.enumerate_support(full.owned_by(1)).points
    other = oracles.enumerate_support(full.owned_by(2)).points if full.owned_by(2).terms else np.zeros(1)
    mi, se = oracles.mc_mutual_information_real(own, other, 2000, np.random.default_rng(3))
    lb = gr.gap_certificate(s, ch)[0].rate_lower_bound
    assert mi - 3 * se > lb
    assert mi <= math.log2(len(np.unique(np.round(own, 12)))) + 1e-9
