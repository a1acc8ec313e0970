import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from oracles import model_at_snr_scale, ramp_error_by_quadrature

from stinqos import fbc, simkit
from stinqos.errors import DomainError


def test_unit_conversion_round_trip():
    assert fbc.bits_to_nats(1.0) == pytest.approx(math.log(2.0), rel=1e-15)
    assert fbc.nats_to_bits(fbc.bits_to_nats(0.37)) == pytest.approx(0.37, rel=1e-15)
    cfg = fbc.FbcConfig.from_bits(200, 1.0)
    assert cfg.rate_nats == pytest.approx(math.log(2.0))


def test_config_validation():
    with pytest.raises(DomainError):
        fbc.FbcConfig(0.5, 1.0)
    with pytest.raises(DomainError):
        fbc.FbcConfig(100, 0.0)


def test_capacity_dispersion_values():
    assert fbc.capacity_dispersion(0.0) == (0.0, 0.0)
    cap, disp = fbc.capacity_dispersion(1.0)
    assert cap == pytest.approx(math.log(2.0))
    assert disp == pytest.approx(0.75)
    assert fbc.capacity_dispersion(1.0, base=2)[0] == pytest.approx(1.0)
    with pytest.raises(DomainError):
        fbc.capacity_dispersion(-0.1)


def test_normal_approx_error_at_threshold_is_half():
    rate = 0.7
    assert fbc.normal_approx_error(math.expm1(rate), 300, rate) == pytest.approx(0.5, abs=1e-14)
    assert fbc.normal_approx_error(0.0, 300, rate) == 1.0


def test_normal_approx_error_matches_scipy():
    g, n, r = 3.0, 150, 1.0
    cap, disp = math.log1p(g), 1 - (1 + g) ** -2
    assert fbc.normal_approx_error(g, n, r) == pytest.approx(stats.norm.sf(math.sqrt(n) * (cap - r) / math.sqrt(disp)), rel=1e-12)


@pytest.mark.parametrize("convention", ["matched", "two-pi"])
def test_ramp_thresholds_centered_with_expected_width(convention):
    rate, n = 0.8, 250
    th = fbc.psi_thresholds(rate, n, convention)
    assert th.center == pytest.approx(math.expm1(rate), rel=1e-14)
    assert th.zeta_up - th.zeta_low == pytest.approx(1 / (th.vartheta * math.sqrt(n)), rel=1e-12)
    assert fbc.psi_ramp(th.zeta_low, th, n) == pytest.approx(1.0)
    assert fbc.psi_ramp(th.zeta_up, th, n) == pytest.approx(0.0, abs=1e-15)
    assert fbc.psi_ramp(th.center, th, n) == pytest.approx(0.5)


def test_matched_slope_equals_q_term_slope():
    rate, n = 0.6, 400
    th = fbc.psi_thresholds(rate, n)
    g0, h = math.expm1(rate), 1e-7
    num = (fbc.normal_approx_error(g0 + h, n, rate) - fbc.normal_approx_error(g0 - h, n, rate)) / (2 * h)
    assert -num == pytest.approx(th.vartheta * math.sqrt(n), rel=1e-5)


def test_two_pi_convention_is_wider():
    a = fbc.psi_thresholds(1.0, 100, "matched")
    b = fbc.psi_thresholds(1.0, 100, "two-pi")
    assert b.zeta_up - b.zeta_low > a.zeta_up - a.zeta_low
    with pytest.raises(DomainError):
        fbc.psi_thresholds(1.0, 100, "other")


@pytest.mark.parametrize("snr_db", [20.0, 40.0, 60.0])
@pytest.mark.parametrize("n,rate", [(100, 0.5), (200, 1.0), (500, 2.0)])
def test_closed_form_matches_quadrature_of_ramp_expression(snr_db, n, rate):
    model = model_at_snr_scale(snr_db)
    th = fbc.psi_thresholds(rate, n)
    closed = fbc.error_prob_closed_form(model, rate, n)
    assert not closed.out_of_range
    assert closed.raw == pytest.approx(ramp_error_by_quadrature(model, rate, n, th), abs=1e-8)


def test_closed_form_tracks_normal_approximation(model):
    for n, rate in ((200, 1.0), (400, 0.5), (200, 2.0)):
        closed = fbc.error_prob_closed_form(model, rate, n).value
        exact = fbc.error_prob_normal(model, fbc.FbcConfig(n, rate)).value
        assert closed == pytest.approx(exact, rel=0.02)


def test_normal_approximation_matches_monte_carlo():
    model = model_at_snr_scale(20.0)
    n, rate = 200, 1.0
    g = simkit.sample_sinr(model, 3, 400_000, include_noise=False, source="gamma")
    q = fbc.normal_approx_error(g, n, rate)
    mean, se = q.mean(), q.std(ddof=1) / math.sqrt(len(q))
    assert abs(fbc.error_prob_normal(model, fbc.FbcConfig(n, rate)).value - mean) < 4 * se


def test_error_monotone_in_rate_and_power():
    lo, hi = model_at_snr_scale(25.0), model_at_snr_scale(35.0)
    rates = [0.25, 0.5, 1.0, 2.0]
    errs = [fbc.error_prob_closed_form(lo, r, 200).value for r in rates]
    assert np.all(np.diff(errs) > 0)
    for r in rates:
        assert fbc.error_prob_closed_form(hi, r, 200).value < fbc.error_prob_closed_form(lo, r, 200).value


def test_asymptotic_form_converges_at_high_snr():
    gaps = []
    for db in (20.0, 30.0, 40.0, 50.0, 60.0):
        m = model_at_snr_scale(db)
        exact = fbc.error_prob_closed_form(m, 1.0, 200).value
        gaps.append(abs(fbc.error_prob_asymptotic(m, 1.0, 200).value - exact) / exact)
    assert np.all(np.diff(gaps) < 0)
    assert gaps[-1] < 1e-3


def test_asymptotic_area_with_ramp_clipped_at_zero():
    m = model_at_snr_scale(60.0)
    th = fbc.psi_thresholds(0.05, 5)
    assert th.zeta_low < 0
    res = fbc.error_prob_asymptotic(m, 0.05, 5)
    slope = m.fade.alpha * m.interference.k * m.interference.eta / m.snr_scale
    grid = np.linspace(0.0, th.zeta_up, 200_001)
    area = integrate.trapezoid(fbc.psi_ramp(grid, th, 5), grid)
    assert res.value == pytest.approx(slope * area, rel=1e-8)


def test_result_flags_raw_values_out_of_range():
    r = fbc._result(1.2)
    assert r.value == 1.0 and r.out_of_range
    r = fbc._result(-0.01)
    assert r.value == 0.0 and not r.out_of_range
    assert float(fbc._result(0.3)) == 0.3


@settings(max_examples=25, deadline=None)
@given(
    snr_db=st.floats(15.0, 60.0),
    n=st.integers(20, 1000),
    rate=st.floats(0.05, 3.0),
)
def test_closed_form_is_a_probability(snr_db, n, rate):
    res = fbc.error_prob_closed_form(model_at_snr_scale(snr_db), rate, n)
    assert 0.0 <= res.value <= 1.0
    assert res.truncation_error >= 0.0


@settings(max_examples=50, deadline=None)
@given(g=st.floats(0.0, 1e4), n=st.integers(1, 2000), rate=st.floats(0.01, 5.0))
def test_ramp_is_monotone_probability(g, n, rate):
    th = fbc.psi_thresholds(rate, n)
    v = fbc.psi_ramp(g, th, n)
    assert 0.0 <= v <= 1.0
    assert fbc.psi_ramp(g * 1.1 + 1e-3, th, n) <= v
