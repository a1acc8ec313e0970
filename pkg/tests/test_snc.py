import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from stinqos import harq, snc
from stinqos.errors import DomainError, StabilityError


def _query(theta=0.1, a_th=4000.0, n=200):
    return snc.AoiQosQuery(theta, a_th, n)


# ---------------------------------------------------------------------------
# query types


def test_query_validation():
    assert _query(a_th=3000, n=200).threshold_time == 15.0
    with pytest.raises(DomainError):
        snc.AoiQosQuery(0.0, 1.0, 10)
    with pytest.raises(DomainError):
        snc.AoiQosQuery(0.1, -1.0, 10)
    with pytest.raises(DomainError):
        snc.DelayQosQuery(0.1, -1.0)
    with pytest.raises(DomainError):
        snc.DelayQosQuery(0.1, 3.0, 0.0)


# ---------------------------------------------------------------------------
# inter-arrival transform


def test_interarrival_mellin_examples():
    assert snc.mellin_exp_interarrival(2.0, 1.0) == 2.0
    assert snc.mellin_exp_interarrival(2.0, 1e-12) == pytest.approx(1.0, abs=1e-11)
    with pytest.raises(StabilityError):
        snc.mellin_exp_interarrival(2.0, 2.0 - 1e-9 + 1e-9)
    with pytest.raises(StabilityError):
        snc.mellin_exp_interarrival(1.0, 1.5)


def test_interarrival_mgf_matches_numeric_expectation():
    lam, t = 0.7, -0.4
    rng = np.random.default_rng(0)
    x = rng.exponential(1 / lam, 400_000)
    assert snc.exp_interarrival_mgf(lam, t) == pytest.approx(np.exp(t * x).mean(), rel=5e-3)


# ---------------------------------------------------------------------------
# peak-AoI bounds


def test_poisson_paper_variant_arithmetic():
    q = snc.AoiQosQuery(0.1, 20.0, 1.0)
    res = snc.peak_aoi_poisson(0.5, math.exp(0.1 * 3), q, "paper")
    expected = 0.5 / (0.5 - 0.1) * math.exp(-2.0) * math.exp(0.3)
    assert res.value == pytest.approx(expected, rel=1e-14)
    assert "no queueing denominator" in res.notes


def test_poisson_theorem_variant_matches_gigi():
    lam, th, ms = 0.5, 0.1, math.exp(0.1)
    q = snc.AoiQosQuery(th, 20.0, 1.0)
    gigi = snc.peak_aoi_bound_gigi(lam / (lam - th), lam / (lam + th), ms, q)
    pois = snc.peak_aoi_poisson(lam, ms, q, "theorem")
    assert pois.value == pytest.approx(gigi.value, rel=1e-14)
    # the theorem variant carries the queueing denominator and is never smaller
    assert pois.value >= snc.peak_aoi_poisson(lam, ms, q, "paper").value
    with pytest.raises(DomainError):
        snc.peak_aoi_poisson(lam, ms, q, "other")


def test_instant_service_gives_zero_bound():
    res = snc.peak_aoi_bound_gigi(2.0, 0.5, 0.0, _query())
    assert res.value == 0.0


def test_gigi_stability_violation_raises():
    with pytest.raises(StabilityError) as info:
        snc.peak_aoi_bound_gigi(2.0, 0.9, 1.2, _query())
    assert info.value.margin < 0


def test_gg_stability_violation_raises():
    arr = snc.gi_envelope(lambda t: math.log(snc.exp_interarrival_mgf(0.5, t)))
    srv = snc.gi_envelope(lambda t: t * 5.0)  # deterministic service far slower than arrivals
    with pytest.raises(StabilityError):
        snc.peak_aoi_bound_gg(arr, srv, snc.AoiQosQuery(0.1, 100.0, 1.0))


def test_bound_clamped_with_note():
    res = snc.peak_aoi_poisson(0.5, math.exp(0.1), snc.AoiQosQuery(0.1, 0.1, 1.0), "theorem")
    assert res.value == 1.0 and res.raw > 1.0
    assert "clamped to 1" in res.notes
    assert res.log_value == pytest.approx(math.log(res.raw))


@settings(max_examples=100)
@given(
    lam=st.floats(0.1, 5.0),
    frac=st.floats(0.01, 0.9),
    det=st.floats(0.0, 1.0),
    a=st.floats(1.0, 1e4),
)
def test_gg_gigi_poisson_chain(lam, frac, det, a):
    th = frac * lam
    service = det / lam  # deterministic service time, load det
    ms = math.exp(th * service)
    assume(lam / (lam + th) * ms < 1 - 1e-9)
    q = snc.AoiQosQuery(th, a, 1.0)
    arr = snc.gi_envelope(lambda t: math.log(snc.exp_interarrival_mgf(lam, t)))
    srv = snc.gi_envelope(lambda t: t * service)
    gg = snc.peak_aoi_bound_gg(arr, srv, q)
    gigi = snc.peak_aoi_bound_gigi(lam / (lam - th), lam / (lam + th), ms, q)
    pois = snc.peak_aoi_poisson(lam, ms, q)
    assert gg.log_value == pytest.approx(gigi.log_value, abs=1e-10)
    assert pois.log_value == pytest.approx(gigi.log_value, abs=1e-10)
    assert gg.stability_margin > 0 and gigi.stability_margin > 0


@settings(max_examples=60)
@given(th=st.floats(0.01, 0.4), a1=st.floats(1.0, 1e4), da=st.floats(0.0, 1e4), n=st.integers(1, 1000))
def test_log_bound_affine_in_threshold(th, a1, da, n):
    ms = math.exp(th * 0.5)
    r1 = snc.peak_aoi_poisson(0.5, ms, snc.AoiQosQuery(th, a1, n))
    r2 = snc.peak_aoi_poisson(0.5, ms, snc.AoiQosQuery(th, a1 + da, n))
    assert r2.log_value - r1.log_value == pytest.approx(-th * da / n, abs=1e-12 * max(1.0, th * (a1 + da) / n))
    assert r2.value <= r1.value


# ---------------------------------------------------------------------------
# HARQ service


def test_harq_service_mgf_two_point_example(hcfg):
    errs = [0.5, 0.0, 0.0]
    th = 0.2
    expected = 0.5 * math.exp(th) + 0.5 * math.exp(2 * th)
    assert snc.harq_service_mgf(errs, hcfg, th) == pytest.approx(expected, rel=1e-14)


def test_harq_error_free_reduces_to_single_round(model, hcfg):
    q = _query()
    res = snc.peak_aoi_harq(model, hcfg, 0.5, q, errs=[0.0, 0.0, 0.0])
    ref = snc.peak_aoi_poisson(0.5, math.exp(q.theta_aoi * hcfg.round_duration), q)
    assert res.value == pytest.approx(ref.value, rel=1e-14)
    single = harq.HarqConfig(200, 1, 2.0, 1 / 200)
    res1 = snc.peak_aoi_harq(model, single, 0.5, q)
    assert res1.value == pytest.approx(ref.value, rel=1e-14)


def test_harq_paper_variant_uses_mean_service_exponent(hcfg):
    errs = [0.2, 0.1, 0.05]
    q = _query()
    res = snc.peak_aoi_harq(None, hcfg, 0.5, q, variant="paper", errs=errs)
    expected = 0.5 / 0.4 * math.exp(-q.theta_aoi * q.threshold_time) * math.exp(0.1 * 1.0 * 1.35)
    assert res.value == pytest.approx(expected, rel=1e-13)


def test_harq_round_count_checked(hcfg):
    with pytest.raises(DomainError):
        snc.peak_aoi_harq(None, hcfg, 0.5, _query(), errs=[0.1, 0.1])


def test_harq_bound_increasing_in_blocklength(model):
    vals = []
    for n in (100, 150, 200, 250):
        cfg = harq.HarqConfig(n, 4, 2.0, 1 / 200)
        vals.append(snc.peak_aoi_harq(model, cfg, 0.5, snc.AoiQosQuery(0.2, 6000.0, n)).value)
    assert np.all(np.diff(vals) > 0)


def test_asymptotic_harq_bound_converges(hcfg):
    from oracles import model_at_snr_scale

    gaps = []
    for db in (20.0, 30.0, 40.0, 50.0, 60.0):
        m = model_at_snr_scale(db)
        exact = snc.peak_aoi_harq(m, hcfg, 0.3, _query()).raw
        asym = snc.peak_aoi_asymptotic(m, hcfg, 0.3, _query()).raw
        gaps.append(abs(asym - exact) / exact)
    assert np.all(np.diff(gaps) < 0)
    assert gaps[-1] < 0.05


def test_optimized_bound_not_above_fixed_theta(hcfg):
    errs = [0.1, 0.02, 0.005]
    opt = snc.optimized_peak_aoi_harq(errs, hcfg, 0.5, 4000.0, 200)
    for th in (0.05, 0.1, 0.2, 0.3):
        try:
            fixed = snc.peak_aoi_harq(None, hcfg, 0.5, snc.AoiQosQuery(th, 4000.0, 200), errs=errs)
        except StabilityError:
            continue
        assert opt.log_value <= fixed.log_value + 1e-9
    assert "theta optimized" in opt.notes


def test_mean_peak_aoi_deterministic_service(hcfg):
    # M/D/1: E[peak AoI] = 1/lambda + D + lambda D^2 / (2 (1 - lambda D))
    assert snc.mean_peak_aoi([0.0, 0.0, 0.0], hcfg, 0.5) == pytest.approx(2 + 1 + 0.5 / (2 * 0.5), rel=1e-14)
    with pytest.raises(StabilityError):
        snc.mean_peak_aoi([1.0, 1.0, 1.0], hcfg, 0.5)


# ---------------------------------------------------------------------------
# delay


def test_service_mellin_examples():
    assert snc.service_mellin_fbc(0.3, 400.0, 1.0) == pytest.approx(1.0)
    assert snc.service_mellin_fbc(1.0, 400.0, 0.9) == 1.0
    assert snc.service_mellin_fbc(0.0, 400.0, 1 - 0.01) == pytest.approx(math.exp(-4.0), rel=1e-14)
    with pytest.raises(DomainError):
        snc.service_mellin_fbc(1.2, 1.0, 1.0)


def test_poisson_arrival_mellin_is_poisson_mgf():
    lam, unit, th = 1.3, 0.7, 0.4
    mgf = math.exp(lam * (math.exp(th * unit) - 1))
    assert snc.poisson_arrival_mellin(lam, 1 + th, unit) == pytest.approx(mgf, rel=1e-14)
    assert snc.poisson_arrival_mellin(lam, 1.0, unit) == 1.0
    assert snc.poisson_arrival_mellin(lam, 2 + th, unit, literal=True) == pytest.approx(mgf, rel=1e-14)
    assert snc.poisson_arrival_mellin(lam, 2000.0, 10.0) == math.inf


def _simple_pair(lam=0.3, eps=0.1, bits=1.0):
    return (lambda s: snc.poisson_arrival_mellin(lam, s, bits)), (lambda s: snc.service_mellin_fbc(eps, bits, s))


def test_delay_bound_zero_threshold_is_queue_kernel():
    arr, srv = _simple_pair()
    th = 0.5
    res = snc.delay_violation_bound(arr, srv, snc.DelayQosQuery(th, 0.0))
    kernel = 1.0 / (1.0 - arr(1 + th) * srv(1 - th))
    assert res.raw == pytest.approx(kernel, rel=1e-14)
    assert res.value == 1.0


def test_delay_bound_vanishes_for_large_threshold():
    arr, srv = _simple_pair()
    vals = [snc.delay_violation_bound(arr, srv, snc.DelayQosQuery(0.5, d)).value for d in (1, 10, 100, 1000)]
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] < 1e-100


def test_delay_bound_grid_takes_infimum_and_scales_with_delta():
    arr, srv = _simple_pair()
    grid = [0.1, 0.3, 0.5, 0.8, 1.2]
    q = snc.DelayQosQuery(0.5, 10.0, 0.25)
    res = snc.delay_violation_bound(arr, srv, q, grid)
    singles = []
    for t in grid:
        try:
            singles.append(snc.delay_violation_bound(arr, srv, snc.DelayQosQuery(t, 10.0, 0.25)).log_value)
        except StabilityError:
            pass
    assert res.log_value == pytest.approx(min(singles), rel=1e-14)
    full = snc.delay_violation_bound(arr, srv, snc.DelayQosQuery(res.theta_used, 10.0, 1.0))
    assert res.log_value == pytest.approx(full.log_value + math.log(0.25), rel=1e-14)


def test_delay_bound_without_stable_exponent_raises():
    arr, srv = _simple_pair(lam=5.0, eps=0.5)
    with pytest.raises(StabilityError):
        snc.delay_violation_bound(arr, srv, snc.DelayQosQuery(0.5, 5.0), [0.1, 0.5, 1.0])


def test_harq_delay_bound_monotone_in_threshold(hcfg):
    errs = [0.05, 0.01, 0.002]
    vals = [snc.harq_delay_bound(errs, hcfg, 0.5, d).value for d in range(1, 15)]
    assert np.all(np.diff(vals) <= 0)
    assert vals[-1] < vals[2]
    fixed = snc.harq_delay_bound(errs, hcfg, 0.5, 10, theta=0.5 / (400 / math.log(2)))
    assert fixed.value >= snc.harq_delay_bound(errs, hcfg, 0.5, 10).value


def test_optimize_theta_finds_quadratic_minimum():
    t = snc.optimize_theta(lambda x: (math.log(x) - math.log(0.37)) ** 2, 1e-3, 10.0)
    assert t == pytest.approx(0.37, rel=1e-6)
    with pytest.raises(StabilityError):
        snc.optimize_theta(lambda x: math.inf, 1e-3, 1.0)
    with pytest.raises(DomainError):
        snc.optimize_theta(lambda x: x, 1.0, 0.5)


@settings(max_examples=60, deadline=None)
@given(
    e1=st.floats(0.0, 0.5),
    e2=st.floats(0.0, 0.5),
    e3=st.floats(0.0, 0.5),
    lam=st.floats(0.05, 0.6),
    d=st.integers(1, 20),
)
def test_harq_delay_bound_is_probability_and_monotone(e1, e2, e3, lam, d, hcfg):
    errs = [e1, e2, e3]
    try:
        a = snc.harq_delay_bound(errs, hcfg, lam, d)
        b = snc.harq_delay_bound(errs, hcfg, lam, d + 1)
    except StabilityError:
        return
    assert 0.0 <= b.value <= a.value <= 1.0
    assert a.stability_margin > 0
