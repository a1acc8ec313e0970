import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stinqos import harq
from stinqos.errors import DomainError

probs = st.floats(0.0, 1.0, allow_nan=False)


def test_config_properties(hcfg):
    assert hcfg.round_duration == pytest.approx(1.0)
    assert hcfg.payload_nats == pytest.approx(400.0)
    with pytest.raises(DomainError):
        harq.HarqConfig(0, 4, 2.0, 1.0)
    with pytest.raises(DomainError):
        harq.HarqConfig(200, 2.5, 2.0, 1.0)
    with pytest.raises(DomainError):
        harq.HarqConfig(200, 4, -1.0, 1.0)


def test_rate_after_round():
    cfg = harq.HarqConfig(100, 4, 3.0, 1e-3)
    assert harq.rate_after_round(cfg, 1) == 3.0
    assert harq.rate_after_round(cfg, 2) == 1.5
    assert harq.rate_after_round(cfg, 4) == 0.75
    for bad in (0, 5, 1.5):
        with pytest.raises(DomainError):
            harq.rate_after_round(cfg, bad)


def test_pmf_examples():
    assert np.allclose(harq.round_count_pmf([0.5, 0.5]), [0.5, 0.25, 0.25], rtol=0, atol=1e-15)
    assert np.array_equal(harq.round_count_pmf([0.0, 0.0, 0.0]), [1.0, 0.0, 0.0, 0.0])
    assert np.array_equal(harq.round_count_pmf([1.0, 1.0, 1.0]), [0.0, 0.0, 0.0, 1.0])
    assert np.array_equal(harq.round_count_pmf([]), [1.0])
    with pytest.raises(DomainError):
        harq.round_count_pmf([0.2, 1.1])


def test_pmf_matches_brute_force_enumeration():
    errs = [0.3, 0.6, 0.2]
    pmf = np.zeros(4)
    # enumerate independent fail/success outcomes of the first three rounds
    for outcome in itertools.product([True, False], repeat=3):
        p = np.prod([e if fail else 1 - e for e, fail in zip(errs, outcome)])
        first_success = next((i for i, fail in enumerate(outcome) if not fail), 3)
        pmf[first_success] += p
    assert np.allclose(harq.round_count_pmf(errs), pmf, rtol=0, atol=1e-15)


def test_expected_rounds_example():
    assert harq.expected_rounds([0.5, 0.25]) == pytest.approx(1.625, abs=1e-15)
    assert harq.expected_rounds_bound([0.5, 0.25]) == pytest.approx(1.75, abs=1e-15)
    assert harq.expected_rounds_bound([0.0] * 3) == 1.0
    assert harq.expected_rounds_bound([1.0] * 3) == 4.0
    assert harq.expected_rounds([1.0] * 3) == 4.0


@settings(max_examples=200)
@given(st.lists(probs, min_size=0, max_size=8))
def test_pmf_sums_to_one_and_bound_dominates(errs):
    pmf = harq.round_count_pmf(errs)
    assert abs(pmf.sum() - 1.0) < 1e-12
    assert np.all(pmf >= -1e-15)
    assert harq.expected_rounds_bound(errs) >= harq.expected_rounds(errs) - 1e-12


@settings(max_examples=100)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6), st.floats(0.0, 1.0))
def test_expected_rounds_monotone_in_errors(errs, scale):
    smaller = [e * scale for e in errs]
    assert harq.expected_rounds(smaller) <= harq.expected_rounds(errs) + 1e-12


def test_round_errors_nonincreasing(model, hcfg):
    for method in ("closed-form", "asymptotic"):
        errs = harq.round_error_probs(model, hcfg, method)
        assert errs.shape == (3,)
        assert np.all(np.diff(errs) <= 0)
    with pytest.raises(DomainError):
        harq.round_error_probs(model, hcfg, "other")


def test_round_errors_methods_agree(model, hcfg):
    cf = harq.round_error_probs(model, hcfg)
    normal = harq.round_error_probs(model, hcfg, "normal")
    assert np.allclose(cf, normal, rtol=0.02)
