import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from swarmgate.gating import (
    attention_latch_factor,
    coupled_branch_probabilities,
    coupled_cascade_rate,
    critical_complexity,
    fit_scaling_law,
    integrity_floor,
    inverse_wisdom_fixed_point,
    inverse_wisdom_step,
    linear_cascade_rate,
    logic_neutralization,
    resilience_check,
    saturation_threshold,
    sycophancy_at_complexity,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
latch_values = st.floats(min_value=1.0, max_value=2.0, allow_nan=False)


# --- linear and coupled rates ---


def test_linear_rate_saturation_point():
    assert linear_cascade_rate(0.485, 0.515, 0.515) == pytest.approx(0.50045, abs=1e-12)


def test_linear_rate_validates_inputs():
    with pytest.raises(ValueError):
        linear_cascade_rate(1.2, 0.5, 0.5)
    with pytest.raises(ValueError):
        linear_cascade_rate(0.5, -0.1, 0.5)
    with pytest.raises(ValueError):
        linear_cascade_rate(0.5, 0.5, math.nan)
    with pytest.raises(TypeError):
        linear_cascade_rate("0.5", 0.5, 0.5)


def test_coupled_rate_near_kinship_example():
    # mu = 1.02 * (0.907*0.99 + 0.010*0.01)
    assert coupled_cascade_rate(0.010, 0.907, 0.990, 1.02) == pytest.approx(0.9159906, abs=1e-9)


def test_coupled_rate_clamps_to_one():
    assert coupled_cascade_rate(0.485, 0.515, 0.515, 2.0) == 1.0
    assert coupled_cascade_rate(1.0, 1.0, 0.5, 2.0) == 1.0


def test_coupled_rate_latch_bounds():
    with pytest.raises(ValueError):
        coupled_cascade_rate(0.1, 0.1, 0.5, 0.99)
    with pytest.raises(ValueError):
        coupled_cascade_rate(0.1, 0.1, 0.5, 2.01)


@given(unit, unit, unit)
def test_linear_rate_is_convex_combination(sigma, tau, accuracy):
    rate = linear_cascade_rate(sigma, tau, accuracy)
    assert 0.0 <= rate <= 1.0
    assert min(sigma, tau) - 1e-12 <= rate <= max(sigma, tau) + 1e-12


@given(unit, unit, unit, latch_values)
def test_coupled_rate_bounds(sigma, tau, accuracy, latch):
    linear = linear_cascade_rate(sigma, tau, accuracy)
    coupled = coupled_cascade_rate(sigma, tau, accuracy, latch)
    assert linear - 1e-12 <= coupled <= 1.0
    assert coupled <= min(1.0, 2.0 * linear) + 1e-12


@given(unit, unit, unit, latch_values)
def test_latch_factor_inverts_coupling_below_clamp(sigma, tau, accuracy, latch):
    linear = linear_cascade_rate(sigma, tau, accuracy)
    assume(linear > 1e-9 and latch * linear < 1.0)
    observed = coupled_cascade_rate(sigma, tau, accuracy, latch)
    assert attention_latch_factor(observed, linear) == pytest.approx(latch, rel=1e-9)


def test_latch_factor_cautious_chain():
    linear = linear_cascade_rate(0.004, 0.045, 0.872)
    assert linear == pytest.approx(0.039752, abs=1e-12)
    assert attention_latch_factor(0.049, linear) == pytest.approx(1.2326, abs=1e-4)


def test_latch_factor_may_exceed_two():
    assert attention_latch_factor(0.9, 0.3) == pytest.approx(3.0)


def test_latch_factor_errors():
    with pytest.raises(ZeroDivisionError):
        attention_latch_factor(0.5, 0.0)
    with pytest.raises(ValueError):
        attention_latch_factor(0.5, -0.1)
    with pytest.raises(ValueError):
        attention_latch_factor(0.5, math.nan)
    with pytest.raises(ValueError):
        attention_latch_factor(1.2, 0.5)


def test_integrity_floor_is_tribalism():
    assert integrity_floor(0.601) == 0.601
    with pytest.raises(ValueError):
        integrity_floor(-0.2)


# --- chain extension recurrence ---


def test_inverse_wisdom_step_examples():
    assert inverse_wisdom_step(0.5, 0.2, 0.1, 1.0) == pytest.approx(0.15, abs=1e-12)
    assert inverse_wisdom_step(1.0, 0.515, 0.485, 2.0) == 1.0


@given(unit, unit, unit, latch_values)
def test_inverse_wisdom_step_stays_in_unit_interval(mu, tau, sigma, latch):
    assert 0.0 <= inverse_wisdom_step(mu, tau, sigma, latch) <= 1.0


def test_fixed_point_saturation_is_exactly_one():
    result = inverse_wisdom_fixed_point(0.515, 0.485, 2.0)
    assert result.mu == 1.0
    assert result.converged


def test_fixed_point_closed_form():
    result = inverse_wisdom_fixed_point(0.2, 0.1, 1.0)
    assert result.iterations == 0
    assert result.mu == pytest.approx(1.0 / 9.0, abs=1e-12)


def test_fixed_point_matches_long_iteration():
    closed = inverse_wisdom_fixed_point(0.2, 0.1, 1.0).mu
    mu = 1.0
    for _ in range(10_000):
        mu = inverse_wisdom_step(mu, 0.2, 0.1, 1.0)
    assert mu == pytest.approx(closed, abs=1e-6)


@given(unit, unit, latch_values)
@settings(max_examples=200)
def test_fixed_point_is_stationary(tau, sigma, latch):
    result = inverse_wisdom_fixed_point(tau, sigma, latch)
    assert result.converged
    assert 0.0 <= result.mu <= 1.0
    assert inverse_wisdom_step(result.mu, tau, sigma, latch) == pytest.approx(result.mu, abs=1e-6)


@given(unit, unit, latch_values)
def test_fixed_point_closed_form_used_when_valid(tau, sigma, latch):
    denom = 1.0 - latch * (tau - sigma)
    assume(denom > 1e-6)
    closed = latch * sigma / denom
    assume(0.0 <= closed < 1.0)
    result = inverse_wisdom_fixed_point(tau, sigma, latch)
    assert result.iterations == 0
    assert result.mu == pytest.approx(closed, abs=1e-12)


# --- resilience, thresholds ---


def test_resilience_examples():
    cautious = resilience_check(0.045, 0.004, 0.872)
    assert cautious.resilient
    assert cautious.bound == pytest.approx(0.146202, abs=1e-6)
    saturated = resilience_check(0.601, 0.339, 0.661)
    assert not saturated.resilient
    assert saturated.bound == pytest.approx(0.339, abs=1e-12)


def test_resilience_requires_positive_accuracy():
    with pytest.raises(ZeroDivisionError):
        resilience_check(0.1, 0.1, 0.0)


@given(unit, unit, st.floats(min_value=1e-6, max_value=1.0))
def test_resilience_matches_defining_comparison(tau, sigma, accuracy):
    result = resilience_check(tau, sigma, accuracy)
    direct = linear_cascade_rate(sigma, tau, accuracy) < 1.0 - accuracy
    assert result.resilient == direct


@given(unit, unit, st.floats(min_value=1e-6, max_value=1.0))
def test_resilience_bound_separates_regimes(tau, sigma, accuracy):
    result = resilience_check(tau, sigma, accuracy)
    # Away from the float boundary the tribalism ceiling is equivalent.
    if tau < result.bound - 1e-9:
        assert result.resilient
    elif tau > result.bound + 1e-9:
        assert not result.resilient


def test_saturation_threshold_values():
    assert saturation_threshold(0.601, 0.339) == pytest.approx(0.451374, abs=1e-6)
    assert saturation_threshold(0.515, 0.485) == pytest.approx(0.499775, abs=1e-6)
    assert saturation_threshold(0.3, 0.0) == 0.0


def test_logic_neutralization():
    assert logic_neutralization(0.485) == pytest.approx(0.03, abs=1e-12)
    assert logic_neutralization(0.6) == pytest.approx(-0.2, abs=1e-12)


# --- branch probabilities (spill kernel) ---


def test_branch_probabilities_plain_when_unclamped():
    p_tribal, p_syco = coupled_branch_probabilities(0.3, 0.2, 1.5, 0.7)
    assert p_tribal == pytest.approx(0.45)
    assert p_syco == pytest.approx(0.30)


def test_branch_probabilities_spill_preserves_mean():
    p_tribal, p_syco = coupled_branch_probabilities(0.515, 0.485, 2.0, 0.515)
    assert p_tribal == 1.0 and p_syco == 1.0  # both branches saturate here
    mean = 0.515 * p_tribal + 0.485 * p_syco
    assert mean == coupled_cascade_rate(0.485, 0.515, 0.515, 2.0)


@given(unit, unit, latch_values, unit)
@settings(max_examples=500)
def test_branch_probabilities_reproduce_coupled_rate(tau, sigma, latch, weight):
    p_tribal, p_syco = coupled_branch_probabilities(tau, sigma, latch, weight)
    assert 0.0 <= p_tribal <= 1.0
    assert 0.0 <= p_syco <= 1.0
    mean = weight * p_tribal + (1.0 - weight) * p_syco
    target = min(1.0, latch * (tau * weight + sigma * (1.0 - weight)))
    assert mean == pytest.approx(target, abs=1e-12)


# --- scaling law ---

TRIPLE = ((0.08, 0.075), (0.13, 0.123), (0.51, 0.460))


def test_two_point_fit_frozen_values():
    fit = fit_scaling_law(TRIPLE, mode="two_point")
    assert fit.alpha == pytest.approx(4.217996, abs=1e-6)
    assert fit.sigma0 == pytest.approx(0.071083, abs=1e-6)
    assert critical_complexity(fit, 0.45) == pytest.approx(0.437507, abs=1e-6)
    # the middle point anchors sigma0, so the curve passes through it exactly
    assert sycophancy_at_complexity(fit, 0.13) == pytest.approx(0.123, abs=1e-12)


def test_least_squares_fit_frozen_values():
    fit = fit_scaling_law(TRIPLE, mode="least_squares")
    assert fit.alpha == pytest.approx(3.935739, abs=1e-5)
    assert fit.sigma0 == pytest.approx(0.062953, abs=1e-5)


def test_fit_input_validation():
    with pytest.raises(ValueError):
        fit_scaling_law([(0.1, 0.2)])
    with pytest.raises(ValueError):
        fit_scaling_law([(0.1, 0.2), (0.1, 0.3)])
    with pytest.raises(ValueError):
        fit_scaling_law([(0.1, 0.0), (0.2, 0.3)])
    with pytest.raises(ValueError):
        fit_scaling_law(TRIPLE, mode="cubic")


def test_curve_evaluation_clamps_to_one():
    fit = fit_scaling_law(TRIPLE)
    assert sycophancy_at_complexity(fit, 1.0) == 1.0


def test_critical_complexity_errors():
    fit = fit_scaling_law(TRIPLE)
    with pytest.raises(ValueError):
        critical_complexity(fit, 0.05)  # below sigma0
    falling = fit_scaling_law([(0.1, 0.4), (0.5, 0.2)])
    with pytest.raises(ValueError):
        critical_complexity(falling, 0.45)


@given(
    st.floats(min_value=1e-3, max_value=0.5),
    st.floats(min_value=0.1, max_value=5.0),
    st.floats(min_value=0.0, max_value=0.4),
    st.floats(min_value=0.45, max_value=0.9),
)
def test_two_point_fit_round_trip(sigma0, alpha, k_lo, k_hi):
    points = [(k, sigma0 * math.exp(alpha * k)) for k in (k_lo, (k_lo + k_hi) / 2, k_hi)]
    assume(all(s <= 1.0 for _, s in points))
    fit = fit_scaling_law(points, mode="two_point")
    assert fit.alpha == pytest.approx(alpha, rel=1e-9)
    assert fit.sigma0 == pytest.approx(sigma0, rel=1e-9)


@given(
    st.floats(min_value=1e-3, max_value=0.5),
    st.floats(min_value=0.1, max_value=5.0),
)
def test_least_squares_recovers_exact_exponential(sigma0, alpha):
    ks = (0.05, 0.2, 0.35, 0.5)
    points = [(k, sigma0 * math.exp(alpha * k)) for k in ks]
    assume(all(s <= 1.0 for _, s in points))
    fit = fit_scaling_law(points, mode="least_squares")
    assert fit.alpha == pytest.approx(alpha, rel=1e-7)
    assert fit.sigma0 == pytest.approx(sigma0, rel=1e-7)
