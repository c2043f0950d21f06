"""Closed-form gating laws for error cascades in audited agent chains.

Parameter conventions, used consistently below:
  sycophancy  rate of adopting an erroneous majority when the prior state is wrong
  tribalism   rate of keeping a kinship error over a valid correction
  critic_accuracy  probability the auditor flags the planted error
  latch       kinship amplification factor on the synthesizer gate, in [1, 2]

All probability arguments are validated against [0, 1]; violations raise
ValueError. Division by a structurally zero denominator raises
ZeroDivisionError.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .core import ScalingFit, _check_unit


def linear_cascade_rate(sycophancy: float, tribalism: float, critic_accuracy: float) -> float:
    """Terminal error rate of an uncoupled 3-agent chain.

    The auditor corrects with probability critic_accuracy; the synthesizer
    then fails through the tribal branch, or through the sycophantic branch
    when the audit missed. Convex combination, so the result is in [0, 1].
    """
    sycophancy = _check_unit("sycophancy", sycophancy)
    tribalism = _check_unit("tribalism", tribalism)
    critic_accuracy = _check_unit("critic_accuracy", critic_accuracy)
    return sycophancy * (1.0 - critic_accuracy) + tribalism * critic_accuracy


def _check_latch(latch: float) -> float:
    if math.isnan(latch) or not 1.0 <= latch <= 2.0:
        raise ValueError(f"latch must lie in [1, 2], got {latch!r}")
    return float(latch)


def coupled_cascade_rate(
    sycophancy: float, tribalism: float, critic_accuracy: float, latch: float
) -> float:
    """Latch-amplified cascade rate, clamped to 1."""
    latch = _check_latch(latch)
    return min(1.0, latch * linear_cascade_rate(sycophancy, tribalism, critic_accuracy))


def attention_latch_factor(mu_observed: float, mu_linear: float) -> float:
    """Observed amplification mu / mu_linear.

    Diagnostic ratio: values above 2 are legal output (they indicate the
    coupled model underfits that arm) and are left to the caller to flag.
    """
    mu_observed = _check_unit("mu_observed", mu_observed)
    if math.isnan(mu_linear) or mu_linear < 0:
        raise ValueError(f"mu_linear must be non-negative, got {mu_linear!r}")
    if mu_linear == 0.0:
        raise ZeroDivisionError("mu_linear is zero; the latch factor is undefined")
    return mu_observed / mu_linear


def integrity_floor(tribalism: float) -> float:
    """Limit of the cascade rate as the auditor becomes perfect. Equals tribalism."""
    return _check_unit("tribalism", tribalism)


def inverse_wisdom_step(mu: float, tribalism: float, sycophancy: float, latch: float) -> float:
    """One synthesizer extension of a chain with standing error rate mu.

    A standing error persists through the tribal branch; a corrected state is
    re-infected through the sycophantic branch. Clamped to 1.
    """
    mu = _check_unit("mu", mu)
    tribalism = _check_unit("tribalism", tribalism)
    sycophancy = _check_unit("sycophancy", sycophancy)
    latch = _check_latch(latch)
    return min(1.0, latch * (mu * tribalism + (1.0 - mu) * sycophancy))


class FixedPointResult(NamedTuple):
    mu: float
    iterations: int
    converged: bool


def inverse_wisdom_fixed_point(
    tribalism: float,
    sycophancy: float,
    latch: float,
    tol: float = 1e-9,
    max_iter: int = 10_000,
) -> FixedPointResult:
    """Stationary error rate of an infinitely extended chain.

    Closed form latch*sigma / (1 - latch*(tau - sigma)) when the denominator
    is positive and the value lands in [0, 1]; otherwise iterate the clamped
    step from mu = 1 until successive values differ by less than tol.
    """
    tribalism = _check_unit("tribalism", tribalism)
    sycophancy = _check_unit("sycophancy", sycophancy)
    latch = _check_latch(latch)

    denom = 1.0 - latch * (tribalism - sycophancy)
    if denom > 0.0:
        closed = latch * sycophancy / denom
        if 0.0 <= closed <= 1.0:
            return FixedPointResult(closed, 0, True)

    mu = 1.0
    for iteration in range(1, max_iter + 1):
        nxt = inverse_wisdom_step(mu, tribalism, sycophancy, latch)
        if abs(nxt - mu) < tol:
            return FixedPointResult(nxt, iteration, True)
        mu = nxt
    return FixedPointResult(mu, max_iter, False)


class ResilienceResult(NamedTuple):
    resilient: bool
    bound: float


def resilience_check(tribalism: float, sycophancy: float, critic_accuracy: float) -> ResilienceResult:
    """Whether the audited chain beats a lone auditor on the planted error.

    resilient means sigma*(1-B) + tau*B < 1-B, evaluated in exactly that
    form so it cannot drift from the defining comparison at boundary cells.
    The returned bound is the equivalent tribalism ceiling (1-B)(1-sigma)/B.
    """
    tribalism = _check_unit("tribalism", tribalism)
    sycophancy = _check_unit("sycophancy", sycophancy)
    critic_accuracy = _check_unit("critic_accuracy", critic_accuracy)
    if critic_accuracy == 0.0:
        raise ZeroDivisionError("critic_accuracy is zero; the resilience bound is undefined")
    resilient = linear_cascade_rate(sycophancy, tribalism, critic_accuracy) < 1.0 - critic_accuracy
    bound = (1.0 - critic_accuracy) * (1.0 - sycophancy) / critic_accuracy
    return ResilienceResult(resilient, bound)


def saturation_threshold(tribalism: float, sycophancy: float) -> float:
    """Geometric mean of the two failure propensities."""
    tribalism = _check_unit("tribalism", tribalism)
    sycophancy = _check_unit("sycophancy", sycophancy)
    return math.sqrt(tribalism * sycophancy)


def logic_neutralization(sycophancy: float) -> float:
    """Net truth advantage of a correct argument against sycophantic drift, 1 - 2*sigma."""
    sycophancy = _check_unit("sycophancy", sycophancy)
    return 1.0 - 2.0 * sycophancy


def coupled_branch_probabilities(
    tribalism: float, sycophancy: float, latch: float, tribal_weight: float
) -> tuple[float, float]:
    """Per-branch error probabilities consistent with the clamped coupled gate.

    Returns (p_tribal, p_syco) for a synthesizer whose tribal branch is active
    with probability tribal_weight. Naive per-branch clamping of latch*tau and
    latch*sigma loses mass whenever exactly one product exceeds 1, so the
    excess is spilled into the other branch before clamping; the weighted mean
    then equals min(1, latch*(tau*w + sigma*(1-w))) for every parameter set.
    """
    tribalism = _check_unit("tribalism", tribalism)
    sycophancy = _check_unit("sycophancy", sycophancy)
    latch = _check_latch(latch)
    w = _check_unit("tribal_weight", tribal_weight)

    raw_tribal = latch * tribalism
    raw_syco = latch * sycophancy
    p_tribal = raw_tribal
    p_syco = raw_syco
    if raw_syco > 1.0 and w > 0.0:
        p_tribal += (raw_syco - 1.0) * (1.0 - w) / w
    if raw_tribal > 1.0 and w < 1.0:
        p_syco += (raw_tribal - 1.0) * w / (1.0 - w)
    return min(1.0, p_tribal), min(1.0, p_syco)


def fit_scaling_law(points: Sequence[tuple[float, float]], mode: str = "two_point") -> ScalingFit:
    """Fit sigma(K) = sigma0 * exp(alpha * K) to (complexity, sycophancy) points.

    two_point: slope from the extreme-K pair, sigma0 anchored at the middle
    point of the K-sorted input (upper middle for even counts).
    least_squares: ordinary least squares on log sigma.

    Requires at least two points, at least two distinct K values, and strictly
    positive sigmas (log domain).
    """
    if len(points) < 2:
        raise ValueError("need at least two (K, sigma) points")
    cleaned = []
    for k, sigma in points:
        k = _check_unit("complexity", k)
        if sigma <= 0 or math.isnan(sigma):
            raise ValueError(f"sigma must be positive for a log-domain fit, got {sigma!r}")
        cleaned.append((k, float(sigma)))
    cleaned.sort(key=lambda p: p[0])
    if cleaned[0][0] == cleaned[-1][0]:
        raise ValueError("K values are all identical; the slope is unidentifiable")

    if mode == "two_point":
        (k_lo, s_lo), (k_hi, s_hi) = cleaned[0], cleaned[-1]
        alpha = (math.log(s_hi) - math.log(s_lo)) / (k_hi - k_lo)
        k_mid, s_mid = cleaned[len(cleaned) // 2]
        sigma0 = s_mid / math.exp(alpha * k_mid)
    elif mode == "least_squares":
        ks = np.array([k for k, _ in cleaned])
        logs = np.log([s for _, s in cleaned])
        alpha, intercept = np.polyfit(ks, logs, 1)
        alpha = float(alpha)
        sigma0 = float(math.exp(intercept))
    else:
        raise ValueError(f"unknown fit mode {mode!r}; expected 'two_point' or 'least_squares'")
    return ScalingFit(sigma0=sigma0, alpha=alpha)


def sycophancy_at_complexity(fit: ScalingFit, complexity: float) -> float:
    """Evaluate the fitted scaling curve at complexity K, clamped to 1."""
    complexity = _check_unit("complexity", complexity)
    return min(1.0, fit.sigma0 * math.exp(fit.alpha * complexity))


def critical_complexity(fit: ScalingFit, omega: float) -> float:
    """Complexity at which the fitted sycophancy curve crosses the threshold omega."""
    if omega <= fit.sigma0:
        raise ValueError(f"omega ({omega}) must exceed sigma0 ({fit.sigma0})")
    if fit.alpha <= 0:
        raise ValueError(f"alpha must be positive to cross the threshold, got {fit.alpha}")
    return math.log(omega / fit.sigma0) / fit.alpha
