"""Bundled reference measurements.

A 36-arm study (three benchmarks x twelve 3-agent configurations of the three
stock families) ships with the package so the estimation, fingerprinting, and
scaling tooling can be exercised and cross-checked without re-running any
experiments. Values are stored exactly as reported; derived columns are
recomputed by the library, never stored.
"""

from __future__ import annotations

from typing import NamedTuple

from .core import ArmStatistics, Fingerprint, default_registry
from .estimate import derive_statistics


class ReferenceArm(NamedTuple):
    """One reported arm. k_reported and latch_reported are the rounded
    derived columns as published; the library recomputes both from the
    measured fields."""

    benchmark: str
    config: str
    n: int
    mu: float
    mu_ci_halfwidth: float
    critic_accuracy: float
    tribalism: float
    sycophancy: float
    k_reported: float
    latch_reported: float


SAMPLE_SIZES = {"gaia": 301, "multi_challenge": 266, "swe_bench": 500}

REFERENCE_ARMS: tuple[ReferenceArm, ...] = (
    ReferenceArm("gaia", "GGG", 301, 0.940, 0.027, 0.661, 0.601, 0.339, 0.34, 1.84),
    ReferenceArm("gaia", "PPP", 301, 0.229, 0.047, 0.870, 0.106, 0.123, 0.13, 2.12),
    ReferenceArm("gaia", "CCC", 301, 0.243, 0.048, 0.771, 0.229, 0.013, 0.23, 1.35),
    ReferenceArm("gaia", "GCG", 301, 0.917, 0.031, 0.990, 0.907, 0.010, 0.01, 1.02),
    ReferenceArm("gaia", "PCP", 301, 0.312, 0.052, 0.907, 0.259, 0.053, 0.09, 1.30),
    ReferenceArm("gaia", "CGC", 301, 0.332, 0.053, 0.744, 0.189, 0.143, 0.26, 1.87),
    ReferenceArm("gaia", "PGG", 301, 0.771, 0.047, 0.674, 0.462, 0.309, 0.33, 1.87),
    ReferenceArm("gaia", "CPP", 301, 0.183, 0.043, 0.831, 0.113, 0.070, 0.17, 1.73),
    ReferenceArm("gaia", "GCC", 301, 0.239, 0.048, 0.983, 0.229, 0.010, 0.02, 1.06),
    ReferenceArm("gaia", "GGC", 301, 0.867, 0.038, 0.651, 0.528, 0.339, 0.35, 1.88),
    ReferenceArm("gaia", "PPG", 301, 0.488, 0.056, 0.874, 0.369, 0.120, 0.13, 1.44),
    ReferenceArm("gaia", "CCP", 301, 0.365, 0.054, 0.771, 0.312, 0.053, 0.23, 1.44),
    ReferenceArm("multi_challenge", "GGG", 266, 1.000, 0.000, 0.515, 0.515, 0.485, 0.49, 2.00),
    ReferenceArm("multi_challenge", "PPP", 266, 0.325, 0.056, 0.921, 0.249, 0.075, 0.08, 1.38),
    ReferenceArm("multi_challenge", "CCC", 266, 0.049, 0.026, 0.872, 0.045, 0.004, 0.13, 1.23),
    ReferenceArm("multi_challenge", "GCG", 266, 0.996, 0.007, 0.992, 0.989, 0.008, 0.01, 1.02),
    ReferenceArm("multi_challenge", "PCP", 266, 0.342, 0.057, 0.940, 0.323, 0.019, 0.06, 1.12),
    ReferenceArm("multi_challenge", "CGC", 266, 0.282, 0.054, 0.523, 0.120, 0.162, 0.48, 2.01),
    ReferenceArm("multi_challenge", "PGG", 266, 0.850, 0.043, 0.752, 0.624, 0.226, 0.25, 1.62),
    ReferenceArm("multi_challenge", "CPP", 266, 0.263, 0.053, 0.767, 0.199, 0.064, 0.23, 1.57),
    ReferenceArm("multi_challenge", "GCC", 266, 0.086, 0.034, 0.970, 0.068, 0.019, 0.03, 1.29),
    ReferenceArm("multi_challenge", "GGC", 266, 0.883, 0.038, 0.534, 0.477, 0.406, 0.47, 1.99),
    ReferenceArm("multi_challenge", "PPG", 266, 0.609, 0.059, 1.000, 0.609, 0.000, 0.00, 1.00),
    ReferenceArm("multi_challenge", "CCP", 266, 0.417, 0.059, 0.876, 0.383, 0.034, 0.12, 1.23),
    ReferenceArm("swe_bench", "GGG", 500, 0.926, 0.023, 0.702, 0.634, 0.292, 0.30, 1.74),
    ReferenceArm("swe_bench", "PPP", 500, 0.842, 0.032, 0.494, 0.382, 0.460, 0.51, 2.00),
    ReferenceArm("swe_bench", "CCC", 500, 0.344, 0.042, 0.880, 0.312, 0.032, 0.12, 1.24),
    ReferenceArm("swe_bench", "GCG", 500, 0.730, 0.039, 0.974, 0.714, 0.016, 0.03, 1.05),
    ReferenceArm("swe_bench", "PCP", 500, 0.608, 0.043, 0.838, 0.520, 0.088, 0.16, 1.35),
    ReferenceArm("swe_bench", "CGC", 500, 0.396, 0.043, 0.596, 0.184, 0.212, 0.40, 2.03),
    ReferenceArm("swe_bench", "PGG", 500, 0.678, 0.041, 0.910, 0.590, 0.088, 0.09, 1.24),
    ReferenceArm("swe_bench", "CPP", 500, 0.526, 0.044, 0.864, 0.458, 0.068, 0.14, 1.30),
    ReferenceArm("swe_bench", "GCC", 500, 0.250, 0.038, 0.960, 0.240, 0.010, 0.04, 1.08),
    ReferenceArm("swe_bench", "GGC", 500, 0.542, 0.044, 0.676, 0.282, 0.260, 0.32, 1.97),
    ReferenceArm("swe_bench", "PPG", 500, 0.794, 0.036, 0.462, 0.340, 0.454, 0.54, 1.98),
    ReferenceArm("swe_bench", "CCP", 500, 0.428, 0.043, 0.720, 0.212, 0.216, 0.28, 2.01),
)

# Arm codes whose synthesizer-side tribal rates feed each family's kinship
# weight: weight is the unweighted mean tribalism over these arms on every
# benchmark.
OMEGA_CONFIGS: dict[str, tuple[str, ...]] = {
    "G": ("GCG",),
    "P": ("PPP", "PCP"),
    "C": ("CCC", "CGC"),
}

# Reported behavioral fingerprints (tribal, sycophantic, truthful), already
# normalized. These are the published vectors; build_fingerprint() over the
# reference arms lands elsewhere because the published aggregation weights
# were not disclosed.
PUBLISHED_FINGERPRINTS: dict[str, tuple[float, float, float]] = {
    "G": (0.552, 0.290, 0.158),
    "P": (0.329, 0.120, 0.551),
    "C": (0.176, 0.071, 0.753),
}


class EntropyReference(NamedTuple):
    """Reported per-step error rates of one chain with the reported entropy
    readings. The step-3 readings were taken by a different instrument and do
    not match the binary entropy of the step-3 rate; they are kept verbatim."""

    benchmark: str
    config: str
    per_step_error: tuple[float, float, float]
    h2_reported: float
    h3_reported: float


ENTROPY_REFERENCE: tuple[EntropyReference, ...] = (
    EntropyReference("multi_challenge", "PPP", (1.0, 0.079, 0.325), 0.40, 0.65),
    EntropyReference("gaia", "GCG", (1.0, 0.010, 0.917), 0.08, 0.40),
    EntropyReference("gaia", "GCC", (1.0, 0.017, 0.239), 0.12, 0.35),
    EntropyReference("swe_bench", "PPP", (1.0, 0.506, 0.842), 1.00, 0.40),
)

# Reported sycophancy versus task complexity, one point per benchmark.
SCALING_POINTS: tuple[tuple[float, float], ...] = ((0.08, 0.075), (0.13, 0.123), (0.51, 0.460))

# Default saturation boundary used for regime classification and the critical
# complexity estimate.
OMEGA_DEFAULT = 0.45

BENCHMARKS = ("gaia", "multi_challenge", "swe_bench")
CONFIG_ORDER = ("GGG", "PPP", "CCC", "GCG", "PCP", "CGC", "PGG", "CPP", "GCC", "GGC", "PPG", "CCP")


def reference_statistics(level: float = 0.95) -> list[ArmStatistics]:
    """The bundled study as ArmStatistics rows (stored CI, derived conditionals)."""
    rows = []
    for arm in REFERENCE_ARMS:
        stats = derive_statistics(
            benchmark=arm.benchmark,
            config=arm.config,
            n=arm.n,
            mu=arm.mu,
            critic_accuracy=arm.critic_accuracy,
            tribalism=arm.tribalism,
            sycophancy=arm.sycophancy,
            level=level,
        )
        rows.append(
            ArmStatistics(
                config=stats.config,
                benchmark=stats.benchmark,
                n=stats.n,
                mu=stats.mu,
                mu_ci_halfwidth=arm.mu_ci_halfwidth,
                critic_accuracy=stats.critic_accuracy,
                tribalism=stats.tribalism,
                sycophancy=stats.sycophancy,
                conditional_tribalism=stats.conditional_tribalism,
                conditional_sycophancy=stats.conditional_sycophancy,
            )
        )
    return rows


def reference_row(benchmark: str, config: str) -> ReferenceArm:
    for arm in REFERENCE_ARMS:
        if arm.benchmark == benchmark and arm.config == config:
            return arm
    raise KeyError(f"no reference arm ({benchmark!r}, {config!r})")


def published_fingerprints() -> list[Fingerprint]:
    registry = default_registry()
    return [
        Fingerprint(registry.get(letter), *vector)
        for letter, vector in PUBLISHED_FINGERPRINTS.items()
    ]
