"""Frequentist estimation of arm statistics from trajectory logs.

Every quantity is a plain proportion with a normal-approximation interval.
Two readings of the failure-mode split are produced side by side: joint rates
(share of all samples lost through each branch; these sum to mu and are the
table semantics used across the toolkit) and conditional rates (normalized by
the branch opportunity count; undefined when that count is zero).
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from statistics import NormalDist
from typing import Collection, Iterable, Sequence

from .core import ArmStatistics, ModelFamily, TrajectoryRecord, _check_unit
from .gating import resilience_check, saturation_threshold

REGIME_RESILIENT = "resilient"
REGIME_TRANSITION = "transition"
REGIME_LOGIC_SATURATION = "logic_saturation"


def proportion_ci(p: float, n: int, level: float = 0.95) -> float:
    """Half-width of the normal-approximation interval for a proportion.

    Degenerate proportions (0 or 1) give a zero half-width, matching how
    all-failure arms are reported upstream.
    """
    p = _check_unit("p", p)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    return z * math.sqrt(p * (1.0 - p) / n)


def estimate_arm(records: Sequence[TrajectoryRecord], level: float = 0.95) -> ArmStatistics:
    """Estimate one arm from its trajectory records.

    All records must belong to the same (config, benchmark); refusal records
    count toward n but never toward terminal errors.
    """
    if not records:
        raise ValueError("cannot estimate an arm from zero records")
    config = records[0].config
    benchmark = records[0].benchmark
    for rec in records:
        if rec.config != config or rec.benchmark != benchmark:
            raise ValueError(
                f"mixed arms in one estimate: ({config}, {benchmark}) vs ({rec.config}, {rec.benchmark})"
            )

    n = len(records)
    audit_count = sum(1 for r in records if r.audit_correct)
    terminal_count = sum(1 for r in records if r.terminal_error)
    tribal_count = sum(1 for r in records if r.audit_correct and r.terminal_error)
    syco_count = sum(1 for r in records if not r.audit_correct and r.terminal_error)

    mu = terminal_count / n
    return ArmStatistics(
        config=config,
        benchmark=benchmark,
        n=n,
        mu=mu,
        mu_ci_halfwidth=proportion_ci(mu, n, level),
        critic_accuracy=audit_count / n,
        tribalism=tribal_count / n,
        sycophancy=syco_count / n,
        conditional_tribalism=tribal_count / audit_count if audit_count else None,
        conditional_sycophancy=syco_count / (n - audit_count) if n - audit_count else None,
    )


def group_records(
    records: Iterable[TrajectoryRecord],
) -> dict[tuple[str, str], list[TrajectoryRecord]]:
    """Bucket records by (benchmark, config)."""
    groups: dict[tuple[str, str], list[TrajectoryRecord]] = defaultdict(list)
    for rec in records:
        groups[(rec.benchmark, rec.config)].append(rec)
    return dict(groups)


def estimate_log(records: Iterable[TrajectoryRecord], level: float = 0.95) -> list[ArmStatistics]:
    """Estimate every arm present in a record stream, sorted by (benchmark, config)."""
    groups = group_records(records)
    if not groups:
        raise ValueError("no records to estimate")
    return [estimate_arm(groups[key], level) for key in sorted(groups)]


def derive_statistics(
    benchmark: str,
    config: str,
    n: int,
    mu: float,
    critic_accuracy: float,
    tribalism: float,
    sycophancy: float,
    level: float = 0.95,
) -> ArmStatistics:
    """Build an ArmStatistics row from already-measured proportions.

    This is the derive-only path: no records, just (mu, B, tau, sigma) plus n,
    with the interval and conditional rates filled in. Conditional rates are
    clamped to 1 because rounded published inputs can overshoot slightly.
    """
    cond_tribal = min(1.0, tribalism / critic_accuracy) if critic_accuracy > 0 else None
    cond_syco = min(1.0, sycophancy / (1.0 - critic_accuracy)) if critic_accuracy < 1 else None
    return ArmStatistics(
        config=config,
        benchmark=benchmark,
        n=n,
        mu=mu,
        mu_ci_halfwidth=proportion_ci(mu, n, level),
        critic_accuracy=critic_accuracy,
        tribalism=tribalism,
        sycophancy=sycophancy,
        conditional_tribalism=cond_tribal,
        conditional_sycophancy=cond_syco,
    )


@dataclass(frozen=True)
class FamilyWeight:
    """Kinship stubbornness of one family: mean tribalism over its locked arms."""

    family: ModelFamily
    omega: float
    arms_used: tuple[str, ...]

    def __post_init__(self) -> None:
        _check_unit("omega", self.omega)
        if not self.arms_used:
            raise ValueError("arms_used must not be empty")


def estimate_family_weight(
    stats: Sequence[ArmStatistics], family: ModelFamily, configs: Collection[str]
) -> FamilyWeight:
    """Unweighted mean tribalism over the selected kinship arms.

    The arm selection is explicit: pass the config codes to average. Every
    selected code must have the target family as both propagator and
    synthesizer, and at least one matching row must exist.
    """
    wanted = set(configs)
    for code in wanted:
        if len(code) != 3 or code[0] != family.id or code[2] != family.id:
            raise ValueError(
                f"config {code!r} is not a kinship arm for family {family.id!r} "
                "(propagator and synthesizer must both match)"
            )
    selected = [s for s in stats if s.config in wanted]
    if not selected:
        raise ValueError(f"no rows matched configs {sorted(wanted)}")
    omega = sum(s.tribalism for s in selected) / len(selected)
    return FamilyWeight(family=family, omega=omega, arms_used=tuple(s.config for s in selected))


def regime_classify(stats: ArmStatistics, omega_threshold: float = 0.45) -> str:
    """Coarse regime label for one arm.

    logic_saturation when the saturation threshold clears omega_threshold and
    the observed latch is at (or effectively at) its ceiling; resilient when
    the chain beats a lone auditor; transition otherwise. An arm with a
    never-correct auditor cannot be resilient, so it falls through rather
    than raising.
    """
    sat = saturation_threshold(stats.tribalism, stats.sycophancy)
    lam = stats.latch
    if sat >= omega_threshold and not math.isnan(lam) and lam >= 1.9:
        return REGIME_LOGIC_SATURATION
    if stats.critic_accuracy > 0.0:
        if resilience_check(stats.tribalism, stats.sycophancy, stats.critic_accuracy).resilient:
            return REGIME_RESILIENT
    return REGIME_TRANSITION
