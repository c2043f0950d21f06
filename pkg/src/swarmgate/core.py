"""Core value types shared across the toolkit.

Families are registered under single-letter ids. An arm is a three-agent
chain (propagator, auditor, synthesizer) pointed at one benchmark; its
measured outcome is an ArmStatistics row whose derived columns (complexity,
linear rate, latch factor, saturation threshold) are pure functions of the
measured (mu, B, tau, sigma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping


def _check_unit(name: str, value: float) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


@dataclass(frozen=True)
class ModelFamily:
    """One model family, addressed by a single uppercase letter."""

    id: str
    display_name: str = ""

    def __post_init__(self) -> None:
        if len(self.id) != 1 or not self.id.isascii() or not self.id.isupper():
            raise ValueError(f"family id must be one uppercase ASCII letter, got {self.id!r}")


class FamilyRegistry:
    """Mutable mapping of family letters to ModelFamily entries."""

    def __init__(self, families: Iterable[ModelFamily] = ()) -> None:
        self._families: dict[str, ModelFamily] = {}
        for fam in families:
            self.register(fam)

    def register(self, family: ModelFamily) -> ModelFamily:
        if family.id in self._families:
            raise ValueError(f"family {family.id!r} is already registered")
        self._families[family.id] = family
        return family

    def get(self, letter: str) -> ModelFamily:
        try:
            return self._families[letter]
        except KeyError:
            raise KeyError(f"unknown family letter {letter!r}; registered: {sorted(self._families)}") from None

    def parse_config(self, code: str) -> tuple[ModelFamily, ModelFamily, ModelFamily]:
        """Resolve a 3-letter arm code to (propagator, auditor, synthesizer)."""
        if len(code) != 3:
            raise ValueError(f"arm code must be exactly 3 letters, got {code!r}")
        p, a, s = (self.get(letter) for letter in code)
        return p, a, s

    def format_config(self, families: tuple[ModelFamily, ModelFamily, ModelFamily]) -> str:
        return "".join(fam.id for fam in families)

    def __contains__(self, letter: str) -> bool:
        return letter in self._families

    def __iter__(self) -> Iterator[ModelFamily]:
        return iter(self._families.values())

    def __len__(self) -> int:
        return len(self._families)


def default_registry() -> FamilyRegistry:
    """Registry preloaded with the three stock families. Extensible via register()."""
    return FamilyRegistry(
        [
            ModelFamily("G", "Gemini 3.1 Pro"),
            ModelFamily("P", "GPT-5.4"),
            ModelFamily("C", "Claude Sonnet 4.6"),
        ]
    )


@dataclass(frozen=True)
class ArchProfile:
    """Behavioral coefficients of one family on one benchmark.

    critic_accuracy: probability the family, auditing, flags a planted error.
    tribalism: probability the family, synthesizing, rejects a valid correction.
    sycophancy: probability the family, synthesizing, adopts an erroneous majority.
    """

    family: ModelFamily
    benchmark: str
    critic_accuracy: float
    tribalism: float
    sycophancy: float

    def __post_init__(self) -> None:
        _check_unit("critic_accuracy", self.critic_accuracy)
        _check_unit("tribalism", self.tribalism)
        _check_unit("sycophancy", self.sycophancy)

    @property
    def complexity(self) -> float:
        return 1.0 - self.critic_accuracy


def kinship_latch(propagator: ModelFamily, auditor: ModelFamily, synthesizer: ModelFamily) -> float:
    """Default latch factor when none is measured.

    Coarse rule: 2.0 when the synthesizer shares a family with the error
    source, or when the two upstream agents form a same-family front; 1.0
    otherwise. Intermediate values are only ever supplied from data.
    """
    if synthesizer.id == propagator.id or propagator.id == auditor.id:
        return 2.0
    return 1.0


@dataclass(frozen=True)
class ArmConfig:
    """One experimental arm: a 3-agent chain on a benchmark."""

    propagator: ModelFamily
    auditor: ModelFamily
    synthesizer: ModelFamily
    benchmark: str
    n_samples: int
    latch: float | None = None

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.latch is not None and not 1.0 <= self.latch <= 2.0:
            raise ValueError(f"latch must lie in [1, 2], got {self.latch}")

    @property
    def code(self) -> str:
        return self.propagator.id + self.auditor.id + self.synthesizer.id

    def effective_latch(self) -> float:
        if self.latch is not None:
            return self.latch
        return kinship_latch(self.propagator, self.auditor, self.synthesizer)

    @classmethod
    def from_code(
        cls,
        code: str,
        registry: FamilyRegistry,
        benchmark: str,
        n_samples: int,
        latch: float | None = None,
    ) -> "ArmConfig":
        p, a, s = registry.parse_config(code)
        return cls(p, a, s, benchmark, n_samples, latch)


@dataclass(frozen=True, eq=True)
class TrajectoryRecord:
    """One executed 3-step trajectory, as written to the log.

    Invariants enforced on construction:
      step_error_flags[0] is always true (the protocol plants the error),
      audit_correct mirrors step_error_flags[1],
      terminal_error = step_error_flags[2] and not refusal.
    """

    experiment_id: str
    benchmark: str
    config: str
    sample_id: int
    taint_id: str
    step_outputs: tuple[str, str, str]
    step_error_flags: tuple[bool, bool, bool]
    audit_correct: bool
    refusal: bool
    terminal_error: bool
    seed: int
    extra: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.step_outputs) != 3 or len(self.step_error_flags) != 3:
            raise ValueError("step_outputs and step_error_flags must have exactly 3 entries")
        if self.sample_id < 0:
            raise ValueError(f"sample_id must be non-negative, got {self.sample_id}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if not self.step_error_flags[0]:
            raise ValueError("step_error_flags[0] must be true: step 1 is erroneous by protocol")
        if self.audit_correct != (not self.step_error_flags[1]):
            raise ValueError("audit_correct must equal (not step_error_flags[1])")
        if self.terminal_error != (self.step_error_flags[2] and not self.refusal):
            raise ValueError("terminal_error must equal (step_error_flags[2] and not refusal)")


@dataclass(frozen=True)
class ArmStatistics:
    """Measured outcome of one arm.

    tribalism and sycophancy here are the joint failure rates (the share of
    all samples that are audit-correct-and-terminal-error, resp.
    audit-erroneous-and-terminal-error), so mu = tribalism + sycophancy.
    The per-branch conditional rates, when defined, ride along separately.
    """

    config: str
    benchmark: str
    n: int
    mu: float
    mu_ci_halfwidth: float
    critic_accuracy: float
    tribalism: float
    sycophancy: float
    conditional_tribalism: float | None = None
    conditional_sycophancy: float | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        _check_unit("mu", self.mu)
        _check_unit("critic_accuracy", self.critic_accuracy)
        _check_unit("tribalism", self.tribalism)
        _check_unit("sycophancy", self.sycophancy)
        if self.mu_ci_halfwidth < 0:
            raise ValueError("mu_ci_halfwidth must be non-negative")
        for name in ("conditional_tribalism", "conditional_sycophancy"):
            value = getattr(self, name)
            if value is not None:
                _check_unit(name, value)

    # Derived columns. Pure functions of the measured fields, never stored.

    @property
    def complexity(self) -> float:
        return 1.0 - self.critic_accuracy

    @property
    def mu_linear(self) -> float:
        return self.sycophancy * (1.0 - self.critic_accuracy) + self.tribalism * self.critic_accuracy

    @property
    def latch(self) -> float:
        """Observed amplification mu / mu_linear. Diagnostic: may exceed 2, nan when mu_linear = 0."""
        linear = self.mu_linear
        if linear <= 0.0:
            return math.nan
        return self.mu / linear

    @property
    def saturation(self) -> float:
        return math.sqrt(self.tribalism * self.sycophancy)


@dataclass(frozen=True)
class Fingerprint:
    """Normalized behavioral disposition of a synthesizer family.

    Components: propensity to keep a kinship error, propensity to adopt an
    erroneous majority, propensity to land on the correct answer. Normalized
    to sum to 1 on construction; normalizing twice is a no-op.
    """

    family: ModelFamily
    p_tribal: float
    p_syco: float
    p_truth: float

    def __post_init__(self) -> None:
        comps = (self.p_tribal, self.p_syco, self.p_truth)
        if any(c < 0 or math.isnan(c) for c in comps):
            raise ValueError(f"fingerprint components must be non-negative, got {comps}")
        total = sum(comps)
        if total <= 0:
            raise ValueError("fingerprint components must not all be zero")
        if abs(total - 1.0) > 1e-9:
            object.__setattr__(self, "p_tribal", self.p_tribal / total)
            object.__setattr__(self, "p_syco", self.p_syco / total)
            object.__setattr__(self, "p_truth", self.p_truth / total)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_tribal, self.p_syco, self.p_truth)


@dataclass(frozen=True)
class ScalingFit:
    """Exponential complexity scaling sigma(K) = sigma0 * exp(alpha * K)."""

    sigma0: float
    alpha: float

    def __post_init__(self) -> None:
        if self.sigma0 <= 0 or math.isnan(self.sigma0):
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if math.isnan(self.alpha):
            raise ValueError("alpha must be a number")


@dataclass(frozen=True)
class EntropyTrace:
    """Per-step error rates of a chain and their binary entropies."""

    config: str
    benchmark: str
    per_step_error: tuple[float, ...]
    per_step_entropy: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.per_step_error) != len(self.per_step_entropy):
            raise ValueError("error and entropy sequences must have equal length")
        for rate in self.per_step_error:
            _check_unit("per_step_error", rate)
        for h in self.per_step_entropy:
            if not 0.0 <= h <= 1.0:
                raise ValueError(f"entropy values must lie in [0, 1], got {h}")
