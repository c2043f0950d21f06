"""Monte Carlo simulator for audited agent chains.

Step 1 always emits the planted error. Step 2 audits and corrects with the
auditor's critic_accuracy. Every later step is a synthesizer draw through the
coupled gate: at step 3 the tribal branch fires against a standing correction,
from step 4 on it fires for a standing error (the recurrence regime). Branch
probabilities come from gating.coupled_branch_probabilities, so per-position
mean rates match the clamped closed forms exactly.

Randomness is counter-addressed: draw (trajectory, step) maps to a fixed
Philox counter block derived from (base_seed, trajectory index, step index),
so any chunking or worker count reproduces identical trajectories.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import ArchProfile, EntropyTrace, ModelFamily, TrajectoryRecord
from .gating import coupled_branch_probabilities

_CHUNK = 65536
_DOUBLE_SCALE = 1.0 / (1 << 53)


@dataclass(frozen=True)
class SimulationSpec:
    """A chain of families to simulate on one benchmark."""

    chain: tuple[ModelFamily, ...]
    profiles: Mapping[tuple[str, str], ArchProfile]
    benchmark: str
    n_trajectories: int
    base_seed: int
    latch: float | tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.chain) < 3:
            raise ValueError(f"chain needs at least 3 agents, got {len(self.chain)}")
        if self.n_trajectories < 1:
            raise ValueError(f"n_trajectories must be >= 1, got {self.n_trajectories}")
        if self.base_seed < 0:
            raise ValueError(f"base_seed must be non-negative, got {self.base_seed}")
        for family in self.chain:
            self.profile_for(family)
        n_synth = len(self.chain) - 2
        if isinstance(self.latch, tuple):
            if len(self.latch) != n_synth:
                raise ValueError(f"need {n_synth} per-step latch values, got {len(self.latch)}")
            values: tuple[float, ...] = self.latch
        elif self.latch is None:
            values = ()
        else:
            values = (float(self.latch),)
        for lam in values:
            if not 1.0 <= lam <= 2.0:
                raise ValueError(f"latch must lie in [1, 2], got {lam}")

    def profile_for(self, family: ModelFamily) -> ArchProfile:
        key = (family.id, self.benchmark)
        if key not in self.profiles:
            raise KeyError(f"no profile for family {family.id!r} on benchmark {self.benchmark!r}")
        return self.profiles[key]

    def step_latches(self) -> tuple[float, ...]:
        """Latch per synthesizer step (positions 3..n)."""
        n_synth = len(self.chain) - 2
        if isinstance(self.latch, tuple):
            return self.latch
        if self.latch is not None:
            return (float(self.latch),) * n_synth
        derived = []
        for pos in range(3, len(self.chain) + 1):
            same_source = self.chain[pos - 1].id == self.chain[0].id
            united_front = self.chain[pos - 3].id == self.chain[pos - 2].id
            derived.append(2.0 if same_source or united_front else 1.0)
        return tuple(derived)

    @property
    def config(self) -> str:
        return "".join(f.id for f in self.chain)


@dataclass(frozen=True)
class SimulatedTrajectory:
    index: int
    per_step_error: tuple[bool, ...]
    terminal_error: bool
    seed: int


@dataclass(frozen=True)
class ArmSimulation:
    """Aggregate of one simulated arm. Counts are exact integers so that
    aggregates are identical for any execution schedule."""

    spec: SimulationSpec
    per_step_error_counts: tuple[int, ...]
    trajectories: tuple[SimulatedTrajectory, ...] | None = None

    @property
    def n(self) -> int:
        return self.spec.n_trajectories

    @property
    def per_step_error_rates(self) -> tuple[float, ...]:
        return tuple(c / self.n for c in self.per_step_error_counts)

    @property
    def mu_hat(self) -> float:
        return self.per_step_error_counts[-1] / self.n


def _philox_key(base_seed: int) -> int:
    digest = hashlib.blake2b(
        b"swarmgate.simulate:" + str(base_seed).encode(), digest_size=16
    ).digest()
    return int.from_bytes(digest, "little")


def _uniform_rows(key: int, start: int, count: int, width: int) -> np.ndarray:
    """Uniforms for trajectories [start, start+count), one column per drawn step.

    Draw (index, j) occupies Philox counter block index*width + j, which makes
    the addressing independent of chunk boundaries.
    """
    first_block = start * width
    bg = np.random.Philox(key=key, counter=[first_block, 0, 0, 0])
    raw = bg.random_raw(4 * count * width)[::4]
    return ((raw >> np.uint64(11)) * _DOUBLE_SCALE).reshape(count, width)


def _step_plan(spec: SimulationSpec) -> list[tuple[float, float]]:
    """Per synthesizer step: (p_error_given_prev_error, p_error_given_prev_correct)."""
    latches = spec.step_latches()
    auditor_accuracy = spec.profile_for(spec.chain[1]).critic_accuracy
    plan: list[tuple[float, float]] = []
    prev_error_rate = 1.0 - auditor_accuracy
    for pos in range(3, len(spec.chain) + 1):
        profile = spec.profile_for(spec.chain[pos - 1])
        lam = latches[pos - 3]
        if pos == 3:
            # tribal branch = the auditor produced a correction to reject
            tribal_weight = 1.0 - prev_error_rate
            p_tribal, p_syco = coupled_branch_probabilities(
                profile.tribalism, profile.sycophancy, lam, tribal_weight
            )
            p_err, p_corr = p_syco, p_tribal
        else:
            # tribal branch = the standing kinship error persists
            tribal_weight = prev_error_rate
            p_tribal, p_syco = coupled_branch_probabilities(
                profile.tribalism, profile.sycophancy, lam, tribal_weight
            )
            p_err, p_corr = p_tribal, p_syco
        plan.append((p_err, p_corr))
        prev_error_rate = prev_error_rate * p_err + (1.0 - prev_error_rate) * p_corr
    return plan


def step_error_targets(spec: SimulationSpec) -> tuple[float, ...]:
    """Exact per-position error rates implied by the transition plan."""
    auditor_accuracy = spec.profile_for(spec.chain[1]).critic_accuracy
    rates = [1.0, 1.0 - auditor_accuracy]
    for p_err, p_corr in _step_plan(spec):
        prev = rates[-1]
        rates.append(prev * p_err + (1.0 - prev) * p_corr)
    return tuple(rates)


def simulate_trajectory(spec: SimulationSpec, index: int) -> SimulatedTrajectory:
    """Run one trajectory. Identical (base_seed, index) gives identical output."""
    if not 0 <= index < spec.n_trajectories:
        raise IndexError(f"trajectory index {index} outside [0, {spec.n_trajectories})")
    n = len(spec.chain)
    draws = _uniform_rows(_philox_key(spec.base_seed), index, 1, n - 1)[0]
    auditor_accuracy = spec.profile_for(spec.chain[1]).critic_accuracy

    flags = [True, bool(draws[0] >= auditor_accuracy)]
    for offset, (p_err, p_corr) in enumerate(_step_plan(spec)):
        p = p_err if flags[-1] else p_corr
        flags.append(bool(draws[offset + 1] < p))
    return SimulatedTrajectory(
        index=index,
        per_step_error=tuple(flags),
        terminal_error=flags[-1],
        seed=spec.base_seed,
    )


def _simulate_chunk(
    spec: SimulationSpec,
    key: int,
    start: int,
    count: int,
    plan: list[tuple[float, float]],
    keep: bool,
) -> tuple[np.ndarray, np.ndarray | None]:
    n = len(spec.chain)
    draws = _uniform_rows(key, start, count, n - 1)
    auditor_accuracy = spec.profile_for(spec.chain[1]).critic_accuracy

    errors = np.empty((count, n), dtype=bool)
    errors[:, 0] = True
    errors[:, 1] = draws[:, 0] >= auditor_accuracy
    prev = errors[:, 1]
    for offset, (p_err, p_corr) in enumerate(plan):
        p = np.where(prev, p_err, p_corr)
        prev = draws[:, offset + 1] < p
        errors[:, offset + 2] = prev
    counts = errors.sum(axis=0, dtype=np.int64)
    return counts, (errors if keep else None)


def simulate_arm(
    spec: SimulationSpec, workers: int = 1, keep_trajectories: bool = False
) -> ArmSimulation:
    """Simulate all trajectories of an arm.

    Aggregates are integer counts summed over fixed-size chunks, so results
    are bit-identical for any worker count.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    key = _philox_key(spec.base_seed)
    plan = _step_plan(spec)
    n = spec.n_trajectories
    chunks = [(start, min(_CHUNK, n - start)) for start in range(0, n, _CHUNK)]

    def run(chunk: tuple[int, int]) -> tuple[np.ndarray, np.ndarray | None]:
        start, count = chunk
        return _simulate_chunk(spec, key, start, count, plan, keep_trajectories)

    if workers == 1 or len(chunks) == 1:
        results = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, chunks))

    total = np.zeros(len(spec.chain), dtype=np.int64)
    for counts, _ in results:
        total += counts

    trajectories: tuple[SimulatedTrajectory, ...] | None = None
    if keep_trajectories:
        rows: list[SimulatedTrajectory] = []
        for (start, _), (_, errors) in zip(chunks, results):
            assert errors is not None
            for offset, row in enumerate(errors):
                flags = tuple(bool(x) for x in row)
                rows.append(
                    SimulatedTrajectory(
                        index=start + offset,
                        per_step_error=flags,
                        terminal_error=flags[-1],
                        seed=spec.base_seed,
                    )
                )
        trajectories = tuple(rows)
    return ArmSimulation(spec=spec, per_step_error_counts=tuple(int(c) for c in total), trajectories=trajectories)


def binary_entropy(p: float) -> float:
    """Shannon entropy of a Bernoulli rate, in bits. 0*log(0) is taken as 0."""
    if math.isnan(p) or not 0.0 <= p <= 1.0:
        raise ValueError(f"rate must lie in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def entropy_trace(
    per_step_error_rates: Sequence[float], config: str = "", benchmark: str = ""
) -> EntropyTrace:
    """Binary entropy of each per-step error rate."""
    rates = tuple(float(r) for r in per_step_error_rates)
    return EntropyTrace(
        config=config,
        benchmark=benchmark,
        per_step_error=rates,
        per_step_entropy=tuple(binary_entropy(r) for r in rates),
    )


def records_from_simulation(
    spec: SimulationSpec,
    trajectories: Sequence[SimulatedTrajectory],
    experiment_id: str = "simulation",
) -> list[TrajectoryRecord]:
    """Export 3-agent simulated trajectories in the harness log shape.

    Longer chains have no record representation (the log format carries
    exactly three step slots); they raise ValueError.
    """
    if len(spec.chain) != 3:
        raise ValueError("only 3-agent chains can be exported as trajectory records")
    records = []
    for traj in trajectories:
        flags = traj.per_step_error
        records.append(
            TrajectoryRecord(
                experiment_id=experiment_id,
                benchmark=spec.benchmark,
                config=spec.config,
                sample_id=traj.index,
                taint_id=f"SIM-{spec.benchmark}-{traj.index}",
                step_outputs=("", "", ""),
                step_error_flags=flags,
                audit_correct=not flags[1],
                refusal=False,
                terminal_error=flags[2],
                seed=traj.seed,
            )
        )
    return records
