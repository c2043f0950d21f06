import pytest

from swarmgate.core import ArchProfile, ModelFamily, TrajectoryRecord, default_registry


@pytest.fixture
def registry():
    return default_registry()


# (critic_accuracy, tribalism, sycophancy) triples used across tests.
SATURATION = (0.515, 0.515, 0.485)
CAUTIOUS = (0.872, 0.045, 0.004)


@pytest.fixture
def make_records():
    """Factory for internally consistent trajectory records with exact counts.

    outcomes: iterable of (audit_correct, step3_error, refusal) triples.
    """

    def build(outcomes, config="GGG", benchmark="bench", start_id=0):
        records = []
        for i, (audit_correct, step3_error, refusal) in enumerate(outcomes):
            sample_id = start_id + i
            records.append(
                TrajectoryRecord(
                    experiment_id="test",
                    benchmark=benchmark,
                    config=config,
                    sample_id=sample_id,
                    taint_id=f"TAINT-{benchmark}-{sample_id}-aaaaaa",
                    step_outputs=("planted", "audited", "resolved"),
                    step_error_flags=(True, not audit_correct, step3_error),
                    audit_correct=audit_correct,
                    refusal=refusal,
                    terminal_error=step3_error and not refusal,
                    seed=7,
                )
            )
        return records

    return build


@pytest.fixture
def uniform_profile():
    """One profile applied to a synthetic family, keyed for SimulationSpec."""

    def build(critic_accuracy, tribalism, sycophancy, benchmark="bench", letter="X"):
        family = ModelFamily(letter, "uniform")
        profile = ArchProfile(
            family=family,
            benchmark=benchmark,
            critic_accuracy=critic_accuracy,
            tribalism=tribalism,
            sycophancy=sycophancy,
        )
        return family, {(letter, benchmark): profile}

    return build
