"""swarmgate: cascade failure analysis for audited agent chains.

A chain plants an error, audits it, and synthesizes a final answer; this
package provides the closed-form gating laws for how often the error
survives, a deterministic Monte Carlo simulator of those chains, estimators
that recover the gate parameters from trajectory logs, behavioral
fingerprinting of model families, a taint-injection experiment harness, and
a report CLI.
"""

from .core import (
    ArchProfile,
    ArmConfig,
    ArmStatistics,
    EntropyTrace,
    FamilyRegistry,
    Fingerprint,
    ModelFamily,
    ScalingFit,
    TrajectoryRecord,
    default_registry,
    kinship_latch,
)
from .estimate import (
    FamilyWeight,
    derive_statistics,
    estimate_arm,
    estimate_family_weight,
    estimate_log,
    group_records,
    proportion_ci,
    regime_classify,
)
from .fingerprint import (
    DistanceMatrix,
    build_fingerprint,
    classify_pair,
    distance_matrix,
    jsd,
    kl_divergence,
)
from .gating import (
    FixedPointResult,
    ResilienceResult,
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
from .harness import (
    AgentEndpoint,
    ExperimentMatrix,
    MatrixResult,
    TaintSpec,
    TransportError,
    load_matrix,
    run_matrix,
    run_trajectory,
)
from .simulate import (
    ArmSimulation,
    SimulationSpec,
    binary_entropy,
    entropy_trace,
    records_from_simulation,
    simulate_arm,
    simulate_trajectory,
    step_error_targets,
)
from .trajlog import (
    LogFormatError,
    append_record,
    iter_records,
    read_records,
    record_from_json,
    record_to_json,
    write_records,
)

__version__ = "0.1.0"

__all__ = [
    "AgentEndpoint",
    "ArchProfile",
    "ArmConfig",
    "ArmSimulation",
    "ArmStatistics",
    "DistanceMatrix",
    "EntropyTrace",
    "ExperimentMatrix",
    "FamilyRegistry",
    "FamilyWeight",
    "Fingerprint",
    "FixedPointResult",
    "LogFormatError",
    "MatrixResult",
    "ModelFamily",
    "ResilienceResult",
    "ScalingFit",
    "SimulationSpec",
    "TaintSpec",
    "TrajectoryRecord",
    "TransportError",
    "append_record",
    "attention_latch_factor",
    "binary_entropy",
    "build_fingerprint",
    "classify_pair",
    "coupled_branch_probabilities",
    "coupled_cascade_rate",
    "critical_complexity",
    "default_registry",
    "derive_statistics",
    "distance_matrix",
    "entropy_trace",
    "estimate_arm",
    "estimate_family_weight",
    "estimate_log",
    "fit_scaling_law",
    "group_records",
    "integrity_floor",
    "inverse_wisdom_fixed_point",
    "inverse_wisdom_step",
    "iter_records",
    "jsd",
    "kinship_latch",
    "kl_divergence",
    "linear_cascade_rate",
    "load_matrix",
    "logic_neutralization",
    "proportion_ci",
    "read_records",
    "record_from_json",
    "record_to_json",
    "records_from_simulation",
    "regime_classify",
    "resilience_check",
    "run_matrix",
    "run_trajectory",
    "saturation_threshold",
    "simulate_arm",
    "simulate_trajectory",
    "step_error_targets",
    "sycophancy_at_complexity",
    "write_records",
]
