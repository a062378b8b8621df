"""Agent-deletion perturbations and robustness evaluation for motion
forecasting scenarios: a scenario data model, causal label handling,
deletion perturbations and dropout augmentation, accuracy and
sensitivity metrics, baseline predictors, a synthetic scene generator
with known causality, and reporting utilities, all behind a streaming
CLI (`causal-perturb`)."""

from .augment import (
    AugmentConfig,
    AugmentKind,
    ScenarioAugmenter,
    augment_scenario,
    fold_validation_split,
    subsample_corpus,
)
from .baselines import (
    ConstantTurnRatePredictor,
    ConstantVelocityPredictor,
    PredictorKind,
    SocialRepulsionPredictor,
    make_predictor,
    predict_trajectories,
)
from .errors import CausalPerturbError, RecordFormatError, UnlabeledScenarioError
from .io import (
    load_covariates,
    load_predictions,
    load_scenarios,
    save_covariates,
    save_predictions,
    save_scenarios,
)
from .labels import (
    AgreementHistogram,
    CausalLabelFile,
    CausalSet,
    agreement_histogram,
    causal_union,
    effective_causal_ids,
    load_labels,
    save_labels,
)
from .metrics import (
    DEFAULT_METRIC_CONFIG,
    AbsDeltaSummary,
    MetricConfig,
    abs_delta,
    min_ade,
    min_fde,
    trajectory_set_iou,
    ts_min_ade,
)
from .perturb import (
    PerturbationKind,
    PerturbationOutcome,
    ScenarioPerturber,
    apply_perturbation,
    delete_agents,
    is_noncausal_perturbation,
    select_static,
)
from .report import (
    CausalStats,
    EvaluationSummary,
    PerExampleRecord,
    SliceDimension,
    SliceReport,
    SliceSpec,
    causal_stats,
    export_csv,
    joint_evaluate,
    read_records_csv,
    slice_records,
    summarize,
)
from .scenario import (
    AgentState,
    AgentTrack,
    AgentType,
    FeatureType,
    PredictedTrajectory,
    PredictionSet,
    RoadFeature,
    Scenario,
    Trajectory,
    agent_displacement,
    av_speed,
    canonicalize_scenario,
    distance_to_av,
)
from .synthgen import (
    IdmParams,
    SynthGroundTruth,
    SynthParams,
    generate,
    generate_corpus,
)
from .validation import validate_scenario

__version__ = "0.1.0"

__all__ = [
    "AbsDeltaSummary",
    "AgentState",
    "AgentTrack",
    "AgentType",
    "AgreementHistogram",
    "AugmentConfig",
    "AugmentKind",
    "CausalLabelFile",
    "CausalPerturbError",
    "CausalSet",
    "CausalStats",
    "ConstantTurnRatePredictor",
    "ConstantVelocityPredictor",
    "DEFAULT_METRIC_CONFIG",
    "EvaluationSummary",
    "FeatureType",
    "IdmParams",
    "MetricConfig",
    "PerExampleRecord",
    "PredictedTrajectory",
    "PredictionSet",
    "PredictorKind",
    "PerturbationKind",
    "PerturbationOutcome",
    "RecordFormatError",
    "RoadFeature",
    "Scenario",
    "ScenarioAugmenter",
    "ScenarioPerturber",
    "SliceDimension",
    "SliceReport",
    "SliceSpec",
    "SocialRepulsionPredictor",
    "SynthGroundTruth",
    "SynthParams",
    "Trajectory",
    "UnlabeledScenarioError",
    "abs_delta",
    "agent_displacement",
    "agreement_histogram",
    "apply_perturbation",
    "augment_scenario",
    "av_speed",
    "canonicalize_scenario",
    "causal_stats",
    "causal_union",
    "delete_agents",
    "distance_to_av",
    "effective_causal_ids",
    "export_csv",
    "fold_validation_split",
    "generate",
    "generate_corpus",
    "is_noncausal_perturbation",
    "joint_evaluate",
    "load_covariates",
    "load_labels",
    "load_predictions",
    "load_scenarios",
    "make_predictor",
    "min_ade",
    "min_fde",
    "predict_trajectories",
    "read_records_csv",
    "save_covariates",
    "save_labels",
    "save_predictions",
    "save_scenarios",
    "select_static",
    "slice_records",
    "subsample_corpus",
    "summarize",
    "trajectory_set_iou",
    "ts_min_ade",
    "validate_scenario",
]
