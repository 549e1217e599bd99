"""Ensemble Kalman filters (EnKF, MLEnKF, MIEnKF) backed by a C++ core."""

from ._core import (
    ArgumentError,
    ConfigurationError,
    DivergenceError,
    ModelSpec,
    ObservationSequence,
    RunRecord,
    Schedule,
    build_schedule,
    kalman_reference,
    make_langevin,
    make_model,
    mixed_difference_moments,
    reference_means,
    rmse,
    run_filter,
    synthesize_data,
)

__all__ = [
    "ArgumentError",
    "ConfigurationError",
    "DivergenceError",
    "ModelSpec",
    "ObservationSequence",
    "RunRecord",
    "Schedule",
    "build_schedule",
    "kalman_reference",
    "make_langevin",
    "make_model",
    "mixed_difference_moments",
    "reference_means",
    "rmse",
    "run_filter",
    "synthesize_data",
]
