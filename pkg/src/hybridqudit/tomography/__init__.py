"""Counting statistics, maximum-likelihood reconstruction and bootstrap errors."""
from .bootstrap import BootstrapResult, bootstrap_estimate, resample_records
from .counts import (
    CountRecord,
    exact_counts,
    expectation_from_counts,
    group_by_setting,
    outcome_probabilities,
    simulate_counts,
)
from .mle import MleOptions, MleResult, log_likelihood, mle_reconstruct, run_mle
from .settings import (
    MeasurementSetting,
    complete_pauli_settings,
    gauge_freedom,
    measurement_matrix,
    measurement_rank,
    named_projector_set,
    pauli_projector,
    pauli_setting,
    pauli_settings,
    restricted_settings,
    restricted_xz_settings,
)

__all__ = [
    "BootstrapResult", "bootstrap_estimate", "resample_records",
    "CountRecord", "exact_counts", "expectation_from_counts", "group_by_setting",
    "outcome_probabilities", "simulate_counts",
    "MleOptions", "MleResult", "log_likelihood", "mle_reconstruct", "run_mle",
    "MeasurementSetting", "complete_pauli_settings", "gauge_freedom", "measurement_matrix",
    "measurement_rank", "named_projector_set", "pauli_projector", "pauli_setting",
    "pauli_settings", "restricted_settings", "restricted_xz_settings",
]
