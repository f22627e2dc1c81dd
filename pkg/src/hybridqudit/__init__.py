"""Simulation and analysis toolkit for two-photon path/TE-mode qudit states."""
from .core import (
    average_entanglement_entropy,
    born_probability,
    entanglement_entropy,
    fidelity_pure,
    partial_trace,
    pauli_string,
    tensor,
    trace_distance,
    von_neumann_entropy,
)
from .errors import (
    BootstrapError,
    DegenerateStateError,
    HybridQuditError,
    InvalidDensityMatrixError,
    RejectedInputError,
    UndefinedExpectationError,
    UndefinedVisibilityError,
)
from .states import (
    DofAddress,
    apply_bit_flip,
    bell_state,
    ghz4_state,
    hyperentangled_state,
    mix_with_white_noise,
    named_state,
    register_index,
)

__version__ = "0.1.0"

__all__ = [
    "average_entanglement_entropy", "born_probability", "entanglement_entropy", "fidelity_pure",
    "partial_trace", "pauli_string", "tensor", "trace_distance", "von_neumann_entropy",
    "BootstrapError", "DegenerateStateError", "HybridQuditError", "InvalidDensityMatrixError",
    "RejectedInputError", "UndefinedExpectationError", "UndefinedVisibilityError",
    "DofAddress", "apply_bit_flip", "bell_state", "ghz4_state", "hyperentangled_state",
    "mix_with_white_noise", "named_state", "register_index",
]
