"""Target states for the two-photon register and the error channels applied to them.

The register holds four qubits, ordered
``(mode_signal, mode_idler, path_signal, path_idler)`` from most to least
significant, i.e. the TE-mode pair first and the path pair second. A TE0
photon is mode qubit 0, TE1 is mode qubit 1.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import PAULI, as_density_matrix, tensor
from .errors import RejectedInputError

REGISTER_DIMS = (2, 2, 2, 2)
REGISTER_DIM = 16

MODE_QUBITS = (0, 1)
PATH_QUBITS = (2, 3)
SIGNAL_QUBITS = (0, 2)
IDLER_QUBITS = (1, 3)


class Photon(str, enum.Enum):
    SIGNAL = "signal"
    IDLER = "idler"


class Dof(str, enum.Enum):
    PATH = "path"
    MODE = "mode"


@dataclass(frozen=True)
class DofAddress:
    photon: Photon
    dof: Dof

    def __post_init__(self):
        # accept plain strings
        object.__setattr__(self, "photon", Photon(self.photon))
        object.__setattr__(self, "dof", Dof(self.dof))

    @property
    def qubit(self) -> int:
        """Position of the addressed qubit in the four-qubit register."""
        offset = 0 if self.dof is Dof.MODE else 2
        return offset + (0 if self.photon is Photon.SIGNAL else 1)


def register_index(mode_s: int, mode_i: int, path_s: int, path_i: int) -> int:
    return 8 * mode_s + 4 * mode_i + 2 * path_s + path_i


_S = 1 / np.sqrt(2)
_BELL = {
    "phi+": np.array([_S, 0, 0, _S], dtype=complex),
    "phi-": np.array([_S, 0, 0, -_S], dtype=complex),
    "psi+": np.array([0, _S, _S, 0], dtype=complex),
    "psi-": np.array([0, _S, -_S, 0], dtype=complex),
}
_BELL_ALIASES = {
    "Φ⁺": "phi+", "Φ⁻": "phi-", "Ψ⁺": "psi+", "Ψ⁻": "psi-",
    "phi_plus": "phi+", "phi_minus": "phi-", "psi_plus": "psi+", "psi_minus": "psi-",
    "phi-plus": "phi+", "phi-minus": "phi-", "psi-plus": "psi+", "psi-minus": "psi-",
}


def bell_state(kind: str = "phi+") -> np.ndarray:
    """Two-qubit Bell state: ``phi+``, ``phi-``, ``psi+`` or ``psi-``."""
    key = _BELL_ALIASES.get(kind, kind.lower() if isinstance(kind, str) else kind)
    try:
        return _BELL[key].copy()
    except (KeyError, TypeError):
        raise RejectedInputError(f"unknown Bell state {kind!r}") from None


def ghz4_state() -> np.ndarray:
    """(|TE0 TE0>|00> + |TE1 TE1>|11>)/sqrt(2)."""
    psi = np.zeros(REGISTER_DIM, dtype=complex)
    psi[register_index(0, 0, 0, 0)] = _S
    psi[register_index(1, 1, 1, 1)] = _S
    return psi


def hyperentangled_state() -> np.ndarray:
    """Phi+ on the mode pair times Phi+ on the path pair."""
    return tensor(bell_state("phi+"), bell_state("phi+"))


STATE_NAMES = {
    "ghz4": ghz4_state,
    "hyper": hyperentangled_state,
    "bell-phi-plus": lambda: bell_state("phi+"),
    "bell-phi-minus": lambda: bell_state("phi-"),
    "bell-psi-plus": lambda: bell_state("psi+"),
    "bell-psi-minus": lambda: bell_state("psi-"),
}


def named_state(name: str) -> np.ndarray:
    """Look up a state by its command-line identifier."""
    try:
        return STATE_NAMES[name]()
    except KeyError:
        raise RejectedInputError(
            f"unknown state {name!r}; choose from {sorted(STATE_NAMES)}"
        ) from None


def single_qubit_operator(op: np.ndarray, qubit: int, n_qubits: int = 4) -> np.ndarray:
    factors = [PAULI["I"]] * n_qubits
    factors[qubit] = np.asarray(op, dtype=complex)
    return tensor(*factors)


def apply_bit_flip(rho, where: DofAddress) -> np.ndarray:
    """Conjugate ``rho`` by Pauli X on the addressed qubit."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (REGISTER_DIM, REGISTER_DIM):
        raise RejectedInputError(f"bit flips act on the 16-dim register, got {rho.shape}")
    x = single_qubit_operator(PAULI["X"], where.qubit)
    return x @ rho @ x


def mix_with_white_noise(rho, lam: float) -> np.ndarray:
    """lam * rho + (1 - lam) * I / dim."""
    if not 0.0 <= lam <= 1.0:
        raise RejectedInputError(f"noise weight must be in [0, 1], got {lam}")
    rho = as_density_matrix(rho)
    d = rho.shape[0]
    return lam * rho + (1.0 - lam) * np.eye(d) / d


def white_noise_weight_for_fidelity(fidelity: float, dim: int = REGISTER_DIM) -> float:
    """Mixing weight that brings a pure state to the requested fidelity."""
    if not 1.0 / dim <= fidelity <= 1.0:
        raise RejectedInputError(f"fidelity must be in [1/{dim}, 1]")
    return (fidelity - 1.0 / dim) / (1.0 - 1.0 / dim)
