"""Measurement settings and Pauli projector sets."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from ..core import PAULI, as_projector
from ..errors import RejectedInputError


@dataclass(frozen=True, eq=False)
class MeasurementSetting:
    """One measurement configuration and its outcome operators.

    ``outcomes`` is stored as a read-only ``(n_outcomes, dim, dim)`` array.
    Outcome operators must sum to at most the identity.
    """

    id: str
    outcomes: np.ndarray
    label: str | None = None
    outcome_labels: tuple = field(default=())

    def __post_init__(self):
        ops = [as_projector(p) for p in self.outcomes]
        if not ops:
            raise RejectedInputError(f"setting {self.id!r} has no outcomes")
        dims = {p.shape for p in ops}
        if len(dims) != 1:
            raise RejectedInputError(f"setting {self.id!r} mixes outcome dimensions {sorted(dims)}")
        stack = np.array(ops)
        top = np.linalg.eigvalsh(stack.sum(axis=0))[-1]
        if top > 1 + 1e-9:
            raise RejectedInputError(
                f"setting {self.id!r}: outcome operators sum above identity (max eigenvalue {top:.6g})"
            )
        stack.setflags(write=False)
        object.__setattr__(self, "outcomes", stack)
        object.__setattr__(self, "outcome_labels", tuple(self.outcome_labels))

    @property
    def dim(self) -> int:
        return self.outcomes.shape[1]

    def __len__(self):
        return self.outcomes.shape[0]

    def is_complete(self, atol: float = 1e-9) -> bool:
        """True when the outcome operators resolve the identity."""
        return bool(np.allclose(self.outcomes.sum(axis=0), np.eye(self.dim), atol=atol))


def _eigenprojector(basis: str, sign: str) -> np.ndarray:
    s = 1.0 if sign == "+" else -1.0
    return (PAULI["I"] + s * PAULI[basis]) / 2


def pauli_projector(label: str) -> np.ndarray:
    """Product eigenprojector from a label like ``"XZ:+-"``."""
    try:
        bases, signs = label.split(":")
    except ValueError:
        raise RejectedInputError(f"projector label {label!r} must look like 'XZ:+-'") from None
    if not bases or len(bases) != len(signs):
        raise RejectedInputError(f"projector label {label!r}: basis/sign length mismatch")
    if set(bases) - set("XYZ") or set(signs) - set("+-"):
        raise RejectedInputError(f"projector label {label!r} has invalid characters")
    return reduce(np.kron, (_eigenprojector(b, s) for b, s in zip(bases, signs)))


def outcome_signs(n_qubits: int) -> list[str]:
    """Sign strings in outcome-index order: bit 0 of each qubit is '+', MSB first."""
    return ["".join(p) for p in itertools.product("+-", repeat=n_qubits)]


def pauli_setting(bases: str, setting_id: str | None = None) -> MeasurementSetting:
    """Product-basis measurement with all 2**n sign outcomes."""
    if not bases or set(bases) - set("XYZ"):
        raise RejectedInputError(f"invalid measurement bases {bases!r}")
    labels = [f"{bases}:{s}" for s in outcome_signs(len(bases))]
    return MeasurementSetting(
        id=setting_id or bases,
        outcomes=np.array([pauli_projector(lbl) for lbl in labels]),
        label=bases,
        outcome_labels=tuple(labels),
    )


def pauli_settings(allowed: Sequence[str]) -> list[MeasurementSetting]:
    """All product settings where qubit ``q`` is measured in one of ``allowed[q]``."""
    return [pauli_setting("".join(b)) for b in itertools.product(*allowed)]


def complete_pauli_settings(n_qubits: int) -> list[MeasurementSetting]:
    """3**n settings, 6**n projectors: informationally complete."""
    return pauli_settings(["XYZ"] * n_qubits)


def restricted_settings() -> list[MeasurementSetting]:
    """Default undercomplete set for the four-qubit register.

    No Y measurements on either mode qubit (qubits 0 and 1); the path qubits
    keep all three bases. 36 settings, 576 projectors, rank 144.
    """
    return pauli_settings(["XZ", "XZ", "XYZ", "XYZ"])


def restricted_xz_settings(n_qubits: int = 4) -> list[MeasurementSetting]:
    """X/Z-only set: 4 projectors per qubit, 4**n in total, rank 3**n.

    For four qubits this is 256 projectors with rank 81 (80 traceless
    directions plus the trace).
    """
    return pauli_settings(["XZ"] * n_qubits)


def named_projector_set(name: str, n_qubits: int = 4) -> list[MeasurementSetting]:
    """Built-in projector sets: ``complete``, ``restricted`` (4 qubits only), ``restricted-xz``."""
    if name == "complete":
        return complete_pauli_settings(n_qubits)
    if name == "restricted":
        if n_qubits != 4:
            raise RejectedInputError("the 'restricted' set is defined for the 4-qubit register only")
        return restricted_settings()
    if name == "restricted-xz":
        return restricted_xz_settings(n_qubits)
    raise RejectedInputError(f"unknown projector set {name!r}")


def measurement_matrix(settings: Sequence[MeasurementSetting]) -> np.ndarray:
    """Rows are the flattened outcome operators of every setting."""
    if not settings:
        raise RejectedInputError("need at least one setting")
    dims = {s.dim for s in settings}
    if len(dims) != 1:
        raise RejectedInputError(f"settings have inconsistent dimensions {sorted(dims)}")
    d = dims.pop()
    return np.concatenate([s.outcomes.reshape(len(s), d * d) for s in settings])


def measurement_rank(settings: Sequence[MeasurementSetting]) -> int:
    """Numerical rank of the measurement matrix.

    Counts the trace direction, so a complete n-qubit set has rank 4**n.
    Singular values below ``d**2 * eps * s_max`` are treated as zero.
    """
    a = measurement_matrix(settings)
    sv = np.linalg.svd(a, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    tol = a.shape[1] * np.finfo(float).eps * sv[0]
    return int(np.sum(sv > tol))


def gauge_freedom(settings: Sequence[MeasurementSetting]) -> int:
    """Dimension of the operator directions the settings cannot see."""
    d = settings[0].dim
    return d * d - measurement_rank(settings)
