"""Dimension-generic state and operator primitives.

States are 1-D complex numpy arrays, density matrices and operators are 2-D
complex arrays. The validators here (``as_ket``, ``as_density_matrix``, ...)
return clean ``complex128`` copies and raise on malformed input; the
computational functions assume their inputs already passed through them.

Multi-qubit ordering: the first tensor factor is the most significant index.
For the two-photon, four-qubit register used throughout the package the
basis index is ``8*mode_signal + 4*mode_idler + 2*path_signal + path_idler``
(see :mod:`hybridqudit.states`).
"""
from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidDensityMatrixError, RejectedInputError

ATOL = 1e-10
CLAMP_TOL = 1e-12

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


# ---------------------------------------------------------------------------
# validation


def as_ket(amplitudes, atol: float = ATOL) -> np.ndarray:
    """Return ``amplitudes`` as a normalized complex vector or raise."""
    psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if psi.size == 0:
        raise RejectedInputError("state vector must be non-empty")
    if not np.all(np.isfinite(psi)):
        raise RejectedInputError("state vector has non-finite amplitudes")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > atol:
        raise RejectedInputError(f"state vector norm is {norm:.12g}, expected 1")
    return psi


def normalize(amplitudes) -> np.ndarray:
    psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise RejectedInputError("cannot normalize the zero vector")
    return psi / norm


def _square(matrix, what: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise RejectedInputError(f"{what} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise RejectedInputError(f"{what} has non-finite entries")
    return m


def hermiticity_error(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def as_observable(matrix, atol: float = ATOL) -> np.ndarray:
    m = _square(matrix, "observable")
    if hermiticity_error(m) > atol:
        raise RejectedInputError("observable is not Hermitian")
    return m


def as_projector(matrix, atol: float = ATOL) -> np.ndarray:
    """Validate a measurement operator: Hermitian with spectrum inside [0, 1]."""
    m = _square(matrix, "projector")
    if hermiticity_error(m) > atol:
        raise RejectedInputError("projector is not Hermitian")
    evals = np.linalg.eigvalsh(m)
    if evals[0] < -atol or evals[-1] > 1 + atol:
        raise RejectedInputError(
            f"projector eigenvalues must lie in [0, 1], got [{evals[0]:.3g}, {evals[-1]:.3g}]"
        )
    return m


def as_density_matrix(matrix, atol: float = ATOL) -> np.ndarray:
    """Validate a density matrix (Hermitian, PSD, unit trace) within ``atol``.

    A 1-D input is treated as a ket and converted to its projector.
    """
    arr = np.asarray(matrix, dtype=complex)
    if arr.ndim == 1:
        return ket_to_dm(as_ket(arr, atol))
    m = _square(arr, "density matrix")
    herm = hermiticity_error(m)
    if herm > atol:
        raise InvalidDensityMatrixError(f"not Hermitian (max deviation {herm:.3g})")
    tr = np.trace(m).real
    if abs(tr - 1.0) > atol:
        raise InvalidDensityMatrixError(f"trace is {tr:.12g}, expected 1")
    lo = np.linalg.eigvalsh(m)[0]
    if lo < -atol:
        raise InvalidDensityMatrixError(f"negative eigenvalue {lo:.3g}")
    return m


def ket_to_dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def basis_ket(index: int, dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


# ---------------------------------------------------------------------------
# construction


def pauli_string(label: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis, leftmost character most significant.

    >>> pauli_string("Z").real
    array([[ 1.,  0.],
           [ 0., -1.]])
    """
    if not isinstance(label, str) or not label:
        raise RejectedInputError("Pauli label must be a non-empty string")
    bad = set(label) - set(PAULI)
    if bad:
        raise RejectedInputError(f"invalid Pauli characters {sorted(bad)} in {label!r}")
    return reduce(np.kron, (PAULI[c] for c in label))


def tensor(*operands) -> np.ndarray:
    """Kronecker product of kets or matrices; the first operand is most significant."""
    if not operands:
        raise RejectedInputError("tensor needs at least one operand")
    arrays = [np.asarray(op, dtype=complex) for op in operands]
    ndims = {a.ndim for a in arrays}
    if len(ndims) != 1 or ndims.pop() not in (1, 2):
        raise RejectedInputError("tensor operands must all be kets or all be matrices")
    return reduce(np.kron, arrays)


# ---------------------------------------------------------------------------
# reductions and measures


def _check_dims(dim: int, subsystem_dims: Sequence[int]) -> list[int]:
    dims = [int(d) for d in subsystem_dims]
    if not dims or any(d < 1 for d in dims):
        raise RejectedInputError("subsystem dimensions must be positive integers")
    if int(np.prod(dims)) != dim:
        raise RejectedInputError(f"subsystem dims {dims} do not multiply to {dim}")
    return dims


def _check_subset(indices: Iterable[int], n: int, what: str) -> list[int]:
    idx = sorted({int(i) for i in indices})
    if not idx:
        raise RejectedInputError(f"{what} must be non-empty")
    if idx[0] < 0 or idx[-1] >= n:
        raise RejectedInputError(f"{what} {idx} out of range for {n} subsystems")
    return idx


def partial_trace(rho, subsystem_dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduced density matrix on the subsystems in ``keep`` (kept in ascending order)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise RejectedInputError("partial_trace expects a square matrix")
    dims = _check_dims(rho.shape[0], subsystem_dims)
    n = len(dims)
    kept = _check_subset(keep, n, "keep")
    traced = [i for i in range(n) if i not in kept]
    dk = int(np.prod([dims[i] for i in kept]))
    dt = int(np.prod([dims[i] for i in traced])) if traced else 1
    t = rho.reshape(dims + dims)
    order = kept + traced + [n + i for i in kept] + [n + i for i in traced]
    t = t.transpose(order).reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def born_probability(rho, proj) -> float:
    """Tr(proj @ rho), clamped to [0, 1] when it overshoots by less than 1e-12."""
    rho = np.asarray(rho, dtype=complex)
    proj = np.asarray(proj, dtype=complex)
    if rho.shape != proj.shape or rho.ndim != 2:
        raise RejectedInputError(f"shape mismatch: rho {rho.shape}, projector {proj.shape}")
    p = float(np.einsum("ij,ji->", proj, rho).real)
    return _clamp_unit(p)


def _clamp_unit(x: float) -> float:
    if -CLAMP_TOL <= x < 0.0:
        return 0.0
    if 1.0 < x <= 1.0 + CLAMP_TOL:
        return 1.0
    return x


def fidelity_pure(rho, target) -> float:
    """Overlap <target|rho|target> with a pure target state."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(target, dtype=complex).reshape(-1)
    if rho.ndim != 2 or rho.shape != (psi.size, psi.size):
        raise RejectedInputError(f"dimension mismatch: rho {rho.shape}, target {psi.shape}")
    f = float(np.vdot(psi, rho @ psi).real)
    return float(np.clip(_clamp_unit(f), 0.0, 1.0))


def purity(rho) -> float:
    rho = np.asarray(rho, dtype=complex)
    return float(np.einsum("ij,ji->", rho, rho).real)


def trace_distance(rho, sigma) -> float:
    diff = np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def von_neumann_entropy(rho, base: float = 2.0) -> float:
    """-Tr(rho log_base rho) with 0 log 0 = 0.

    Eigenvalues in [-1e-10, 0) are treated as zero; anything more negative
    means the input is not a density matrix.
    """
    evals = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    if evals[0] < -ATOL:
        raise InvalidDensityMatrixError(f"negative eigenvalue {evals[0]:.3g}")
    evals = evals[evals > 0]
    return float(-np.sum(evals * np.log(evals)) / np.log(base))


def entanglement_entropy(
    rho,
    subsystem_dims: Sequence[int],
    partition: Iterable[int],
    base: float | None = None,
) -> float:
    """Von Neumann entropy of the reduced state on ``partition``.

    ``base`` defaults to the dimension of the smaller side of the cut, so a
    maximally entangled state across the cut scores 1 (base 2 for one qubit
    against the rest, base 4 for one photon's ququart against the other).
    """
    rho = np.asarray(rho, dtype=complex)
    dims = _check_dims(rho.shape[0], subsystem_dims)
    side_a = _check_subset(partition, len(dims), "partition")
    if len(side_a) == len(dims):
        raise RejectedInputError("partition must leave a non-empty complement")
    if base is None:
        da = int(np.prod([dims[i] for i in side_a]))
        base = min(da, rho.shape[0] // da)
    if base <= 1:
        raise RejectedInputError("log base must exceed 1")
    return von_neumann_entropy(partial_trace(rho, dims, side_a), base)


def average_entanglement_entropy(
    rho,
    subsystem_dims: Sequence[int],
    partitions: Sequence[Iterable[int]] | None = None,
    base: float | None = None,
) -> float:
    """Mean entanglement entropy over a list of cuts.

    By default every subsystem is cut against the rest (each constituent qubit
    of a four-qubit register, for instance).
    """
    dims = list(subsystem_dims)
    if partitions is None:
        partitions = [[i] for i in range(len(dims))]
    values = [entanglement_entropy(rho, dims, part, base) for part in partitions]
    return float(np.mean(values))
