"""Phenomenological model of the four-source chip.

Two spiral sources are each pumped in a superposition of TE0 and TE1 light,
which gives four effective sources indexed by ``(spiral, te_mode)`` in the
order ``(0,TE0), (0,TE1), (1,TE0), (1,TE1)``. Post-selecting on one pair,
source ``k`` with complex pump amplitude ``a_k`` emits the biphoton term
``a_k**2 |m m>_mode |s s>_path``. Imperfect overlap between sources ``j`` and
``k`` scales the coherence between their terms by the RHOM visibility
``V_jk``.

MZI convention (used by :func:`mzi_transfer`)::

    U = B @ P(internal) @ B @ P(external),   B = [[1, i], [i, 1]] / sqrt(2),
    P(phi) = diag(exp(i phi), 1)

so ``internal = 0`` swaps the arms, ``internal = pi`` routes straight
through and ``internal = pi/2`` is a balanced splitter. ``|U[0, 0]|**2 =
sin(internal/2)**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import DegenerateStateError, RejectedInputError, UndefinedVisibilityError
from .states import REGISTER_DIM, register_index

SOURCE_LABELS = ("spiral0-TE0", "spiral0-TE1", "spiral1-TE0", "spiral1-TE1")
# (spiral, te_mode) for each effective source
SOURCES = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class PumpConfig:
    """Normalized complex pump amplitudes over the four effective sources."""

    amplitudes: tuple

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if a.size != 4:
            raise RejectedInputError(f"pump needs 4 amplitudes, got {a.size}")
        if not np.all(np.isfinite(a)):
            raise RejectedInputError("pump amplitudes must be finite")
        if abs(np.linalg.norm(a) - 1.0) > 1e-10:
            raise RejectedInputError(f"pump amplitudes must have unit norm, got {np.linalg.norm(a):.12g}")
        object.__setattr__(self, "amplitudes", tuple(complex(x) for x in a))

    @classmethod
    def normalized(cls, amplitudes) -> "PumpConfig":
        a = np.asarray(amplitudes, dtype=complex)
        n = np.linalg.norm(a)
        if n == 0:
            raise RejectedInputError("pump amplitudes are all zero")
        return cls(tuple(a / n))

    def as_array(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype=complex)


def ghz4_pump() -> PumpConfig:
    """Spiral 0 in TE0 and spiral 1 in TE1."""
    return PumpConfig.normalized([1, 0, 0, 1])


def hyper_pump() -> PumpConfig:
    """Both spirals in an equal TE0/TE1 superposition."""
    return PumpConfig.normalized([1, 1, 1, 1])


@dataclass(frozen=True)
class SourceModel:
    """Pairwise source indistinguishability plus optional per-source corrections.

    ``efficiency`` rescales the pair emission probability of each source
    (e.g. extra TE1 loss). ``intermodal_weight`` adds incoherent
    |TE0 TE1>/|TE1 TE0> pairs from each spiral with probability weight
    ``w * |a_TE0 a_TE1|**2`` per ordering; it is 0 by default.
    """

    visibility: np.ndarray = field(default_factory=lambda: np.ones((4, 4)))
    efficiency: np.ndarray = field(default_factory=lambda: np.ones(4))
    intermodal_weight: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.visibility, dtype=float)
        if v.shape != (4, 4):
            raise RejectedInputError(f"visibility matrix must be 4x4, got {v.shape}")
        if not np.all(np.isfinite(v)) or v.min() < 0 or v.max() > 1:
            raise RejectedInputError("visibilities must lie in [0, 1]")
        if not np.allclose(v, v.T, atol=1e-12):
            raise RejectedInputError("visibility matrix must be symmetric")
        if not np.allclose(np.diag(v), 1.0, atol=1e-12):
            raise RejectedInputError("visibility matrix must have unit diagonal")
        # a non-PSD overlap matrix cannot come from physical source states
        if np.linalg.eigvalsh(v)[0] < -1e-10:
            raise RejectedInputError("visibility matrix must be positive semidefinite")
        eff = np.asarray(self.efficiency, dtype=float).reshape(-1)
        if eff.size != 4 or not np.all(np.isfinite(eff)) or eff.min() < 0:
            raise RejectedInputError("efficiency must be 4 non-negative numbers")
        if not 0.0 <= self.intermodal_weight <= 1.0:
            raise RejectedInputError("intermodal weight must lie in [0, 1]")
        v.setflags(write=False)
        eff.setflags(write=False)
        object.__setattr__(self, "visibility", v)
        object.__setattr__(self, "efficiency", eff)

    @classmethod
    def uniform(cls, v: float, **kwargs) -> "SourceModel":
        """Same visibility ``v`` for every pair of distinct sources."""
        m = np.full((4, 4), float(v))
        np.fill_diagonal(m, 1.0)
        return cls(m, **kwargs)


def biphoton_state(pump: PumpConfig, src: SourceModel | None = None) -> np.ndarray:
    """Post-selected single-pair density matrix on the 16-dim register."""
    src = SourceModel() if src is None else src
    a = pump.as_array()
    c = a**2 * np.sqrt(src.efficiency)
    kets = [register_index(m, m, s, s) for s, m in SOURCES]

    rho = np.zeros((REGISTER_DIM, REGISTER_DIM), dtype=complex)
    block = np.outer(c, c.conj()) * src.visibility
    rho[np.ix_(kets, kets)] = block

    if src.intermodal_weight > 0:
        for s in (0, 1):
            w = src.intermodal_weight * abs(a[2 * s] * a[2 * s + 1]) ** 2
            for ms, mi in ((0, 1), (1, 0)):
                i = register_index(ms, mi, s, s)
                rho[i, i] += w

    tr = np.trace(rho).real
    if tr < 1e-300:
        raise DegenerateStateError("pump configuration generates no photon pairs")
    rho /= tr
    return 0.5 * (rho + rho.conj().T)


@dataclass(frozen=True)
class InterferometerSetting:
    """Phase-shifter settings in radians, wrapped into [0, 2*pi)."""

    phases: tuple

    def __post_init__(self):
        p = np.asarray(self.phases, dtype=float).reshape(-1)
        if not np.all(np.isfinite(p)):
            raise RejectedInputError("phases must be finite")
        object.__setattr__(self, "phases", tuple(float(x) for x in np.mod(p, 2 * np.pi)))


_BS = np.array([[1, 1j], [1j, 1]], dtype=complex) / np.sqrt(2)


def phase_shifter(phi: float) -> np.ndarray:
    return np.diag([np.exp(1j * phi), 1.0])


def mzi_transfer(internal_phase: float, external_phase: float = 0.0) -> np.ndarray:
    """2x2 transfer matrix of a balanced MZI (see module docstring for the convention)."""
    if not (math.isfinite(internal_phase) and math.isfinite(external_phase)):
        raise RejectedInputError("MZI phases must be finite")
    return _BS @ phase_shifter(internal_phase) @ _BS @ phase_shifter(external_phase)


# ---------------------------------------------------------------------------
# RHOM fringes


def rhom_coincidence(phi):
    """Ideal two-photon coincidence probability cos^2(phi)."""
    return np.cos(phi) ** 2


def classical_fringe(phi):
    """Normalized classical output power cos^2(phi/2)."""
    return np.cos(np.asarray(phi) / 2) ** 2


def rhom_fringe_noisy(phi, visibility: float):
    """Coincidence fringe with reduced contrast: (1 + V cos(2 phi)) / 2."""
    if not 0.0 <= visibility <= 1.0:
        raise RejectedInputError(f"visibility must be in [0, 1], got {visibility}")
    return (1.0 + visibility * np.cos(2 * np.asarray(phi))) / 2.0


def fringe_visibility(samples) -> float:
    """Fringe contrast (max - min) / (max + min)."""
    s = np.asarray(samples, dtype=float).reshape(-1)
    if s.size < 2:
        raise RejectedInputError("need at least two samples")
    if s.min() < 0:
        raise RejectedInputError("samples must be non-negative")
    hi, lo = s.max(), s.min()
    if hi + lo == 0:
        raise UndefinedVisibilityError("all samples are zero")
    return float((hi - lo) / (hi + lo))


def phase_grid(n: int = 1000, span: float = 2 * np.pi) -> np.ndarray:
    """Uniform periodic grid on [0, span), endpoint excluded."""
    return np.linspace(0.0, span, n, endpoint=False)


def fringe_frequency(phases, samples) -> float:
    """Angular frequency w of the dominant sinusoid c + a cos(w phi) + b sin(w phi).

    A zero-padded FFT gives the starting guess (uniform grid assumed), then a
    nonlinear least-squares fit refines all four parameters.
    """
    x = np.asarray(phases, dtype=float)
    y = np.asarray(samples, dtype=float)
    if x.shape != y.shape or x.size < 4:
        raise RejectedInputError("need matching phase/sample arrays with at least 4 points")
    step = x[1] - x[0]
    pad = 16 * x.size
    spectrum = np.abs(np.fft.rfft(y - y.mean(), n=pad))
    spectrum[0] = 0.0
    k = int(np.argmax(spectrum))
    w0 = 2 * np.pi * k / (pad * step)

    def design(w):
        return np.column_stack([np.ones_like(x), np.cos(w * x), np.sin(w * x)])

    lin0 = np.linalg.lstsq(design(w0), y, rcond=None)[0]

    def resid(p):
        return design(p[0]) @ p[1:] - y

    def jac(p):
        w, _, a, b = p
        dw = -a * x * np.sin(w * x) + b * x * np.cos(w * x)
        return np.column_stack([dw, design(w)])

    fit = least_squares(resid, np.r_[w0, lin0], jac=jac, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return float(abs(fit.x[0]))


def rhom_sweep(n_points: int = 1000, visibility: float = 1.0) -> dict[str, np.ndarray]:
    """Columns for a coincidence/classical fringe file over one 2*pi period."""
    phi = phase_grid(n_points)
    return {
        "phi": phi,
        "coincidence": rhom_fringe_noisy(phi, visibility),
        "classical": classical_fringe(phi),
    }
