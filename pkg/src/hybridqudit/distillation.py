"""Single-copy distillation of the path Bell pair using the mode qubits.

Each photon applies a CNOT with its path qubit as control and its mode qubit
as target. Bit flips on the idler photon are then detected by comparing the
two mode qubits: events where the modes disagree are discarded. The path
fidelity is read from the stabilizers XX, -YY and ZZ of Phi+.

Scenario mixing follows the data pipeline of a lab experiment: each of the
four flip scenarios yields a normalized 16-outcome count vector per
stabilizer setting, and these vectors are combined with the flip weights
before any expectation value is formed. :func:`mix_states` does the same at
the density-matrix level and serves as a cross-check.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import as_density_matrix, fidelity_pure, partial_trace
from .errors import DegenerateStateError, RejectedInputError
from .states import (
    REGISTER_DIM,
    REGISTER_DIMS,
    DofAddress,
    Dof,
    Photon,
    apply_bit_flip,
    bell_state,
    register_index,
)
from .tomography.counts import exact_counts, outcome_probabilities
from .tomography.mle import MleOptions, run_mle
from .tomography.settings import complete_pauli_settings, pauli_setting

log = logging.getLogger(__name__)

STABILIZERS = ("XX", "YY", "ZZ")
POSTSELECT_RULES = ("correlated", "anticorrelated")
MLE_MAX_P = 0.5


@dataclass(frozen=True)
class FlipScenario:
    path_flip: bool
    mode_flip: bool

    @property
    def name(self) -> str:
        if self.path_flip and self.mode_flip:
            return "both"
        if self.path_flip:
            return "path"
        if self.mode_flip:
            return "mode"
        return "none"


NONE = FlipScenario(False, False)
PATH = FlipScenario(True, False)
MODE = FlipScenario(False, True)
BOTH = FlipScenario(True, True)
SCENARIOS = (NONE, PATH, MODE, BOTH)

# normalized 16-outcome vectors keyed by stabilizer label, one map per scenario
ScenarioCounts = Mapping[FlipScenario, Mapping[str, np.ndarray]]


def _cnot(n_qubits: int, control: int, target: int) -> np.ndarray:
    d = 2**n_qubits
    u = np.zeros((d, d))
    for k in range(d):
        bits = [(k >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)]
        if bits[control]:
            bits[target] ^= 1
        out = int("".join(map(str, bits)), 2)
        u[out, k] = 1.0
    return u


def local_cnot() -> np.ndarray:
    """Path-controlled CNOT onto the mode qubit, applied to both photons."""
    signal = _cnot(4, control=DofAddress("signal", "path").qubit, target=DofAddress("signal", "mode").qubit)
    idler = _cnot(4, control=DofAddress("idler", "path").qubit, target=DofAddress("idler", "mode").qubit)
    return (idler @ signal).astype(complex)


def flip_weights(p: float) -> tuple[float, float, float]:
    """(no flip, one specific flip, both flips) for independent flips of probability ``p``."""
    if not (math.isfinite(p) and 0.0 <= p <= 1.0):
        raise RejectedInputError(f"flip probability must be in [0, 1], got {p}")
    return ((1 - p) ** 2, p * (1 - p), p**2)


def scenario_weights(p: float) -> dict[FlipScenario, float]:
    w_none, w_one, w_both = flip_weights(p)
    return {NONE: w_none, PATH: w_one, MODE: w_one, BOTH: w_both}


def apply_scenario(rho, scenario: FlipScenario, photon: str = "idler") -> np.ndarray:
    """Apply the scenario's bit flips to ``photon``."""
    photon = Photon(photon)
    if scenario.path_flip:
        rho = apply_bit_flip(rho, DofAddress(photon, Dof.PATH))
    if scenario.mode_flip:
        rho = apply_bit_flip(rho, DofAddress(photon, Dof.MODE))
    return rho


def scale_counts(sc: ScenarioCounts, p: float) -> dict[str, np.ndarray]:
    """Flip-probability-weighted combination of the four scenario count vectors."""
    missing = [s.name for s in SCENARIOS if s not in sc]
    if missing:
        raise RejectedInputError(f"scenario counts missing for {missing}")
    weights = scenario_weights(p)
    keys = set(sc[NONE])
    if any(set(sc[s]) != keys for s in SCENARIOS):
        raise RejectedInputError("all scenarios must cover the same settings")
    out = {}
    for key in sorted(keys):
        vecs = [np.asarray(sc[s][key], dtype=float) for s in SCENARIOS]
        for s, v in zip(SCENARIOS, vecs):
            if v.min() < 0 or abs(v.sum() - 1) > 1e-10:
                raise RejectedInputError(f"{s.name}/{key}: count vector must be non-negative and sum to 1")
        mixed = sum(weights[s] * v for s, v in zip(SCENARIOS, vecs))
        out[key] = mixed / mixed.sum()
    return out


def stabilizer_fidelity(xx: float, yy: float, zz: float) -> float:
    """Phi+ fidelity from its stabilizers: (1 + <XX> - <YY> + <ZZ>) / 4."""
    for name, v in (("XX", xx), ("YY", yy), ("ZZ", zz)):
        if not (math.isfinite(v) and -1 - 1e-12 <= v <= 1 + 1e-12):
            raise RejectedInputError(f"<{name}> = {v} outside [-1, 1]")
    return float(min(1.0, max(0.0, (1 + xx - yy + zz) / 4)))


def _mode_keep_mask(rule: str) -> np.ndarray:
    """Boolean per register basis index: True where the mode pair passes ``rule``."""
    if rule not in POSTSELECT_RULES:
        raise RejectedInputError(f"post-selection rule must be one of {POSTSELECT_RULES}")
    keep = np.zeros(REGISTER_DIM, dtype=bool)
    for ms, mi, ps, pi in itertools.product((0, 1), repeat=4):
        agree = ms == mi
        keep[register_index(ms, mi, ps, pi)] = agree if rule == "correlated" else not agree
    return keep


def postselect_mode_correlated(rho, rule: str = "correlated") -> tuple[np.ndarray, float]:
    """Keep events whose mode qubits agree (or disagree), return the path state.

    Returns the renormalized two-qubit path density matrix and the
    probability of passing the post-selection.
    """
    rho = as_density_matrix(rho)
    if rho.shape != (REGISTER_DIM, REGISTER_DIM):
        raise RejectedInputError(f"expected a 16-dim register state, got {rho.shape}")
    proj = np.diag(_mode_keep_mask(rule).astype(float))
    kept = proj @ rho @ proj
    success = float(np.trace(kept).real)
    if success < 1e-12:
        raise DegenerateStateError(f"post-selection success probability {success:.3g} below 1e-12")
    path = partial_trace(kept / success, REGISTER_DIMS, keep=(2, 3))
    return path, success


def path_state(rho) -> np.ndarray:
    """Reduced path-pair state without any post-selection."""
    return partial_trace(as_density_matrix(rho), REGISTER_DIMS, keep=(2, 3))


# ---------------------------------------------------------------------------
# count-level pipeline


def stabilizer_settings():
    """Mode qubits in Z, path qubits in the stabilizer basis."""
    return {s: pauli_setting("ZZ" + s, setting_id=s) for s in STABILIZERS}


def _path_signs() -> np.ndarray:
    # outcome index bits are (mode_s, mode_i, path_s, path_i); '+' is bit 0
    idx = np.arange(REGISTER_DIM)
    return (-1.0) ** (((idx >> 1) & 1) + (idx & 1))


def scenario_counts(
    resource,
    with_distillation: bool,
    photon: str = "idler",
) -> dict[FlipScenario, dict[str, np.ndarray]]:
    """Normalized stabilizer count vectors for each flip scenario."""
    rho = as_density_matrix(resource)
    cnot = local_cnot()
    settings = stabilizer_settings()
    out = {}
    for scenario in SCENARIOS:
        r = apply_scenario(rho, scenario, photon)
        if with_distillation:
            r = cnot @ r @ cnot.conj().T
        vecs = {}
        for key, setting in settings.items():
            probs = outcome_probabilities(r, setting)
            vecs[key] = probs / probs.sum()
        out[scenario] = vecs
    return out


def fidelity_from_counts(
    counts: Mapping[str, np.ndarray],
    postselect: bool,
    rule: str = "correlated",
) -> tuple[float, float]:
    """Stabilizer fidelity and post-selection rate from 16-outcome vectors."""
    signs = _path_signs()
    keep = _mode_keep_mask(rule) if postselect else np.ones(REGISTER_DIM, dtype=bool)
    expectations = {}
    rates = []
    for key in STABILIZERS:
        c = np.asarray(counts[key], dtype=float)
        kept = c[keep].sum()
        if kept < 1e-12:
            raise DegenerateStateError(f"no events survive post-selection in {key}")
        expectations[key] = float((signs * c)[keep].sum() / kept)
        rates.append(kept / c.sum())
    f = stabilizer_fidelity(expectations["XX"], expectations["YY"], expectations["ZZ"])
    return f, float(np.mean(rates))


# ---------------------------------------------------------------------------
# density-matrix pipeline


def mix_states(resource, p: float, with_distillation: bool, photon: str = "idler") -> np.ndarray:
    """Flip-weighted mixture of the scenario states (after the CNOTs if distilling)."""
    rho = as_density_matrix(resource)
    cnot = local_cnot()
    mixed = np.zeros_like(rho)
    for scenario, w in scenario_weights(p).items():
        if w == 0:
            continue
        r = apply_scenario(rho, scenario, photon)
        if with_distillation:
            r = cnot @ r @ cnot.conj().T
        mixed += w * r
    return mixed


def output_path_state(
    resource, p: float, with_distillation: bool, photon: str = "idler", rule: str = "correlated"
) -> tuple[np.ndarray, float]:
    mixed = mix_states(resource, p, with_distillation, photon)
    if with_distillation:
        return postselect_mode_correlated(mixed, rule)
    return path_state(mixed), 1.0


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepPoint:
    p: float
    fidelity: float
    success_probability: float
    converged: bool = True


@dataclass(frozen=True)
class SweepRow:
    p: float
    fidelity_no_distill: float
    fidelity_distill: float
    success_probability: float


def _check_grid(p_grid: Iterable[float]) -> list[float]:
    grid = [float(p) for p in p_grid]
    if not grid:
        raise RejectedInputError("p_grid is empty")
    for p in grid:
        flip_weights(p)
    return grid


def _mle_point(path_rho: np.ndarray, shots: int, opts: MleOptions | None) -> tuple[float, bool]:
    settings = complete_pauli_settings(2)
    result = run_mle(exact_counts(path_rho, settings, shots), settings, opts)
    return fidelity_pure(result.rho, bell_state("phi+")), result.converged


def distill_sweep(
    resource,
    p_grid: Sequence[float],
    with_distillation: bool,
    photon: str = "idler",
    method: str = "stabilizer",
    rule: str = "correlated",
    shots: int = 10**7,
    mle_options: MleOptions | None = None,
) -> list[SweepPoint]:
    """Path Phi+ fidelity versus bit-flip probability.

    ``method="stabilizer"`` mixes stabilizer count vectors (the default).
    ``method="mle"`` reconstructs the path state from complete two-qubit
    Pauli data and is limited to ``p <= 0.5``; points above that are
    reported with ``converged=False`` and a NaN fidelity.
    """
    grid = _check_grid(p_grid)
    if method == "stabilizer":
        sc = scenario_counts(resource, with_distillation, photon)
        points = []
        for p in grid:
            f, rate = fidelity_from_counts(scale_counts(sc, p), with_distillation, rule)
            points.append(SweepPoint(p, f, rate if with_distillation else 1.0))
        return points
    if method == "mle":
        points = []
        for p in grid:
            if p > MLE_MAX_P:
                log.warning("MLE sweep point p=%g above %g not evaluated", p, MLE_MAX_P)
                points.append(SweepPoint(p, float("nan"), float("nan"), converged=False))
                continue
            path_rho, rate = output_path_state(resource, p, with_distillation, photon, rule)
            f, ok = _mle_point(path_rho, shots, mle_options)
            points.append(SweepPoint(p, f, rate, converged=ok))
        return points
    raise RejectedInputError(f"unknown sweep method {method!r}")


def distill_table(resource, p_grid: Sequence[float], photon: str = "idler", rule: str = "correlated") -> list[SweepRow]:
    """Both curves on one grid, plus the distillation success probability."""
    plain = distill_sweep(resource, p_grid, False, photon, rule=rule)
    distilled = distill_sweep(resource, p_grid, True, photon, rule=rule)
    return [
        SweepRow(a.p, a.fidelity, b.fidelity, b.success_probability)
        for a, b in zip(plain, distilled)
    ]


def mean_gain(rows: Sequence[SweepRow], p_max: float = 0.5) -> float:
    """Arithmetic mean of (distilled - undistilled) over rows with p <= p_max."""
    gains = [r.fidelity_distill - r.fidelity_no_distill for r in rows if r.p <= p_max + 1e-12]
    if not gains:
        raise RejectedInputError(f"no grid points with p <= {p_max}")
    return float(np.mean(gains))
