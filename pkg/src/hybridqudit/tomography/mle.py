"""Iterative maximum-likelihood state reconstruction (R rho R scheme).

Each step applies ``rho <- N[K rho K^dagger]`` with ``K = G^-1 R(rho)``,

    R(rho) = sum_i f_i / p_i(rho) * P_i,      G = sum_i g_i * P_i,

where ``f_i`` are counts and ``g_i`` are the setting's pair events, both
divided by the total number of pair events. When every setting resolves the
identity, ``G`` is the identity and this is the textbook fixed-point
iteration. Only the measured outcomes enter ``R`` and ``G``, so undercomplete
sets work unchanged; the maximizer is then not unique and the fixed point
reached from the maximally mixed start is returned.

If a step lowers the likelihood it is retried with the diluted operator
``(1 - a) I + a K``, halving ``a`` until the likelihood does not decrease.

Noiseless data from a pure state puts the maximum on the boundary of the
state space with a likelihood that is flat to first order there, and the
plain iteration then shrinks the spurious eigenvalues only like ``1/n``.
With ``rank_reduction`` enabled, every iteration also tries zeroing the
smallest eigenvalues of the new iterate (those below 1% of the largest) and
keeps the truncated state only if it has strictly higher likelihood. The
likelihood therefore never decreases either way.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import RejectedInputError
from .counts import CountRecord
from .settings import MeasurementSetting, gauge_freedom

log = logging.getLogger(__name__)

PROBABILITY_FLOOR = 1e-14
MIN_DILUTION = 1e-12


@dataclass(frozen=True)
class MleOptions:
    max_iterations: int = 100_000
    convergence_threshold: float = 1e-10
    dilution: float = 1.0
    rank_reduction: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise RejectedInputError("max_iterations must be positive")
        if not self.convergence_threshold > 0:
            raise RejectedInputError("convergence_threshold must be positive")
        if not 0.0 < self.dilution <= 1.0:
            raise RejectedInputError("dilution must lie in (0, 1]")


@dataclass
class MleResult:
    rho: np.ndarray
    iterations: int
    converged: bool
    log_likelihood: float
    history: list = field(repr=False, default_factory=list)
    gauge_freedom: int = 0
    floored: bool = False


@dataclass(frozen=True)
class TomographyData:
    """Measured outcomes flattened into arrays for the iteration."""

    projectors: np.ndarray      # (M, d, d)
    freqs: np.ndarray           # counts / total pair events
    weights: np.ndarray         # setting pair events / total pair events
    labels: tuple               # (setting_id, outcome_index) per row

    @property
    def dim(self) -> int:
        return self.projectors.shape[1]

    def predicted(self, rho: np.ndarray) -> np.ndarray:
        d = self.dim
        return (self.projectors.reshape(-1, d * d) @ rho.T.reshape(-1)).real

    def observed_probabilities(self) -> np.ndarray:
        """Per-setting outcome frequencies, ``counts / shots``."""
        return self.freqs / self.weights


def assemble(records: Sequence[CountRecord], settings: Sequence[MeasurementSetting]) -> TomographyData:
    if not records:
        raise RejectedInputError("no count records supplied")
    by_id = {s.id: s for s in settings}
    if len(by_id) != len(settings):
        raise RejectedInputError("setting ids must be unique")
    dims = {s.dim for s in settings}
    if len(dims) != 1:
        raise RejectedInputError("settings have inconsistent dimensions")

    seen = set()
    shots_of = {}
    rows, counts, shots, labels = [], [], [], []
    for r in records:
        setting = by_id.get(r.setting_id)
        if setting is None:
            raise RejectedInputError(f"record references unknown setting {r.setting_id!r}")
        if r.outcome_index >= len(setting):
            raise RejectedInputError(f"{r.setting_id}: outcome {r.outcome_index} out of range")
        key = (r.setting_id, r.outcome_index)
        if key in seen:
            raise RejectedInputError(f"duplicate record for {key}")
        seen.add(key)
        if shots_of.setdefault(r.setting_id, r.shots) != r.shots:
            raise RejectedInputError(f"inconsistent shots within setting {r.setting_id!r}")
        rows.append(setting.outcomes[r.outcome_index])
        counts.append(r.counts)
        shots.append(r.shots)
        labels.append(key)

    counts = np.asarray(counts, dtype=float)
    if counts.sum() <= 0:
        raise RejectedInputError("total counts must be positive")
    total = float(sum(shots_of.values()))
    return TomographyData(
        projectors=np.asarray(rows),
        freqs=counts / total,
        weights=np.asarray(shots, dtype=float) / total,
        labels=tuple(labels),
    )


def log_likelihood(data: TomographyData, rho: np.ndarray) -> float:
    """Poisson log-likelihood per pair event, up to a data-only constant."""
    p = data.predicted(rho)
    mask = data.freqs > 0
    p_obs = np.maximum(p[mask], PROBABILITY_FLOOR)
    return float(np.sum(data.freqs[mask] * np.log(p_obs)) - np.sum(data.weights * p))


def _normalize(m: np.ndarray) -> np.ndarray:
    m = 0.5 * (m + m.conj().T)
    return m / np.trace(m).real


TRUNCATION_RATIO = 1e-2


def _diluted_step(data, rho, k, ll, alpha):
    eye = np.eye(rho.shape[0])
    while alpha >= MIN_DILUTION:
        ka = k if alpha == 1.0 else (1 - alpha) * eye + alpha * k
        candidate = _normalize(ka @ rho @ ka.conj().T)
        ll_new = log_likelihood(data, candidate)
        if ll_new >= ll:
            return candidate, ll_new
        alpha /= 2
    return None


def _reduce_rank(data, rho, ll):
    """Best truncation of the smallest eigenvalues, if it beats ``ll``."""
    w, v = np.linalg.eigh(rho)
    best = None
    for m in range(1, len(w)):
        if w[m - 1] > TRUNCATION_RATIO * w[-1]:
            break
        kept = w.copy()
        kept[:m] = 0.0
        trial = _normalize((v * kept) @ v.conj().T)
        ll_trial = log_likelihood(data, trial)
        if ll_trial > ll and (best is None or ll_trial > best[1]):
            best = (trial, ll_trial)
    return best


def run_mle(
    records: Sequence[CountRecord],
    settings: Sequence[MeasurementSetting],
    opts: MleOptions | None = None,
) -> MleResult:
    opts = MleOptions() if opts is None else opts
    data = assemble(records, settings)
    d = data.dim
    flat = data.projectors.reshape(-1, d * d)
    g = (data.weights @ flat).reshape(d, d)
    g_inv = np.linalg.pinv(0.5 * (g + g.conj().T), hermitian=True)

    rho = np.eye(d) / d
    ll = log_likelihood(data, rho)
    history = [ll]
    floored = False
    converged = False
    it = 0
    while it < opts.max_iterations:
        it += 1
        p = data.predicted(rho)
        low = (p < PROBABILITY_FLOOR) & (data.freqs > 0)
        if low.any() and not floored:
            floored = True
            log.warning(
                "%d outcome(s) observed with predicted probability < %g; flooring",
                int(low.sum()), PROBABILITY_FLOOR,
            )
        ratio = np.where(data.freqs > 0, data.freqs / np.maximum(p, PROBABILITY_FLOOR), 0.0)
        k = g_inv @ (ratio @ flat).reshape(d, d)

        step = _diluted_step(data, rho, k, ll, opts.dilution)
        if step is None:
            # no diluted step keeps the likelihood from falling
            converged = True
            break
        candidate, ll_new = step
        if opts.rank_reduction:
            reduced = _reduce_rank(data, candidate, ll_new)
            if reduced is not None:
                candidate, ll_new = reduced
        gain = ll_new - ll
        rho, ll = candidate, ll_new
        history.append(ll)
        if gain < opts.convergence_threshold:
            converged = True
            break

    if not converged:
        log.info("MLE stopped at max_iterations=%d without converging", opts.max_iterations)
    return MleResult(
        rho=rho,
        iterations=it,
        converged=converged,
        log_likelihood=ll,
        history=history,
        gauge_freedom=gauge_freedom(settings),
        floored=floored,
    )


def mle_reconstruct(
    records: Sequence[CountRecord],
    settings: Sequence[MeasurementSetting],
    opts: MleOptions | None = None,
) -> np.ndarray:
    """Maximum-likelihood density matrix for ``records``; see :func:`run_mle`."""
    return run_mle(records, settings, opts).rho
