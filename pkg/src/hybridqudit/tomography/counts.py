"""Count records: simulation, bookkeeping, and expectation values."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import RejectedInputError, UndefinedExpectationError
from .settings import MeasurementSetting


@dataclass(frozen=True)
class CountRecord:
    """Coincidence counts for one outcome of one setting.

    ``shots`` is the number of post-selected pair events registered while the
    setting was active; for a setting whose outcomes resolve the identity it
    equals the setting's total counts.
    """

    setting_id: str
    outcome_index: int
    counts: int
    shots: int

    def __post_init__(self):
        if self.outcome_index < 0:
            raise RejectedInputError("outcome_index must be non-negative")
        if self.counts < 0:
            raise RejectedInputError("counts must be non-negative")
        if self.shots < 1:
            raise RejectedInputError("shots must be positive")
        if self.counts > self.shots:
            raise RejectedInputError(
                f"{self.setting_id}[{self.outcome_index}]: counts {self.counts} exceed shots {self.shots}"
            )


def outcome_probabilities(rho: np.ndarray, setting: MeasurementSetting) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (setting.dim, setting.dim):
        raise RejectedInputError(
            f"state dimension {rho.shape} does not match setting {setting.id!r} ({setting.dim})"
        )
    p = np.einsum("kij,ji->k", setting.outcomes, rho).real
    return np.clip(p, 0.0, 1.0)


def simulate_counts(
    rho,
    settings: Sequence[MeasurementSetting],
    shots: int,
    seed: int,
) -> list[CountRecord]:
    """Poisson counts with mean ``shots * p`` for every outcome of every setting.

    Events falling outside the setting's outcome operators (when they do not
    resolve the identity) are drawn too and only enter the recorded
    ``shots``. Deterministic for a given ``seed``.
    """
    if shots < 1:
        raise RejectedInputError("shots must be positive")
    rng = np.random.default_rng(seed)
    records = []
    for setting in settings:
        p = outcome_probabilities(rho, setting)
        missing = max(0.0, 1.0 - p.sum())
        draws = rng.poisson(shots * np.append(p, missing))
        total = max(int(draws.sum()), 1)
        records.extend(
            CountRecord(setting.id, k, int(n), total) for k, n in enumerate(draws[:-1])
        )
    return records


def exact_counts(rho, settings: Sequence[MeasurementSetting], shots: int) -> list[CountRecord]:
    """Noise-free records with ``counts = round(shots * p)``."""
    records = []
    for setting in settings:
        n = np.rint(shots * outcome_probabilities(rho, setting)).astype(int)
        total = max(shots, int(n.sum()))
        records.extend(CountRecord(setting.id, k, int(c), total) for k, c in enumerate(n))
    return records


def group_by_setting(records: Sequence[CountRecord]) -> dict[str, list[CountRecord]]:
    grouped = defaultdict(list)
    for r in records:
        grouped[r.setting_id].append(r)
    return dict(grouped)


def _sign_of_outcome(observable: np.ndarray, proj: np.ndarray, atol: float = 1e-9) -> float | None:
    tr = np.trace(proj).real
    if tr <= atol:
        return None
    s = np.trace(observable @ proj).real / tr
    if abs(abs(s) - 1.0) > atol or not np.allclose(observable @ proj, s * proj, atol=atol):
        return None
    return float(np.sign(s))


def outcome_signs_for(observable, setting: MeasurementSetting) -> np.ndarray | None:
    """+-1 per outcome if every outcome lies in an eigenspace of ``observable``."""
    observable = np.asarray(observable, dtype=complex)
    if observable.shape != (setting.dim, setting.dim):
        return None
    signs = [_sign_of_outcome(observable, p) for p in setting.outcomes]
    if any(s is None for s in signs):
        return None
    return np.array(signs)


def expectation_from_counts(
    records: Sequence[CountRecord],
    settings: Sequence[MeasurementSetting],
    observable,
) -> float:
    """Estimate <O> for a +-1-valued observable from the counts of matching settings.

    A setting matches when each of its outcome operators is an eigenprojector
    of ``observable``; counts of all matching settings are pooled.
    """
    by_setting = group_by_setting(records)
    num = den = 0.0
    matched = False
    for setting in settings:
        signs = outcome_signs_for(observable, setting)
        if signs is None:
            continue
        matched = True
        for r in by_setting.get(setting.id, []):
            if r.outcome_index >= len(setting):
                raise RejectedInputError(f"{setting.id}: outcome {r.outcome_index} out of range")
            num += signs[r.outcome_index] * r.counts
            den += r.counts
    if not matched:
        raise RejectedInputError("no setting measures in the observable's eigenbasis")
    if den == 0:
        raise UndefinedExpectationError("matching settings have zero total counts")
    return float(num / den)
