"""Poissonian bootstrap for count-based estimators."""
from __future__ import annotations

import logging
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ..errors import BootstrapError, RejectedInputError
from .counts import CountRecord, group_by_setting

log = logging.getLogger(__name__)


class BootstrapResult(NamedTuple):
    mean: float | np.ndarray
    stderr: float | np.ndarray
    std: float | np.ndarray
    n_used: int
    n_failed: int


def resample_records(records: Sequence[CountRecord], rng: np.random.Generator) -> list[CountRecord]:
    """Draw each count from Poisson(observed count).

    Pair events a setting registered outside its recorded outcomes are
    resampled the same way so that ``shots`` stays consistent.
    """
    out = []
    for setting_id, group in group_by_setting(records).items():
        counts = np.array([r.counts for r in group])
        draws = rng.poisson(counts)
        unrecorded = max(group[0].shots - int(counts.sum()), 0)
        shots = max(int(draws.sum()) + int(rng.poisson(unrecorded)), 1)
        out.extend(
            CountRecord(setting_id, r.outcome_index, int(n), shots) for r, n in zip(group, draws)
        )
    return out


def _resample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def bootstrap_estimate(
    records: Sequence[CountRecord],
    estimator: Callable[[list[CountRecord]], float | np.ndarray],
    n_resamples: int,
    seed: int,
    converge_rtol: float | None = 0.01,
    min_resamples: int = 50,
) -> BootstrapResult:
    """Mean and standard error of ``estimator`` over Poisson resamples of ``records``.

    Resample ``k`` uses its own generator derived from ``(seed, k)``, so the
    result does not depend on evaluation order. Sampling stops early once the
    running standard deviation moved by less than ``converge_rtol`` (relative)
    over the last 10% of resamples, checked from ``min_resamples`` on; pass
    ``converge_rtol=None`` to always draw ``n_resamples``.

    A resample on which the estimator raises is skipped; if more than half of
    the attempted resamples fail, :class:`BootstrapError` is raised.
    """
    if n_resamples < 2:
        raise RejectedInputError("n_resamples must be at least 2")
    values = []
    stds = []
    failed = 0
    attempted = 0
    for k in range(n_resamples):
        attempted += 1
        sample = resample_records(records, _resample_rng(seed, k))
        try:
            values.append(np.asarray(estimator(sample), dtype=float))
        except Exception as exc:  # estimator is user code
            failed += 1
            log.warning("bootstrap resample %d failed: %s", k, exc)
            continue
        if len(values) >= 2:
            stds.append(np.std(values, axis=0, ddof=1))
        n = len(values)
        if converge_rtol is not None and n >= max(min_resamples, 2) and len(stds) > 1:
            then = stds[max(int(np.floor(0.9 * n)) - 2, 0)]
            now = stds[-1]
            scale = np.maximum(np.abs(then), np.finfo(float).tiny)
            if np.all(np.abs(now - then) / scale < converge_rtol) and np.all(now > 0):
                break

    if failed * 2 > attempted:
        raise BootstrapError(f"{failed} of {attempted} bootstrap resamples failed")
    if len(values) < 2:
        raise BootstrapError("fewer than two successful resamples")
    arr = np.array(values)
    mean = arr.mean(axis=0)
    std = arr.std(axis=0, ddof=1)
    stderr = std / np.sqrt(len(arr))
    if mean.ndim == 0:
        mean, std, stderr = float(mean), float(std), float(stderr)
    return BootstrapResult(mean, stderr, std, len(arr), failed)
