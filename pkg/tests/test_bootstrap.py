import numpy as np
import pytest

from hybridqudit.core import ket_to_dm
from hybridqudit.distillation import stabilizer_fidelity
from hybridqudit.errors import BootstrapError, RejectedInputError
from hybridqudit.states import bell_state, mix_with_white_noise
from hybridqudit.tomography import (
    CountRecord,
    bootstrap_estimate,
    expectation_from_counts,
    pauli_setting,
    resample_records,
    simulate_counts,
)

PATH_SETTINGS = [pauli_setting(b) for b in ("XX", "YY", "ZZ")]
OBS = {
    "XX": np.fliplr(np.eye(4)),
    "YY": np.fliplr(np.diag([-1.0, 1.0, 1.0, -1.0])),
    "ZZ": np.diag([1.0, -1.0, -1.0, 1.0]),
}


def bell_fidelity(records):
    e = {k: expectation_from_counts(records, PATH_SETTINGS, o) for k, o in OBS.items()}
    return stabilizer_fidelity(e["XX"], e["YY"], e["ZZ"])


def noisy_records(shots, seed=7):
    rho = mix_with_white_noise(ket_to_dm(bell_state("phi+")), 0.8)
    return simulate_counts(rho, PATH_SETTINGS, shots, seed)


def test_yy_observable_is_pauli_product():
    y = np.array([[0, -1j], [1j, 0]])
    assert np.allclose(OBS["YY"], np.kron(y, y))


def test_constant_estimator():
    res = bootstrap_estimate(noisy_records(1000), lambda r: 0.5, 20, seed=1)
    assert res.mean == 0.5
    assert res.stderr == 0.0


def test_deterministic():
    recs = noisy_records(5000)
    a = bootstrap_estimate(recs, bell_fidelity, 100, seed=3, converge_rtol=None)
    b = bootstrap_estimate(recs, bell_fidelity, 100, seed=3, converge_rtol=None)
    assert a == b
    c = bootstrap_estimate(recs, bell_fidelity, 100, seed=4, converge_rtol=None)
    assert c.stderr != a.stderr


def test_stderr_shrinks_with_shots():
    lo = bootstrap_estimate(noisy_records(10**4), bell_fidelity, 500, seed=9, converge_rtol=None)
    hi = bootstrap_estimate(noisy_records(4 * 10**4), bell_fidelity, 500, seed=9, converge_rtol=None)
    # the spread of the estimator scales as 1/sqrt(shots)
    assert lo.stderr / hi.stderr == pytest.approx(2.0, rel=0.2)


def test_early_stop_on_convergence():
    res = bootstrap_estimate(noisy_records(10**4), bell_fidelity, 2000, seed=2)
    assert 50 <= res.n_used < 2000


def test_resample_keeps_shots_consistent(rng):
    recs = simulate_counts(np.diag([0.5, 0.5]), [pauli_setting("Z")], 1000, seed=0)
    out = resample_records(recs, rng)
    assert all(r.counts <= r.shots for r in out)
    assert sum(r.counts for r in out) == out[0].shots


def test_failures_are_skipped(caplog):
    calls = {"n": 0}

    def flaky(records):
        calls["n"] += 1
        if calls["n"] % 4 == 0:
            raise ValueError("boom")
        return 1.0

    res = bootstrap_estimate(noisy_records(100), flaky, 40, seed=0, converge_rtol=None)
    assert res.n_failed == 10
    assert res.n_used == 30
    assert "boom" in caplog.text


def test_too_many_failures():
    def broken(records):
        raise RuntimeError("nope")

    with pytest.raises(BootstrapError):
        bootstrap_estimate(noisy_records(100), broken, 10, seed=0)


def test_needs_two_resamples():
    with pytest.raises(RejectedInputError):
        bootstrap_estimate(noisy_records(100), bell_fidelity, 1, seed=0)


def test_matrix_estimator():
    recs = [CountRecord("Z", 0, 400, 1000), CountRecord("Z", 1, 600, 1000)]
    res = bootstrap_estimate(recs, lambda r: np.array([r[0].counts, r[1].counts]) / r[0].shots, 200, seed=5, converge_rtol=None)
    assert res.mean.shape == (2,)
    assert res.mean == pytest.approx([0.4, 0.6], abs=0.01)
