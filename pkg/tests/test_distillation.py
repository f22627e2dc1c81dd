import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridqudit.core import ket_to_dm, tensor
from hybridqudit.distillation import (
    BOTH,
    MODE,
    NONE,
    SCENARIOS,
    FlipScenario,
    distill_sweep,
    distill_table,
    flip_weights,
    local_cnot,
    mean_gain,
    output_path_state,
    postselect_mode_correlated,
    scale_counts,
    scenario_counts,
    stabilizer_fidelity,
)
from hybridqudit.core import fidelity_pure
from hybridqudit.errors import DegenerateStateError, RejectedInputError
from hybridqudit.states import (
    DofAddress,
    apply_bit_flip,
    bell_state,
    hyperentangled_state,
    mix_with_white_noise,
    white_noise_weight_for_fidelity,
)

import distill_oracle

from conftest import random_density_matrix

HYPER = ket_to_dm(hyperentangled_state())


def register_ket(mode_pair, path_pair):
    """(mode_s, mode_i) x (path_s, path_i) two-qubit kets on the register."""
    return tensor(mode_pair, path_pair)


def same_up_to_phase(a, b, atol=1e-12):
    return abs(abs(np.vdot(a, b)) - 1) < atol


TABLE = [
    # (path in, mode in) -> (path out, mode out)
    (("phi+", "phi+"), ("phi+", "phi+")),
    (("psi+", "phi+"), ("psi+", "psi+")),
    (("phi+", "psi+"), ("phi+", "psi+")),
    (("psi+", "psi+"), ("psi+", "phi+")),
]


class TestCnot:
    def test_unitary_permutation(self):
        u = local_cnot()
        assert np.allclose(u @ u.conj().T, np.eye(16), atol=1e-12)
        assert np.allclose(u, distill_oracle.cnots())

    @pytest.mark.parametrize("inp,out", TABLE)
    def test_truth_table(self, inp, out):
        (path_in, mode_in), (path_out, mode_out) = inp, out
        psi = register_ket(bell_state(mode_in), bell_state(path_in))
        expected = register_ket(bell_state(mode_out), bell_state(path_out))
        assert same_up_to_phase(local_cnot() @ psi, expected)

    def test_mode_flip_row(self):
        rho = apply_bit_flip(HYPER, DofAddress("idler", "mode"))
        after = local_cnot() @ rho @ local_cnot().T
        psi = register_ket(bell_state("psi+"), bell_state("phi+"))
        assert fidelity_pure(after, psi) == pytest.approx(1.0)


class TestWeights:
    @pytest.mark.parametrize("p,expected", [(0, (1, 0, 0)), (0.5, (0.25, 0.25, 0.25)), (0.2, (0.64, 0.16, 0.04))])
    def test_values(self, p, expected):
        assert flip_weights(p) == pytest.approx(expected)

    @pytest.mark.parametrize("p", [-0.1, 1.1, np.nan])
    def test_out_of_range(self, p):
        with pytest.raises(RejectedInputError):
            flip_weights(p)

    def test_scenarios_distinct(self):
        assert len(set(SCENARIOS)) == 4
        assert {s.name for s in SCENARIOS} == {"none", "path", "mode", "both"}
        assert FlipScenario(True, True) == BOTH


class TestScaleCounts:
    def setup_method(self):
        self.sc = scenario_counts(HYPER, with_distillation=True)

    def test_endpoints(self):
        for key, vec in scale_counts(self.sc, 0.0).items():
            assert np.allclose(vec, self.sc[NONE][key])
        for key, vec in scale_counts(self.sc, 1.0).items():
            assert np.allclose(vec, self.sc[BOTH][key])

    def test_identical_inputs(self):
        v = np.full(16, 1 / 16)
        sc = {s: {"XX": v} for s in SCENARIOS}
        for p in (0.1, 0.7):
            assert np.allclose(scale_counts(sc, p)["XX"], v)

    def test_missing_scenario(self):
        sc = {s: v for s, v in self.sc.items() if s != MODE}
        with pytest.raises(RejectedInputError):
            scale_counts(sc, 0.3)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0, 1))
    def test_convex_combination(self, p):
        out = scale_counts(self.sc, p)
        for key, vec in out.items():
            stack = np.array([self.sc[s][key] for s in SCENARIOS])
            assert np.all(vec >= stack.min(axis=0) - 1e-12)
            assert np.all(vec <= stack.max(axis=0) + 1e-12)
            assert vec.sum() == pytest.approx(1.0, abs=1e-10)


class TestStabilizerFidelity:
    def test_examples(self):
        assert stabilizer_fidelity(1, -1, 1) == 1.0
        assert stabilizer_fidelity(0, 0, 0) == 0.25
        assert stabilizer_fidelity(1, 1, -1) == 0.0

    def test_rejects_out_of_range(self):
        with pytest.raises(RejectedInputError):
            stabilizer_fidelity(1.2, 0, 0)


class TestPostselect:
    def test_ideal(self):
        after = local_cnot() @ HYPER @ local_cnot().T
        path, prob = postselect_mode_correlated(after)
        assert prob == pytest.approx(1.0)
        assert fidelity_pure(path, bell_state("phi+")) == pytest.approx(1.0)

    def test_mode_flip_is_rejected(self):
        rho = apply_bit_flip(HYPER, DofAddress("idler", "mode"))
        after = local_cnot() @ rho @ local_cnot().T
        with pytest.raises(DegenerateStateError):
            postselect_mode_correlated(after)
        _, prob = postselect_mode_correlated(after, rule="anticorrelated")
        assert prob == pytest.approx(1.0)

    def test_both_flips_go_undetected(self):
        rho = apply_bit_flip(apply_bit_flip(HYPER, DofAddress("idler", "mode")), DofAddress("idler", "path"))
        after = local_cnot() @ rho @ local_cnot().T
        path, prob = postselect_mode_correlated(after)
        assert prob == pytest.approx(1.0)
        assert fidelity_pure(path, bell_state("psi+")) == pytest.approx(1.0)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_complementary_rates(self, seed):
        rho = random_density_matrix(16, np.random.default_rng(seed))
        _, a = postselect_mode_correlated(rho, "correlated")
        _, b = postselect_mode_correlated(rho, "anticorrelated")
        assert a + b == pytest.approx(1.0, abs=1e-10)

    def test_unknown_rule(self):
        with pytest.raises(RejectedInputError):
            postselect_mode_correlated(HYPER, "sometimes")


class TestSweep:
    def test_ideal_p0(self):
        for distill in (False, True):
            (pt,) = distill_sweep(HYPER, [0.0], distill)
            assert pt.fidelity == pytest.approx(1.0)

    def test_p_02(self):
        (row,) = distill_table(HYPER, [0.2])
        assert row.fidelity_no_distill == pytest.approx(0.8, abs=1e-12)
        assert row.fidelity_distill == pytest.approx(0.64 / 0.68, abs=1e-12)
        assert row.success_probability == pytest.approx(0.68)

    def test_p_half(self):
        (row,) = distill_table(HYPER, [0.5])
        assert row.fidelity_no_distill == pytest.approx(0.5)
        assert row.fidelity_distill == pytest.approx(0.5)

    def test_against_oracle(self):
        grid = np.linspace(0, 1, 21)
        for row in distill_table(HYPER, grid):
            f_no, f_yes, success = distill_oracle.curves(HYPER, row.p)
            assert row.fidelity_no_distill == pytest.approx(f_no, abs=1e-9)
            assert row.fidelity_distill == pytest.approx(f_yes, abs=1e-9)
            assert row.success_probability == pytest.approx(success, abs=1e-9)

    def test_count_and_state_pipelines_agree(self):
        rho = mix_with_white_noise(HYPER, 0.7)
        for p in (0.0, 0.15, 0.4):
            (row,) = distill_table(rho, [p])
            path, success = output_path_state(rho, p, True)
            assert row.fidelity_distill == pytest.approx(fidelity_pure(path, bell_state("phi+")), abs=1e-9)
            assert row.success_probability == pytest.approx(success, abs=1e-9)

    def test_signal_photon_option(self):
        grid = [0.1, 0.3]
        a = distill_table(HYPER, grid, photon="signal")
        b = distill_table(HYPER, grid, photon="idler")
        assert [r.fidelity_distill for r in a] == pytest.approx([r.fidelity_distill for r in b])
        rho = mix_with_white_noise(HYPER, 0.6)
        for row in distill_table(rho, grid, photon="signal"):
            _, f_yes, _ = distill_oracle.curves(rho, row.p, idler=False)
            assert row.fidelity_distill == pytest.approx(f_yes, abs=1e-9)

    def test_gain_on_open_interval(self):
        for row in distill_table(HYPER, np.linspace(0.01, 0.49, 25)):
            assert row.fidelity_distill > row.fidelity_no_distill

    def test_noisy_resource_improves_at_zero(self):
        rho = mix_with_white_noise(HYPER, white_noise_weight_for_fidelity(0.673))
        (row,) = distill_table(rho, [0.0])
        assert row.fidelity_distill > row.fidelity_no_distill

    def test_mle_method(self):
        pts = distill_sweep(HYPER, [0.2, 0.7], True, method="mle")
        assert pts[0].fidelity == pytest.approx(0.64 / 0.68, abs=1e-4)
        assert pts[0].converged
        assert not pts[1].converged and np.isnan(pts[1].fidelity)

    def test_mean_gain(self):
        rows = distill_table(HYPER, np.linspace(0, 1, 101))
        oracle = np.mean([distill_oracle.curves(HYPER, r.p)[1] - distill_oracle.curves(HYPER, r.p)[0] for r in rows if r.p <= 0.5])
        assert mean_gain(rows) == pytest.approx(oracle, abs=1e-9)

    def test_bad_inputs(self):
        with pytest.raises(RejectedInputError):
            distill_sweep(HYPER, [], True)
        with pytest.raises(RejectedInputError):
            distill_sweep(HYPER, [1.5], True)
        with pytest.raises(RejectedInputError):
            distill_sweep(HYPER, [0.1], True, method="magic")
