import itertools
import math

import numpy as np
import pytest

from photsub.bell import (
    AngleSettings,
    DisplacementSettings,
    STANDARD_ANGLES,
    ch_value,
    chsh_value,
    coincidence_probability,
    correlation,
    q_joint,
    q_marginal,
    rotate_polarization,
    standard_angles,
)
from photsub.entanglement import eof, project_two_photon_qubits
from photsub.fock import ZeroTraceError, basis_branch, mixed_state, pure_branch
from photsub.schemes import build_one_photon_spec
from photsub.sources import down_conversion_stats
from photsub.subtraction import conditional_state_small_t, low_zeta_detector

from conftest import (
    dense_coherent_vector,
    dense_density_matrix,
    dense_index_map,
    phi_plus_state,
    psi_plus_state,
    random_state,
)

ZEROS = DisplacementSettings(0, 0, 0, 0)


def vacuum_state(mode_count=2):
    return mixed_state(mode_count, [basis_branch((0,) * mode_count)])


class TestSettings:
    def test_displacement_bound(self):
        with pytest.raises(ValueError):
            DisplacementSettings(11.0, 0, 0, 0)

    def test_angles_reduced_mod_pi(self):
        s = AngleSettings(math.pi, 0.0, 5 * math.pi / 4, -math.pi)
        assert s.theta_a == pytest.approx(0.0)
        assert s.theta_b == pytest.approx(math.pi / 4)
        assert s.theta_b_prime == pytest.approx(0.0)

    def test_displacement_array_round_trip(self):
        s = DisplacementSettings(0.5 + 0.1j, -0.2, 0.3j, 1.0)
        assert DisplacementSettings.from_array(s.as_array(True), True) == s


class TestQFunctions:
    def test_pair_state_has_no_vacuum_component(self):
        assert q_joint(psi_plus_state(), 0.0, 0.0) == 0.0

    def test_vacuum_no_count_probability_is_one(self):
        assert q_joint(vacuum_state(), 0.0, 0.0) == pytest.approx(1.0)

    def test_q_joint_matches_dense_oracle(self, rng):
        state = random_state(rng, 2, branches=3, cutoff=3)
        rho = dense_density_matrix(state, 3) / state.trace()
        for alpha, beta in [(0.5, 0.0), (0.3 - 0.2j, 0.1j), (1.0, -0.7)]:
            vec = dense_coherent_vector((alpha, beta), 3)
            expected = np.real(vec.conj() @ rho @ vec)
            assert q_joint(state, alpha, beta) == pytest.approx(expected, abs=1e-12)

    def test_q_marginal_of_pair_state(self):
        # reduced state is (|0><0| + |1><1|)/2
        for node in ("a1", "a2"):
            assert q_marginal(psi_plus_state(), 0.0, node) == pytest.approx(0.5)

    def test_q_marginal_of_vacuum(self):
        assert q_marginal(vacuum_state(), 0.0, "a1") == pytest.approx(1.0)

    def test_q_marginal_matches_dense_partial_trace(self, rng):
        state = random_state(rng, 2, branches=3, cutoff=3)
        rho = dense_density_matrix(state, 3) / state.trace()
        rho4 = rho.reshape(4, 4, 4, 4)
        for alpha in (0.4, 0.2 - 0.5j):
            single = dense_coherent_vector((alpha,), 3)
            reduced_a1 = np.einsum("ikjk->ij", rho4)
            reduced_a2 = np.einsum("kikj->ij", rho4)
            assert q_marginal(state, alpha, "a1") == pytest.approx(
                np.real(single.conj() @ reduced_a1 @ single), abs=1e-12
            )
            assert q_marginal(state, alpha, "a2") == pytest.approx(
                np.real(single.conj() @ reduced_a2 @ single), abs=1e-12
            )

    def test_q_values_within_unit_interval(self, rng):
        for _ in range(5):
            state = random_state(rng, 2, branches=2, cutoff=2)
            a = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
            b = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
            assert 0.0 <= q_joint(state, a, b) <= 1.0
            assert 0.0 <= q_marginal(state, a, "a1") <= 1.0

    def test_zero_trace_raises(self):
        empty = mixed_state(2, [])
        with pytest.raises(ZeroTraceError):
            q_joint(empty, 0.0, 0.0)


class TestClauserHorne:
    def test_pair_state_sits_on_lhv_boundary(self):
        assert ch_value(psi_plus_state(), ZEROS) == pytest.approx(-1.0, abs=1e-12)

    def test_vacuum_sits_on_other_boundary(self):
        assert ch_value(vacuum_state(), ZEROS) == pytest.approx(0.0, abs=1e-12)

    def test_any_state_within_lhv_band_at_zero_displacements(self, rng):
        for _ in range(20):
            state = random_state(rng, 2, branches=3, cutoff=3)
            value = ch_value(state, ZEROS)
            assert -1.0 - 1e-12 <= value <= 1e-12

    def test_heralded_ideal_state_violates_with_known_settings(self):
        # small symmetric displacements push CH below the LHV bound
        s = DisplacementSettings(0.165, -0.563, 0.165, -0.563)
        assert ch_value(psi_plus_state(), s) < -1.0


class TestRotatePolarization:
    def test_zero_angle_is_involution(self, rng):
        state = random_state(rng, 4, branches=2, cutoff=2)
        once = rotate_polarization(state, 0.0, 0.0)
        twice = rotate_polarization(once, 0.0, 0.0)
        assert np.max(
            np.abs(dense_density_matrix(twice, 2) - dense_density_matrix(state, 2))
        ) < 1e-12

    def test_trace_preserved(self, rng):
        state = random_state(rng, 4, branches=3, cutoff=2)
        rotated = rotate_polarization(state, 0.7, -1.1)
        assert rotated.trace() == pytest.approx(state.trace(), abs=1e-12)

    def test_quarter_turn_maps_h_to_diagonal(self):
        state = mixed_state(4, [basis_branch((1, 0, 0, 0))])
        rotated = rotate_polarization(state, math.pi / 4, 0.0)
        amps = rotated.branches[0].amplitudes
        assert amps[(1, 0, 0, 0)] == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert amps[(0, 1, 0, 0)] == pytest.approx(1 / math.sqrt(2), abs=1e-12)

    def test_pair_state_eof_invariant_under_common_rotation(self):
        state = phi_plus_state()
        base = eof(project_two_photon_qubits(state))
        for theta in (0.3, 0.9):
            rotated = rotate_polarization(state, theta, theta)
            assert eof(project_two_photon_qubits(rotated)) == pytest.approx(
                base, abs=1e-10
            )

    def test_wrong_mode_count(self):
        with pytest.raises(ValueError):
            rotate_polarization(psi_plus_state(), 0.1, 0.2)


class TestCoincidences:
    def test_pair_state_unrotated(self):
        assert coincidence_probability(phi_plus_state(), "13") == pytest.approx(0.5)
        assert coincidence_probability(phi_plus_state(), "14") == pytest.approx(0.0)
        assert coincidence_probability(phi_plus_state(), "24") == pytest.approx(0.5)

    def test_double_click_is_inconclusive(self):
        state = mixed_state(4, [basis_branch((1, 1, 1, 0))])
        for pair in ("13", "14", "23", "24"):
            assert coincidence_probability(state, pair) == 0.0

    def test_pair_sum_bounded_by_one(self, rng):
        for _ in range(10):
            state = random_state(rng, 4, branches=2, cutoff=2)
            total = sum(
                coincidence_probability(state, p) for p in ("13", "14", "23", "24")
            )
            assert total <= 1.0 + 1e-12

    def test_pair_sum_saturates_for_single_photon_per_node(self):
        total = sum(
            coincidence_probability(phi_plus_state(), p)
            for p in ("13", "14", "23", "24")
        )
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_matches_dense_oracle(self, rng):
        state = random_state(rng, 4, branches=2, cutoff=2)
        rho = dense_density_matrix(state, 2) / state.trace()
        states, index = dense_index_map(4, 2)
        expected = 0.0
        for occ in states:
            if occ[0] >= 1 and occ[2] >= 1 and occ[1] == 0 and occ[3] == 0:
                expected += np.real(rho[index[occ], index[occ]])
        assert coincidence_probability(state, "13") == pytest.approx(expected, abs=1e-12)

    def test_unknown_pair(self):
        with pytest.raises(ValueError):
            coincidence_probability(phi_plus_state(), "12")


class TestChsh:
    def test_tsirelson_value_at_standard_angles(self):
        value = chsh_value(phi_plus_state(), standard_angles())
        assert abs(value) == pytest.approx(2 * math.sqrt(2), abs=1e-9)

    def test_correlation_of_pair_state_is_cosine(self):
        for a, b in [(0.0, 0.3), (0.5, -0.2), (0.7, 0.7)]:
            assert correlation(phi_plus_state(), a, b) == pytest.approx(
                math.cos(2 * (a - b)), abs=1e-12
            )

    def test_product_state_respects_lhv_bound(self, rng):
        state = mixed_state(4, [basis_branch((1, 0, 1, 0))])
        for _ in range(200):
            angles = AngleSettings(*rng.uniform(-math.pi / 2, math.pi / 2, 4))
            assert abs(chsh_value(state, angles)) <= 2.0 + 1e-9

    def test_degenerate_settings_cannot_violate(self, rng):
        state = phi_plus_state()
        for _ in range(20):
            a, b, bp = rng.uniform(-math.pi / 2, math.pi / 2, 3)
            settings = AngleSettings(a, a, b, bp)
            value = chsh_value(state, settings)
            assert value == pytest.approx(2 * correlation(state, a, b), abs=1e-10)
            assert abs(value) <= 2.0 + 1e-10

    def test_affine_in_the_state(self, rng):
        a = phi_plus_state()
        b = mixed_state(4, [basis_branch((1, 0, 1, 0))])
        lam = 0.3
        mixture = mixed_state(
            4,
            [pure_branch(lam * br.weight, br.amplitudes) for br in a.branches]
            + [pure_branch((1 - lam) * br.weight, br.amplitudes) for br in b.branches],
        )
        angles = standard_angles()
        expected = lam * chsh_value(a, angles) + (1 - lam) * chsh_value(b, angles)
        assert chsh_value(mixture, angles) == pytest.approx(expected, abs=1e-12)


class TestTruncationStability:
    def test_ch_insensitive_to_down_conversion_tail(self):
        # optimal displacements found at mmax=3 give the same CH at mmax=6
        from photsub.optimize import minimize_ch

        spec = build_one_photon_spec(1e-3, low_zeta_detector())
        states = {}
        for mmax in (3, 6):
            stats = down_conversion_stats(0.95, 0.03, mmax=mmax)
            states[mmax] = conditional_state_small_t([stats, stats], spec)
        settings, ch3 = minimize_ch(states[3], starts=6, seed=1)
        ch6 = ch_value(states[6], settings)
        assert abs(ch3 - ch6) < 1e-3
