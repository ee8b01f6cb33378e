import math

import numpy as np
import pytest

from photsub.entanglement import (
    eof,
    project_one_photon_qubits,
    project_two_photon_qubits,
)
from photsub.fock import annihilate_combination, basis_branch
from photsub.schemes import (
    HERALDING_CLASSES,
    ONE_PHOTON_UNITARY,
    TWO_PHOTON_UNITARY,
    SchemeKind,
    analytic_one_photon_elements,
    analytic_two_photon_elements,
    build_one_photon_spec,
    build_two_photon_spec,
    general_t_condition_sides,
)
from photsub.sources import custom_stats, double_emission_stats
from photsub.subtraction import conditional_state, low_zeta_detector

PERFECT = custom_stats([0.0, 1.0])


class TestCircuits:
    def test_unitarity(self):
        for u in (ONE_PHOTON_UNITARY, TWO_PHOTON_UNITARY):
            assert np.max(np.abs(u @ u.T - np.eye(len(u)))) < 1e-15

    def test_two_photon_circuit_is_an_involution(self):
        assert np.max(np.abs(TWO_PHOTON_UNITARY @ TWO_PHOTON_UNITARY - np.eye(4))) < 1e-15

    def test_one_photon_rows_give_balanced_superpositions(self):
        # row 0 subtracts (a1 + a2)/sqrt(2), producing the + superposition
        plus = annihilate_combination(basis_branch((1, 1)), ONE_PHOTON_UNITARY[0])
        assert plus.amplitudes[(0, 1)] == pytest.approx(1 / math.sqrt(2))
        assert plus.amplitudes[(1, 0)] == pytest.approx(1 / math.sqrt(2))
        minus = annihilate_combination(basis_branch((1, 1)), ONE_PHOTON_UNITARY[1])
        assert minus.amplitudes[(0, 1)] == pytest.approx(1 / math.sqrt(2))
        assert minus.amplitudes[(1, 0)] == pytest.approx(-1 / math.sqrt(2))

    def test_default_clicks(self):
        assert build_one_photon_spec(0.1, low_zeta_detector()).clicks == (1, 0)
        assert build_two_photon_spec(0.1, low_zeta_detector()).clicks == (1, 0, 1, 0)

    def test_rejects_non_heralding_clicks(self):
        with pytest.raises(ValueError):
            build_one_photon_spec(0.1, low_zeta_detector(), clicks=(1, 1))
        with pytest.raises(ValueError):
            build_two_photon_spec(0.1, low_zeta_detector(), clicks=(1, 1, 0, 0))

    def test_one_photon_click_classes_differ_by_a_phase_flip(self):
        t = 0.2
        dms = {}
        for clicks in HERALDING_CLASSES[SchemeKind.ONE_PHOTON]:
            spec = build_one_photon_spec(t, low_zeta_detector(), clicks=clicks)
            dms[clicks] = project_one_photon_qubits(
                conditional_state([PERFECT, PERFECT], spec)
            ).matrix
        # pi phase on mode a1: |10> and |11> flip sign
        z = np.diag([1.0, 1.0, -1.0, -1.0])
        flipped = z @ dms[(0, 1)] @ z
        assert np.max(np.abs(dms[(1, 0)] - flipped)) < 1e-12


class TestTwoPhotonHeralding:
    def test_phi_plus_class_leading_order(self):
        t = 0.15
        spec = build_two_photon_spec(t, low_zeta_detector())
        dm = project_two_photon_qubits(conditional_state([PERFECT] * 4, spec))
        # qubit component is the polarization pair with weight T^2 (1-T)^2 / 2
        expected = 0.5 * t**2 * (1 - t) ** 2
        assert dm.trace() == pytest.approx(expected, abs=1e-12)
        rho = dm.normalized()
        target = np.zeros(4)
        target[0] = target[3] = 1 / math.sqrt(2)
        assert np.real(target @ rho @ target) == pytest.approx(1.0, abs=1e-12)

    def test_cross_class_heralds_the_swapped_pair(self):
        t = 0.15
        spec = build_two_photon_spec(t, low_zeta_detector(), clicks=(1, 0, 0, 1))
        dm = project_two_photon_qubits(conditional_state([PERFECT] * 4, spec))
        rho = dm.normalized()
        target = np.zeros(4)
        target[1] = target[2] = 1 / math.sqrt(2)  # |hv> + |vh>
        assert np.real(target @ rho @ target) == pytest.approx(1.0, abs=1e-12)

    def test_all_click_classes_yield_equal_entanglement(self):
        stats = double_emission_stats(0.85, 0.12)
        t = 0.1
        values = []
        for clicks in HERALDING_CLASSES[SchemeKind.TWO_PHOTON]:
            spec = build_two_photon_spec(t, low_zeta_detector(), clicks=clicks)
            dm = project_two_photon_qubits(conditional_state([stats] * 4, spec))
            values.append(eof(dm))
        assert max(values) - min(values) < 1e-10


class TestAnalyticOnePhotonElements:
    def test_ideal_source_reduces_to_pure_pair(self):
        el = analytic_one_photon_elements(custom_stats([0.0, 1.0, 0.0]), 0.3)
        assert el.rho00 == 0.0
        assert el.rho11 == 0.0
        assert el.rho01 == pytest.approx(0.15)
        assert el.rho10 == pytest.approx(0.15)
        assert abs(el.c) == pytest.approx(0.15)

    def test_sign_follows_heralding_class(self):
        stats = double_emission_stats(0.9, 0.1)
        assert analytic_one_photon_elements(stats, 0.1, sign=-1).c < 0
        with pytest.raises(ValueError):
            analytic_one_photon_elements(stats, 0.1, sign=2)

    def test_ppt_direction_matches_threshold_algebra(self):
        # |c|^2 > rho00 rho11 iff p1^2 > 8 p0 p2
        for eta, eps in [(0.9, 0.1), (0.6, 0.4), (0.95, 0.02), (0.55, 0.5)]:
            stats = double_emission_stats(eta, eps)
            el = analytic_one_photon_elements(stats, 1e-3)
            p0, p1, p2 = stats.probs
            assert (el.c**2 > el.rho00 * el.rho11) == (p1**2 > 8 * p0 * p2)

    def test_engine_cross_check(self):
        stats = double_emission_stats(0.9, 0.1)
        t = 1e-3
        spec = build_one_photon_spec(t, low_zeta_detector())
        engine = project_one_photon_qubits(
            conditional_state([stats, stats], spec)
        ).matrix
        analytic = analytic_one_photon_elements(stats, t).matrix()
        scale = np.real(np.trace(analytic))
        assert np.max(np.abs(engine - analytic)) / scale <= 5 * t


class TestAnalyticTwoPhotonElements:
    def test_ideal_source_reduces_to_pure_pair(self):
        el = analytic_two_photon_elements(custom_stats([0.0, 1.0, 0.0]), 0.2)
        assert el.rho_hh == pytest.approx(0.01)
        assert el.rho_vv == pytest.approx(0.01)
        assert el.rho_hv == 0.0
        assert el.c == pytest.approx(0.01)

    def test_ppt_reduces_to_cubic_condition(self, rng):
        for _ in range(100):
            v = rng.random(4)
            v /= v.sum()
            stats = custom_stats(v)
            el = analytic_two_photon_elements(stats)
            p0, p1, p2, p3 = v
            assert (el.c**2 > el.rho_hv * el.rho_vh) == (
                p1**3 > 5 * p0 * p1 * p2 + 3 * p0**2 * p3
            )

    def test_engine_cross_check_with_triple_emission(self):
        stats = custom_stats([0.25, 0.55, 0.15, 0.05])
        t = 1e-3
        spec = build_two_photon_spec(t, low_zeta_detector())
        engine = project_two_photon_qubits(
            conditional_state([stats] * 4, spec)
        ).matrix
        analytic = analytic_two_photon_elements(stats, t).matrix()
        scale = np.real(np.trace(analytic))
        assert np.max(np.abs(engine - analytic)) / scale <= 5 * t


class TestGeneralTCondition:
    def test_polynomial_terms(self):
        stats = custom_stats([0.3, 0.5, 0.2])
        p0, p1, p2 = 0.3, 0.5, 0.2
        t = 0.37
        lhs, rhs = general_t_condition_sides(stats, t)
        assert lhs == pytest.approx(p1**2 * (p1**2 / 4 - 2 * p0 * p2))
        assert rhs == pytest.approx(
            4 * t**4 * p2**4
            + 8 * t**3 * p1 * p2**3
            + 4 * t**2 * p2**2 * (p1**2 + 2 * p0 * p2)
            + 8 * t * p0 * p1 * p2**2
        )

    def test_rejects_three_photon_mass(self):
        with pytest.raises(ValueError):
            general_t_condition_sides(custom_stats([0.3, 0.4, 0.2, 0.1]), 0.1)
