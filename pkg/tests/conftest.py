"""Shared fixtures and independent oracles for the test suite.

The dense oracle builds the full density matrix of a sparse-branch state
over a truncated Fock grid, so sparse-path quantities (overlaps,
coincidence sums, partial traces) can be checked against brute-force
linear algebra.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from photsub import fock
from photsub.fock import MixedState, PureBranch, mixed_state, pure_branch


def dense_index_map(mode_count: int, cutoff: int):
    """All occupation tuples with entries <= cutoff, and their flat indices."""
    states = list(itertools.product(range(cutoff + 1), repeat=mode_count))
    return states, {s: i for i, s in enumerate(states)}


def dense_density_matrix(state: MixedState, cutoff: int) -> np.ndarray:
    """Brute-force density matrix of a MixedState on the truncated grid."""
    states, index = dense_index_map(state.mode_count, cutoff)
    dim = len(states)
    rho = np.zeros((dim, dim), dtype=complex)
    for branch in state.branches:
        vec = np.zeros(dim, dtype=complex)
        for occ, amp in branch.amplitudes.items():
            if max(occ) > cutoff:
                raise ValueError(f"cutoff {cutoff} too small for occupation {occ}")
            vec[index[occ]] = amp
        rho += branch.weight * np.outer(vec, vec.conj())
    return rho


def dense_coherent_vector(alphas, cutoff: int) -> np.ndarray:
    """Coherent product state |alpha_1 ... alpha_M> on the truncated grid."""
    states, _ = dense_index_map(len(alphas), cutoff)
    vec = np.zeros(len(states), dtype=complex)
    pref = math.exp(-0.5 * sum(abs(a) ** 2 for a in alphas))
    for i, occ in enumerate(states):
        term = pref
        for a, m in zip(alphas, occ):
            term *= a**m / math.sqrt(math.factorial(m))
        vec[i] = term
    return vec


def random_branch(rng, mode_count: int, cutoff: int = 3, terms: int = 4) -> PureBranch:
    states, _ = dense_index_map(mode_count, cutoff)
    picks = rng.choice(len(states), size=min(terms, len(states)), replace=False)
    amps = {
        states[i]: complex(rng.normal(), rng.normal()) for i in picks
    }
    return pure_branch(float(rng.uniform(0.1, 1.0)), amps)


def random_state(rng, mode_count: int, branches: int = 3, cutoff: int = 3) -> MixedState:
    return mixed_state(
        mode_count, [random_branch(rng, mode_count, cutoff) for _ in range(branches)]
    )


def psi_plus_state(sign: int = +1) -> MixedState:
    """Normalized delocalized single photon (|01> +- |10>)/sqrt(2)."""
    s = 1.0 / math.sqrt(2.0)
    return mixed_state(2, [pure_branch(1.0, {(0, 1): s, (1, 0): sign * s})])


def phi_plus_state() -> MixedState:
    """Normalized polarization pair (|hh> + |vv>)/sqrt(2)."""
    s = 1.0 / math.sqrt(2.0)
    return mixed_state(4, [pure_branch(1.0, {(1, 0, 1, 0): s, (0, 1, 0, 1): s})])


def ideal_two_photon_output(transmission: float) -> MixedState:
    """Closed-form heralded state of the two-photon scheme with ideal sources.

    Built directly from its known branch decomposition (efficiency
    squared factored out): the polarization pair with weight
    (1-T)^2 / 2, one single-photon term per node polarization with
    weight T(1-T)/4, and vacuum with weight T^2 / 2, all times T^2.
    """
    t = transmission
    s = 1.0 / math.sqrt(2.0)
    lead = 0.5 * t**2
    branches = [
        pure_branch(lead * (1 - t) ** 2, {(1, 0, 1, 0): s, (0, 1, 0, 1): s}),
        pure_branch(lead * 0.5 * t * (1 - t), {(1, 0, 0, 0): 1.0}),
        pure_branch(lead * 0.5 * t * (1 - t), {(0, 1, 0, 0): 1.0}),
        pure_branch(lead * 0.5 * t * (1 - t), {(0, 0, 1, 0): 1.0}),
        pure_branch(lead * 0.5 * t * (1 - t), {(0, 0, 0, 1): 1.0}),
        pure_branch(lead * t**2, {(0, 0, 0, 0): 1.0}),
    ]
    return mixed_state(4, branches, {"zeta": 2})


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
