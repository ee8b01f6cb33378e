"""Bell-inequality tests on the heralded memory states.

For the one-photon scheme the noncommuting measurements are realized in
phase space: each memory field is displaced by a coherent reference and
monitored by a binary detector, so in the limit of a highly transmissive
displacement beam splitter a no-count event projects onto a coherent
state.  Joint and marginal no-count probabilities enter the
Clauser-Horne combination, bounded in [-1, 0] for local hidden variable
models.

For the two-photon scheme the polarization basis at each node is rotated
by a half-wave plate and the two output modes are monitored by binary
detectors.  Events with zero or two clicks at a node are inconclusive:
they contribute nothing to the correlation functions but stay in the
normalization, which keeps the coincidence probabilities honest in the
presence of multiphoton input terms.  Four such correlation functions
form the CHSH combination, bounded in [-2, 2] for local hidden variable
models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    MixedState,
    PureBranch,
    ZeroTraceError,
    coherent_overlap,
    mixed_state,
    occupation_projection_probability,
    transform_modes,
)

MAX_DISPLACEMENT = 10.0

# Half-wave-plate angles reproducing the Tsirelson violation for the
# ideal heralded pair: theta_A = 0, theta_A' = -pi/4 and theta_B' =
# -theta_B with theta_B = 3*pi/8 under the rotation convention used
# here (the assignment of 3*pi/8 to theta_B rather than theta_B' is
# fixed by requiring |CHSH| = 2*sqrt(2) on that state).
STANDARD_ANGLES: tuple[float, float, float, float] = (
    0.0,
    -math.pi / 4.0,
    3.0 * math.pi / 8.0,
    -3.0 * math.pi / 8.0,
)


@dataclass(frozen=True)
class DisplacementSettings:
    """Two alternative coherent displacements per node: (alpha, alpha') on
    the first memory and (beta, beta') on the second."""

    alpha: complex
    alpha_prime: complex
    beta: complex
    beta_prime: complex

    def __post_init__(self) -> None:
        for name in ("alpha", "alpha_prime", "beta", "beta_prime"):
            value = complex(getattr(self, name))
            if not (abs(value) <= MAX_DISPLACEMENT and math.isfinite(abs(value))):
                raise ValueError(f"|{name}| must be finite and <= {MAX_DISPLACEMENT}")
            object.__setattr__(self, name, value)

    def as_array(self, complex_displacements: bool = False) -> np.ndarray:
        values = (self.alpha, self.alpha_prime, self.beta, self.beta_prime)
        if complex_displacements:
            return np.array(
                [part for v in values for part in (v.real, v.imag)], dtype=float
            )
        return np.array([v.real for v in values], dtype=float)

    @staticmethod
    def from_array(x: np.ndarray, complex_displacements: bool = False
                   ) -> "DisplacementSettings":
        if complex_displacements:
            vals = [complex(x[2 * i], x[2 * i + 1]) for i in range(4)]
        else:
            vals = [complex(v) for v in x]
        return DisplacementSettings(*vals)


def _reduce_half_wave(theta: float) -> float:
    """Reduce an angle to [-pi/2, pi/2); the plate has period pi."""
    return (theta + math.pi / 2.0) % math.pi - math.pi / 2.0


@dataclass(frozen=True)
class AngleSettings:
    """Two alternative half-wave-plate angles per node, stored mod pi."""

    theta_a: float
    theta_a_prime: float
    theta_b: float
    theta_b_prime: float

    def __post_init__(self) -> None:
        for name in ("theta_a", "theta_a_prime", "theta_b", "theta_b_prime"):
            object.__setattr__(self, name, _reduce_half_wave(float(getattr(self, name))))


def standard_angles() -> AngleSettings:
    return AngleSettings(*STANDARD_ANGLES)


def _trace_or_raise(state: MixedState) -> float:
    tr = state.trace()
    if tr <= 0.0:
        raise ZeroTraceError("state has zero trace")
    return tr


def q_joint(state: MixedState, alpha: complex, beta: complex) -> float:
    """Joint no-count probability <alpha, beta| rho |alpha, beta> / Tr rho.

    Up to a constant this is the two-mode Husimi Q function of the
    normalized state.
    """
    if state.mode_count != 2:
        raise ValueError(f"joint Q needs a 2-mode state, got {state.mode_count}")
    tr = _trace_or_raise(state)
    total = 0.0
    for branch in state.branches:
        total += branch.weight * abs(coherent_overlap(branch, (alpha, beta))) ** 2
    return total / tr


def q_marginal(state: MixedState, alpha: complex, node: str) -> float:
    """Marginal no-count probability for one memory, the other traced out."""
    if state.mode_count != 2:
        raise ValueError(f"marginal Q needs a 2-mode state, got {state.mode_count}")
    if node not in ("a1", "a2"):
        raise ValueError(f"node must be 'a1' or 'a2', got {node!r}")
    keep = 0 if node == "a1" else 1
    other = 1 - keep
    tr = _trace_or_raise(state)
    prefactor = math.exp(-abs(alpha) ** 2)
    a_conj = complex(alpha).conjugate()
    total = 0.0
    for branch in state.branches:
        # group amplitudes by the traced mode's occupation; each group
        # contributes |sum_m A(m) conj(alpha)^m / sqrt(m!)|^2
        partial: dict[int, complex] = {}
        for occ, amp in branch.amplitudes.items():
            mk = occ[keep]
            term = amp * a_conj**mk / math.sqrt(math.factorial(mk))
            partial[occ[other]] = partial.get(occ[other], 0.0) + term
        total += branch.weight * sum(abs(v) ** 2 for v in partial.values())
    return prefactor * total / tr


def ch_value(state: MixedState, settings: DisplacementSettings) -> float:
    """Clauser-Horne combination of joint and marginal no-count probabilities.

    CH = Q(a,b) + Q(a',b) + Q(a,b') - Q(a',b') - Q_1(a) - Q_2(b);
    local hidden variable models obey -1 <= CH <= 0.
    """
    a, ap = settings.alpha, settings.alpha_prime
    b, bp = settings.beta, settings.beta_prime
    return (
        q_joint(state, a, b)
        + q_joint(state, ap, b)
        + q_joint(state, a, bp)
        - q_joint(state, ap, bp)
        - q_marginal(state, a, "a1")
        - q_marginal(state, b, "a2")
    )


def _half_wave_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [s, -c]])


def rotate_polarization(state: MixedState, theta_a: float, theta_b: float) -> MixedState:
    """Rotate the polarization basis at each node of a four-mode state.

    Node A mixes modes (a1, a2) and node B mixes (a3, a4) through the
    half-wave-plate map a1 -> a1 cos t + a2 sin t, a2 -> a1 sin t -
    a2 cos t, which is its own inverse.  The trace is preserved exactly.
    """
    if state.mode_count != 4:
        raise ValueError(f"polarization rotation needs 4 modes, got {state.mode_count}")
    v = np.zeros((4, 4))
    v[:2, :2] = _half_wave_matrix(theta_a)
    v[2:, 2:] = _half_wave_matrix(theta_b)
    branches = [transform_modes(b, v) for b in state.branches]
    return mixed_state(state.mode_count, branches, state.scale_exponents)


# Detector pairs: detectors 1, 2 monitor modes a1, a2 (node A) and
# detectors 3, 4 monitor a3, a4 (node B).
_PAIR_MODES = {"13": (0, 2), "14": (0, 3), "23": (1, 2), "24": (1, 3)}


def coincidence_probability(state: MixedState, pair: str) -> float:
    """Probability of one click at each node, at the given detector pair.

    Binary detectors: the clicked mode at each node has at least one
    photon and the sibling mode exactly zero.  Inconclusive events
    (zero or two clicks at a node) are excluded from the numerator but
    kept in the normalization.
    """
    if state.mode_count != 4:
        raise ValueError(f"coincidences need a 4-mode state, got {state.mode_count}")
    if pair not in _PAIR_MODES:
        raise ValueError(f"pair must be one of {sorted(_PAIR_MODES)}, got {pair!r}")
    tr = _trace_or_raise(state)
    i, j = _PAIR_MODES[pair]
    sibling = {0: 1, 1: 0, 2: 3, 3: 2}

    def clicked(occ) -> bool:
        return (
            occ[i] >= 1
            and occ[j] >= 1
            and occ[sibling[i]] == 0
            and occ[sibling[j]] == 0
        )

    return float(occupation_projection_probability(state, clicked)) / tr


def correlation(state: MixedState, theta_a: float, theta_b: float) -> float:
    """Polarization correlation J = P13 - P14 - P23 + P24 at the given angles."""
    rotated = rotate_polarization(state, theta_a, theta_b)
    return (
        coincidence_probability(rotated, "13")
        - coincidence_probability(rotated, "14")
        - coincidence_probability(rotated, "23")
        + coincidence_probability(rotated, "24")
    )


def chsh_value(state: MixedState, settings: AngleSettings) -> float:
    """CHSH combination J(a,b) + J(a',b) + J(a,b') - J(a',b')."""
    return (
        correlation(state, settings.theta_a, settings.theta_b)
        + correlation(state, settings.theta_a_prime, settings.theta_b)
        + correlation(state, settings.theta_a, settings.theta_b_prime)
        - correlation(state, settings.theta_a_prime, settings.theta_b_prime)
    )
