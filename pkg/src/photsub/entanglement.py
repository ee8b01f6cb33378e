"""Qubit-subspace projections and two-qubit entanglement quantification.

The memory states produced by the subtraction stage live in a truncated
multimode Fock space; the entanglement of interest sits in a two-qubit
subspace (zero/one photon per memory for the one-photon scheme, the
single-photon polarization sector per node for the two-photon scheme).
This module projects onto those subspaces and evaluates the standard
two-qubit toolbox: the partial-transpose test, concurrence and
entanglement of formation, the success-probability-weighted rescaled
entanglement, and the closed-form threshold criteria on the photon
statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import FockVector, MixedState, ZeroTraceError
from .schemes import (
    HERALDING_MULTIPLICITY,
    ZETA_POWER,
    SchemeKind,
    general_t_condition_sides,
)
from .sources import PhotonStatistics

HERMITICITY_TOL = 1e-12
NEGATIVITY_TOL = 1e-12
TRACE_GUARD = 1e-15

# Qubit basis kets in mode occupations.  One-photon scheme: |i j> with
# i, j photons in the two memories.  Two-photon scheme: |h>=|10>,
# |v>=|01> per node, modes ordered (a1, a2, a3, a4).
ONE_PHOTON_BASIS: tuple[FockVector, ...] = ((0, 0), (0, 1), (1, 0), (1, 1))
TWO_PHOTON_BASIS: tuple[FockVector, ...] = (
    (1, 0, 1, 0),  # |hh>
    (1, 0, 0, 1),  # |hv>
    (0, 1, 1, 0),  # |vh>
    (0, 1, 0, 1),  # |vv>
)

BASIS_TAG_PHOTON_NUMBER = "photon_number"
BASIS_TAG_POLARIZATION = "polarization"


@dataclass(frozen=True)
class TwoQubitDM:
    """Unnormalized 4x4 Hermitian matrix in a fixed qubit product basis.

    ``basis_tag`` names the basis ("photon_number" or "polarization");
    ``scale_exponents`` is inherited from the source state so rescaled
    quantities can cancel symbolic efficiency factors.
    """

    matrix: np.ndarray
    basis_tag: str
    scale_exponents: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL * scale:
            raise ValueError("matrix is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def normalized(self) -> np.ndarray:
        tr = self.trace()
        if tr <= TRACE_GUARD:
            raise ZeroTraceError("cannot normalize a zero-trace matrix")
        return self.matrix / tr

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


def _project(state: MixedState, basis: tuple[FockVector, ...]) -> np.ndarray:
    out = np.zeros((4, 4), dtype=complex)
    for branch in state.branches:
        vec = np.array([branch.amplitudes.get(u, 0.0) for u in basis], dtype=complex)
        if np.any(vec):
            out += branch.weight * np.outer(vec, vec.conj())
    return out


def project_one_photon_qubits(state: MixedState) -> TwoQubitDM:
    """Project onto the zero/one-photon sector of both memories.

    Basis order |00>, |01>, |10>, |11>.
    """
    if state.mode_count != 2:
        raise ValueError(f"one-photon projection needs 2 modes, got {state.mode_count}")
    return TwoQubitDM(
        _project(state, ONE_PHOTON_BASIS),
        BASIS_TAG_PHOTON_NUMBER,
        dict(state.scale_exponents),
    )


def project_two_photon_qubits(state: MixedState) -> TwoQubitDM:
    """Project onto the one-photon-per-node polarization sector.

    Basis order |hh>, |hv>, |vh>, |vv> with |h> = |10> and |v> = |01>
    within each node's mode pair.
    """
    if state.mode_count != 4:
        raise ValueError(f"two-photon projection needs 4 modes, got {state.mode_count}")
    return TwoQubitDM(
        _project(state, TWO_PHOTON_BASIS),
        BASIS_TAG_POLARIZATION,
        dict(state.scale_exponents),
    )


def partial_transpose(matrix: np.ndarray) -> np.ndarray:
    """Transpose the second qubit of a 4x4 two-qubit matrix."""
    m = np.asarray(matrix).reshape(2, 2, 2, 2)
    return m.transpose(0, 3, 2, 1).reshape(4, 4)


def ppt_entangled(dm: TwoQubitDM) -> bool:
    """True iff the normalized state fails the positive-partial-transpose test.

    The exact boundary (smallest partial-transpose eigenvalue equal to
    zero) reports False: two-qubit states on the PPT boundary are
    separable.
    """
    rho = dm.normalized()
    eigs = np.linalg.eigvalsh(partial_transpose(rho))
    return bool(eigs[0] < -NEGATIVITY_TOL)


_SY_SY = np.array(
    [
        [0, 0, 0, -1],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [-1, 0, 0, 0],
    ],
    dtype=complex,
)


def concurrence(dm: TwoQubitDM) -> float:
    """Wootters concurrence of the normalized state, in [0, 1].

    Computed from the eigenvalues of rho (sy x sy) rho* (sy x sy):
    C = max(0, l1 - l2 - l3 - l4) with l_i the decreasingly sorted
    square roots.
    """
    rho = dm.normalized()
    r = rho @ _SY_SY @ rho.conj() @ _SY_SY
    eigs = np.linalg.eigvals(r)
    # spectrum is real and non-negative; clip numerical noise
    lams = np.sqrt(np.clip(np.real(eigs), 0.0, None))
    lams[::-1].sort()
    return float(max(0.0, lams[0] - lams[1] - lams[2] - lams[3]))


def binary_entropy(x: float) -> float:
    """H(x) = -x log2 x - (1-x) log2 (1-x), with the limits at 0 and 1 as 0."""
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def eof(dm: TwoQubitDM) -> float:
    """Entanglement of formation E_F = H((1 + sqrt(1 - C^2)) / 2)."""
    c = concurrence(dm)
    return binary_entropy(0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - c * c))))


def eof_from_concurrence(c: float) -> float:
    return binary_entropy(0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - c * c))))


def effective_eof(
    state: MixedState, kind: SchemeKind, zeta: float | None = None
) -> float:
    """Success-probability-weighted entanglement, rescaled by the efficiency.

    Multiplies the entanglement of formation of the normalized projected
    state by its unnormalized trace (carrying the full T dependence), the
    number of accepted heralding patterns (2 or 4), and the inverse of
    the heralding efficiency to the scheme's power (1 or 2).  On the
    low-efficiency path the efficiency factor was pulled out of the state
    symbolically and cancels exactly; for finite-efficiency states pass
    ``zeta`` explicitly.  A projected trace below the guard reports 0
    rather than normalizing noise.
    """
    project = (
        project_one_photon_qubits
        if kind is SchemeKind.ONE_PHOTON
        else project_two_photon_qubits
    )
    dm = project(state)
    tr = dm.trace()
    if tr <= TRACE_GUARD:
        return 0.0
    multiplicity = HERALDING_MULTIPLICITY[kind]
    power = ZETA_POWER[kind]
    factored = state.scale_exponents.get("zeta", 0)
    if factored:
        if factored != power:
            raise ValueError(
                f"state carries zeta^{factored} but the {kind.value} scheme "
                f"rescales by zeta^{power}"
            )
        scale = multiplicity
    elif zeta is not None:
        scale = multiplicity / zeta**power
    else:
        raise ValueError(
            "state has no factored efficiency; pass zeta for finite-efficiency states"
        )
    return scale * tr * eof(dm)


def threshold_small_t(stats: PhotonStatistics, kind: SchemeKind) -> bool:
    """Closed-form entanglement-generation criterion in the T -> 0 limit.

    One-photon scheme: p1^2 > 8 p0 p2.  Two-photon scheme:
    p1^3 > 5 p0 p1 p2 + 3 p0^2 p3.
    """
    p0, p1, p2, p3 = stats.p(0), stats.p(1), stats.p(2), stats.p(3)
    if kind is SchemeKind.ONE_PHOTON:
        return p1**2 > 8.0 * p0 * p2
    return p1**3 > 5.0 * p0 * p1 * p2 + 3.0 * p0**2 * p3


def threshold_general_t(stats: PhotonStatistics, transmission: float) -> bool:
    """Entanglement criterion of the one-photon scheme at arbitrary T.

    Only defined for sources emitting at most two photons.  Because the
    right-hand side is a polynomial in T with non-negative coefficients,
    the condition holding at some T implies it holds at every smaller T.
    """
    lhs, rhs = general_t_condition_sides(stats, transmission)
    return lhs > rhs
