"""Sparse Fock-space algebra for a fixed number of bosonic modes.

States are held as weighted lists of unnormalized pure branches.  Each
branch is a sparse map from occupation-number tuples to complex
amplitudes; the physical probability carried by a branch is its weight
times its squared norm.  Mixtures of such branches represent every state
this package needs exactly, because the photon-source inputs are
diagonal in the Fock product basis and every map applied afterwards
sends pure states to pure states.  Memory then scales with the number of
branches and their sparsity instead of the squared Fock-space dimension.

All values are immutable after construction and all operations are pure
functions, so states can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

# Occupation numbers of the M modes, e.g. (1, 0) for one photon in the
# first of two modes.
FockVector = tuple[int, ...]

# Amplitudes below this magnitude are dropped after each linear step;
# keeps maps sparse without affecting 1e-12-level assertions.
AMPLITUDE_PRUNE_TOL = 1e-15

UNITARITY_TOL = 1e-12


class DimensionError(ValueError):
    """Mode counts of two objects do not match."""


class ZeroTraceError(ValueError):
    """The state has no probability mass; the requested quantity is undefined."""


def fock_vector(occupations: Sequence[int], n_max: int | None = None) -> FockVector:
    """Validate occupation numbers and return them as a tuple.

    Entries must be non-negative integers; if ``n_max`` is given, the
    total photon number must not exceed it.
    """
    occ = tuple(int(n) for n in occupations)
    if any(n < 0 for n in occ):
        raise ValueError(f"negative occupation in {occ}")
    if n_max is not None and sum(occ) > n_max:
        raise ValueError(f"total photon number {sum(occ)} exceeds cap {n_max}")
    return occ


def _pruned(amplitudes: Mapping[FockVector, complex]) -> dict[FockVector, complex]:
    return {m: a for m, a in amplitudes.items() if abs(a) > AMPLITUDE_PRUNE_TOL}


@dataclass(frozen=True)
class PureBranch:
    """One unnormalized pure component of a mixture.

    ``weight`` is the classical probability mass attached to the branch;
    ``amplitudes`` maps occupation tuples to complex amplitudes.  The
    branch is deliberately not normalized: weight * norm_sq() is the
    physical probability it contributes.
    """

    weight: float
    amplitudes: dict[FockVector, complex]

    def __post_init__(self) -> None:
        if self.weight < 0:
            raise ValueError(f"branch weight must be >= 0, got {self.weight}")
        lengths = {len(m) for m in self.amplitudes}
        if len(lengths) > 1:
            raise DimensionError(f"mixed mode counts in one branch: {sorted(lengths)}")

    @property
    def mode_count(self) -> int:
        for m in self.amplitudes:
            return len(m)
        return 0

    def norm_sq(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def probability(self) -> float:
        return self.weight * self.norm_sq()


def pure_branch(weight: float, amplitudes: Mapping[FockVector, complex]) -> PureBranch:
    """Build a branch, pruning negligible amplitudes."""
    return PureBranch(weight, _pruned(dict(amplitudes)))


def basis_branch(occupations: Sequence[int], weight: float = 1.0) -> PureBranch:
    """Branch holding a single Fock basis ket with unit amplitude."""
    return PureBranch(weight, {fock_vector(occupations): 1.0 + 0.0j})


@dataclass(frozen=True)
class MixedState:
    """Unnormalized mixture of pure branches over ``mode_count`` modes.

    ``scale_exponents`` records scale factors that have been pulled out
    of the branch weights symbolically, as a map from factor name to
    exponent.  The subtraction stage uses it to factor out the heralding
    efficiency: a state with ``scale_exponents == {"zeta": K}`` stands
    for zeta**K times the state actually stored.
    """

    mode_count: int
    branches: tuple[PureBranch, ...]
    scale_exponents: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for b in self.branches:
            if b.amplitudes and b.mode_count != self.mode_count:
                raise DimensionError(
                    f"branch has {b.mode_count} modes, state has {self.mode_count}"
                )

    def trace(self) -> float:
        """Sum of weight * norm_sq over branches (>= 0)."""
        return float(sum(b.probability() for b in self.branches))


def mixed_state(
    mode_count: int,
    branches: Sequence[PureBranch],
    scale_exponents: Mapping[str, int] | None = None,
) -> MixedState:
    """Assemble a MixedState, dropping branches with no probability."""
    kept = tuple(b for b in branches if b.amplitudes and b.weight > 0.0)
    return MixedState(mode_count, kept, dict(scale_exponents or {}))


@dataclass(frozen=True)
class UnitaryMatrix:
    """M x M complex matrix checked for unitarity at construction."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        u = np.asarray(self.entries, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {u.shape}")
        defect = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0])))
        if defect > UNITARITY_TOL:
            raise ValueError(f"matrix is not unitary: defect {defect:.3e}")
        u.setflags(write=False)
        object.__setattr__(self, "entries", u)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def row(self, i: int) -> np.ndarray:
        return self.entries[i]


def annihilate_combination(branch: PureBranch, coeffs: Sequence[complex]) -> PureBranch:
    """Apply the annihilation operator sum_j coeffs[j] * a_j to a branch.

    Each amplitude A(m) contributes coeffs[j] * sqrt(m_j) * A(m) at the
    occupation tuple with m_j lowered by one.  The weight is unchanged;
    applying this to the vacuum yields an empty amplitude map.
    """
    out: dict[FockVector, complex] = {}
    for m, amp in branch.amplitudes.items():
        if len(m) != len(coeffs):
            raise DimensionError(f"coeffs length {len(coeffs)} != mode count {len(m)}")
        for j, c in enumerate(coeffs):
            nj = m[j]
            if nj == 0 or c == 0:
                continue
            lowered = m[:j] + (nj - 1,) + m[j + 1 :]
            out[lowered] = out.get(lowered, 0.0) + c * math.sqrt(nj) * amp
    return PureBranch(branch.weight, _pruned(out))


def apply_diagonal_loss(branch: PureBranch, amplitude_factor: float) -> PureBranch:
    """Multiply each amplitude at total photon number N by factor**N.

    ``amplitude_factor`` must lie in (0, 1]; a factor of 1 is the
    identity and the vacuum component is never changed.
    """
    if not 0.0 < amplitude_factor <= 1.0:
        raise ValueError(f"amplitude factor must be in (0, 1], got {amplitude_factor}")
    if amplitude_factor == 1.0:
        return branch
    out = {m: amp * amplitude_factor ** sum(m) for m, amp in branch.amplitudes.items()}
    return PureBranch(branch.weight, _pruned(out))


def coherent_overlap(branch: PureBranch, alphas: Sequence[complex]) -> complex:
    """Overlap <alpha_1 ... alpha_M | branch> with a coherent product state.

    Uses <alpha|m> = exp(-|alpha|^2/2) * conj(alpha)^m / sqrt(m!) per
    mode; with all alphas zero this returns exactly the vacuum amplitude.
    """
    prefactor = math.exp(-0.5 * sum(abs(a) ** 2 for a in alphas))
    conj = [complex(a).conjugate() for a in alphas]
    total = 0.0 + 0.0j
    for m, amp in branch.amplitudes.items():
        if len(m) != len(alphas):
            raise DimensionError(f"alphas length {len(alphas)} != mode count {len(m)}")
        term = amp
        for a_conj, mi in zip(conj, m):
            if mi:
                term *= a_conj**mi / math.sqrt(math.factorial(mi))
            # mi == 0 contributes a factor of 1 even when alpha == 0
        total += term
    return prefactor * total


def occupation_projection_probability(
    state: MixedState, selector: Callable[[FockVector], bool]
) -> float:
    """Probability mass on basis states whose occupations satisfy ``selector``.

    Returns sum over branches of weight * sum_{m : selector(m)} |A(m)|^2,
    which is bounded by the state trace.
    """
    total = 0.0
    for b in state.branches:
        acc = 0.0
        for m, amp in b.amplitudes.items():
            if selector(m):
                acc += abs(amp) ** 2
        total += b.weight * acc
    return total


def transform_modes(branch: PureBranch, matrix: np.ndarray) -> PureBranch:
    """Apply the passive linear-optics unitary with mode map a_i -> sum_j V[i,j] a_j.

    The induced action on kets replaces each creation operator adag_i by
    sum_j V[j,i] adag_j, so every basis ket is re-expanded through its
    creation-operator monomial.  Total photon number is conserved, hence
    the branch norm (and any state trace) is preserved exactly.
    """
    v = np.asarray(matrix, dtype=complex)
    out: dict[FockVector, complex] = {}
    for m, amp in branch.amplitudes.items():
        if len(m) != v.shape[0]:
            raise DimensionError(f"matrix dim {v.shape[0]} != mode count {len(m)}")
        # Start from the vacuum with the amplitude divided by the source
        # normalization, then apply one rotated creation operator per photon.
        norm = math.prod(math.sqrt(math.factorial(n)) for n in m)
        ket: dict[FockVector, complex] = {(0,) * len(m): amp / norm}
        for i, ni in enumerate(m):
            col = v[:, i]
            for _ in range(ni):
                nxt: dict[FockVector, complex] = {}
                for occ, a in ket.items():
                    for j, vji in enumerate(col):
                        if vji == 0:
                            continue
                        raised = occ[:j] + (occ[j] + 1,) + occ[j + 1 :]
                        nxt[raised] = nxt.get(raised, 0.0) + vji * math.sqrt(occ[j] + 1) * a
                ket = nxt
        for occ, a in ket.items():
            out[occ] = out.get(occ, 0.0) + a
    return PureBranch(branch.weight, _pruned(out))
