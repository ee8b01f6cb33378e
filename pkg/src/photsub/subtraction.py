"""Heralded conditional states from interferometric photon subtraction.

The map implemented here sends a product of photon-source mixtures
through an array of tapping beam splitters (power transmission T per
mode), a linear-optics circuit U at the intermediary site, and an array
of heralding detectors producing a click pattern k.  The unnormalized
conditional state of the retained (memory) modes is an exact finite
mixture: for every Fock product at the input and every multi-index n of
subtracted photons there is one pure branch, with the click pattern
weighting each branch by the detector response.

Three detector responses are supported: photon-number-resolving with
efficiency zeta, binary (click / no click) with efficiency zeta, and the
leading order of the binary response for zeta << 1.  In the latter case
the overall factor zeta**K (K = number of clicks) is factored out
symbolically and recorded on the state, so downstream rescaled
quantities can cancel it exactly instead of dividing small numbers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .fock import (
    FockVector,
    MixedState,
    PureBranch,
    UnitaryMatrix,
    annihilate_combination,
    apply_diagonal_loss,
    basis_branch,
    mixed_state,
)
from .sources import PhotonStatistics

PNR = "pnr"
BINARY = "binary"
BINARY_LOW_ZETA = "binary_low_zeta"


@dataclass(frozen=True)
class DetectorModel:
    """Detector response used for the heralding stage.

    ``kind`` is one of "pnr", "binary" or "binary_low_zeta".  The
    efficiency ``zeta`` also absorbs uniform losses between the nodes and
    the intermediary site; the low-zeta model carries no zeta because the
    zeta**K factor is kept symbolic.
    """

    kind: str
    zeta: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (PNR, BINARY, BINARY_LOW_ZETA):
            raise ValueError(f"unknown detector kind {self.kind!r}")
        if self.kind == BINARY_LOW_ZETA:
            if self.zeta is not None:
                raise ValueError("binary_low_zeta carries no zeta; it is factored out")
        else:
            if self.zeta is None or not 0.0 < self.zeta <= 1.0:
                raise ValueError(f"zeta must be in (0, 1], got {self.zeta}")


def pnr_detector(zeta: float) -> DetectorModel:
    return DetectorModel(PNR, zeta)


def binary_detector(zeta: float) -> DetectorModel:
    return DetectorModel(BINARY, zeta)


def low_zeta_detector() -> DetectorModel:
    return DetectorModel(BINARY_LOW_ZETA)


@dataclass(frozen=True)
class SchemeSpec:
    """Full description of one subtraction setup.

    Mode count, circuit unitary, per-mode tap transmission T (strictly
    inside (0, 1); the T -> 0 limit has a dedicated code path), detector
    model and heralding click pattern.
    """

    mode_count: int
    unitary: UnitaryMatrix
    transmission: float
    detector: DetectorModel
    clicks: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.unitary.dim != self.mode_count:
            raise ValueError(
                f"unitary is {self.unitary.dim}x{self.unitary.dim}, "
                f"scheme has {self.mode_count} modes"
            )
        if not 0.0 < self.transmission < 1.0:
            raise ValueError(f"transmission must be in (0, 1), got {self.transmission}")
        if len(self.clicks) != self.mode_count:
            raise ValueError("click pattern length must equal mode count")
        _validate_clicks(self.detector, self.clicks)


def _validate_clicks(model: DetectorModel, k: Sequence[int]) -> None:
    if any(int(ki) != ki or ki < 0 for ki in k):
        raise ValueError(f"click counts must be non-negative integers, got {tuple(k)}")
    if model.kind in (BINARY, BINARY_LOW_ZETA) and any(ki not in (0, 1) for ki in k):
        raise ValueError(f"binary detectors produce clicks in {{0, 1}}, got {tuple(k)}")


class ClickWeight(NamedTuple):
    """Conditional click probability, with any symbolic zeta power split off.

    The physical probability is value * zeta**zeta_power; zeta_power is
    nonzero only for the binary_low_zeta model.
    """

    value: float
    zeta_power: int


def click_probability(
    model: DetectorModel, n: Sequence[int], k: Sequence[int]
) -> ClickWeight:
    """Probability of click pattern k given n subtracted photons per mode."""
    if len(n) != len(k):
        raise ValueError(f"n has length {len(n)}, k has length {len(k)}")
    _validate_clicks(model, k)
    if model.kind == PNR:
        value = 1.0
        for ni, ki in zip(n, k):
            if ki > ni:
                return ClickWeight(0.0, 0)
            value *= (
                math.comb(ni, ki)
                * model.zeta**ki
                * (1.0 - model.zeta) ** (ni - ki)
            )
        return ClickWeight(value, 0)
    if model.kind == BINARY:
        value = 1.0
        for ni, ki in zip(n, k):
            no_click = (1.0 - model.zeta) ** ni
            value *= 1.0 - no_click if ki else no_click
        return ClickWeight(value, 0)
    # binary_low_zeta: k_i = 0 contributes 1, k_i = 1 contributes n_i
    value = 1.0
    for ni, ki in zip(n, k):
        if ki:
            value *= ni
    return ClickWeight(value, int(sum(k)))


def _input_products(sources: Sequence[PhotonStatistics]):
    """Yield (m, prob) over the product support of the source statistics."""
    supports = [
        [(m, p) for m, p in enumerate(s.probs) if p > 0.0] for s in sources
    ]
    for combo in itertools.product(*supports):
        m = tuple(c[0] for c in combo)
        prob = math.prod(c[1] for c in combo)
        yield m, prob


def _subtraction_indices(mode_count: int, total: int):
    """All n in N^mode_count with sum(n) == total, lexicographic order."""
    if mode_count == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _subtraction_indices(mode_count - 1, total - first):
            yield (first,) + rest


def _subtracted_ket(m: FockVector, n: Sequence[int], unitary: UnitaryMatrix) -> PureBranch:
    """Apply prod_i b_i^{n_i} to the basis ket |m>, with b_i = sum_j U[i,j] a_j."""
    branch = basis_branch(m)
    for i, ni in enumerate(n):
        row = unitary.row(i)
        for _ in range(ni):
            branch = annihilate_combination(branch, row)
            if not branch.amplitudes:
                return branch
    return branch


def conditional_state(
    sources: Sequence[PhotonStatistics], spec: SchemeSpec
) -> MixedState:
    """Unnormalized memory state heralded by the click pattern of ``spec``.

    One branch per input Fock product m and subtraction multi-index n
    with sum(n) <= sum(m): the branch weight is the input probability
    times the click probability times prod_i T^{n_i}/n_i!, and its
    amplitudes are the loss-damped subtracted ket.  A click pattern that
    no n can produce yields a zero-trace state rather than an error.
    """
    if len(sources) != spec.mode_count:
        raise ValueError(f"need {spec.mode_count} sources, got {len(sources)}")
    t = spec.transmission
    keep_amp = math.sqrt(1.0 - t)
    branches: list[PureBranch] = []
    zeta_power = 0
    for m, prob in _input_products(sources):
        for total in range(sum(m) + 1):
            for n in _subtraction_indices(spec.mode_count, total):
                click = click_probability(spec.detector, n, spec.clicks)
                if click.value == 0.0:
                    continue
                zeta_power = click.zeta_power
                weight = prob * click.value
                for ni in n:
                    weight *= t**ni / math.factorial(ni)
                ket = _subtracted_ket(m, n, spec.unitary)
                if not ket.amplitudes:
                    continue
                ket = apply_diagonal_loss(ket, keep_amp)
                branches.append(PureBranch(weight, ket.amplitudes))
    scale = {"zeta": zeta_power} if spec.detector.kind == BINARY_LOW_ZETA else {}
    return mixed_state(spec.mode_count, branches, scale)


def conditional_state_small_t(
    sources: Sequence[PhotonStatistics], spec: SchemeSpec
) -> MixedState:
    """Leading order of the conditional state for T -> 0.

    Keeps only subtraction multi-indices with the smallest total photon
    number that gives the click pattern a nonzero probability, and drops
    the (sqrt(1-T))^N damping of the retained modes.  Valid when higher
    input photon numbers contribute little; that judgement is the
    caller's (no quantitative cutoff is enforced here).
    """
    if len(sources) != spec.mode_count:
        raise ValueError(f"need {spec.mode_count} sources, got {len(sources)}")
    t = spec.transmission
    inputs = list(_input_products(sources))
    max_total = max((sum(m) for m, _ in inputs), default=0)
    zeta_power = 0
    for total in range(max_total + 1):
        branches: list[PureBranch] = []
        for n in _subtraction_indices(spec.mode_count, total):
            click = click_probability(spec.detector, n, spec.clicks)
            if click.value == 0.0:
                continue
            zeta_power = click.zeta_power
            base = click.value
            for ni in n:
                base *= t**ni / math.factorial(ni)
            for m, prob in inputs:
                if sum(m) < total:
                    continue
                ket = _subtracted_ket(m, n, spec.unitary)
                if not ket.amplitudes:
                    continue
                branches.append(PureBranch(prob * base, ket.amplitudes))
        scale = {"zeta": zeta_power} if spec.detector.kind == BINARY_LOW_ZETA else {}
        state = mixed_state(spec.mode_count, branches, scale)
        if state.trace() > 0.0:
            return state
    return mixed_state(
        spec.mode_count,
        [],
        {"zeta": sum(spec.clicks)} if spec.detector.kind == BINARY_LOW_ZETA else {},
    )


class ProjectedBlockEvaluator:
    """Matrix elements <u| rho_out(T) |v> on a fixed set of target kets.

    Separates the T dependence of the conditional-state map from
    everything else: for each subtraction multi-index n the overlap of
    the subtracted input with the target kets is precomputed once, after
    which the block at any transmission T costs a few multiply-adds per
    total subtraction number.  Produces bit-identical results to
    projecting ``conditional_state`` (same branch enumeration order), so
    parameter sweeps can scan T cheaply without a second physics path.
    """

    def __init__(
        self,
        sources: Sequence[PhotonStatistics],
        unitary: UnitaryMatrix,
        detector: DetectorModel,
        clicks: Sequence[int],
        target_kets: Sequence[FockVector],
    ) -> None:
        mode_count = unitary.dim
        if len(sources) != mode_count:
            raise ValueError(f"need {mode_count} sources, got {len(sources)}")
        _validate_clicks(detector, clicks)
        self.mode_count = mode_count
        self.detector = detector
        self.clicks = tuple(clicks)
        self.target_kets = [tuple(u) for u in target_kets]
        self.zeta_power = (
            int(sum(clicks)) if detector.kind == BINARY_LOW_ZETA else 0
        )
        self._target_photons = np.array([sum(u) for u in self.target_kets])
        mmax = [s.mmax for s in sources]
        probs = [s.probs for s in sources]
        max_total = sum(mmax)
        nt = len(self.target_kets)
        # blocks[s][u, v] collects sum over n with sum(n) == s of
        # w_n * sum_m P(m) <u|b^n|m><v|b^n|m>*
        blocks = np.zeros((max_total + 1, nt, nt), dtype=complex)
        u_conj = unitary.entries.conj()
        for total in range(max_total + 1):
            for n in _subtraction_indices(mode_count, total):
                click = click_probability(detector, n, clicks)
                if click.value == 0.0:
                    continue
                w_n = click.value
                for ni in n:
                    w_n /= math.factorial(ni)
                overlaps = [
                    self._adjoint_cascade(u, n, u_conj, mmax) for u in self.target_kets
                ]
                for a in range(nt):
                    wa = overlaps[a]
                    for b in range(a, nt):
                        wb = overlaps[b]
                        acc = 0.0 + 0.0j
                        for m, amp_a in wa.items():
                            amp_b = wb.get(m)
                            if amp_b is None:
                                continue
                            pm = 1.0
                            for j, mj in enumerate(m):
                                pm *= probs[j][mj]
                                if pm == 0.0:
                                    break
                            if pm == 0.0:
                                continue
                            # <u|b^n|m> = conj(w_u[m]), so the (u, v)
                            # element is conj(w_u[m]) * w_v[m] * P(m)
                            acc += pm * amp_a.conjugate() * amp_b
                        blocks[total, a, b] += w_n * acc
                        if b != a:
                            blocks[total, b, a] += w_n * acc.conjugate()
        self._blocks = blocks
        self._max_total = max_total

    @staticmethod
    def _adjoint_cascade(
        u: FockVector, n: Sequence[int], u_conj: np.ndarray, mmax: Sequence[int]
    ) -> dict[FockVector, complex]:
        """Expand prod_i (b_i^dagger)^{n_i} |u>, pruned to the source truncations."""
        ket: dict[FockVector, complex] = {tuple(u): 1.0 + 0.0j}
        for i, ni in enumerate(n):
            row = u_conj[i]
            for _ in range(ni):
                nxt: dict[FockVector, complex] = {}
                for occ, amp in ket.items():
                    for j, coeff in enumerate(row):
                        if coeff == 0 or occ[j] >= mmax[j]:
                            continue
                        raised = occ[:j] + (occ[j] + 1,) + occ[j + 1 :]
                        nxt[raised] = nxt.get(raised, 0.0) + coeff * math.sqrt(occ[j] + 1) * amp
                ket = nxt
                if not ket:
                    return ket
        return ket

    def block(self, transmission: float) -> np.ndarray:
        """The target-ket block of the conditional state at the given T."""
        if not 0.0 < transmission < 1.0:
            raise ValueError(f"transmission must be in (0, 1), got {transmission}")
        t_powers = transmission ** np.arange(self._max_total + 1)
        out = np.tensordot(t_powers, self._blocks, axes=1)
        damp = np.sqrt(1.0 - transmission) ** self._target_photons
        return out * np.outer(damp, damp)
