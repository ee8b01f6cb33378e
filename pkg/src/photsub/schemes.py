"""Pre-wired subtraction circuits and their closed-form qubit elements.

Two setups are covered.  The one-photon scheme feeds two single-photon
sources into a balanced beam splitter and heralds on one click,
preparing a delocalized single photon between the two memory modes.  The
two-photon scheme feeds four sources (two per node, orthogonally
polarized) into a four-mode circuit and heralds on one click per node,
preparing polarization-entangled photon pairs without requiring phase
stability between the nodes.

The closed-form matrix elements implemented here hold in the regime of
low heralding efficiency (small T in addition for the two-photon case);
they serve as an independent cross-check of the generic engine.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .fock import UnitaryMatrix
from .sources import PhotonStatistics
from .subtraction import DetectorModel, SchemeSpec


class SchemeKind(enum.Enum):
    ONE_PHOTON = "one_photon"
    TWO_PHOTON = "two_photon"


# Accepted heralding click patterns per scheme: exactly one click for the
# one-photon scheme, one click per node for the two-photon scheme.
HERALDING_CLASSES: dict[SchemeKind, tuple[tuple[int, ...], ...]] = {
    SchemeKind.ONE_PHOTON: ((1, 0), (0, 1)),
    SchemeKind.TWO_PHOTON: ((1, 0, 1, 0), (0, 1, 0, 1), (1, 0, 0, 1), (0, 1, 1, 0)),
}

# Detector-count multiplicity and heralding-efficiency power per scheme:
# two click patterns and one detected photon for the one-photon scheme,
# four patterns and two detected photons for the two-photon scheme.
HERALDING_MULTIPLICITY = {SchemeKind.ONE_PHOTON: 2, SchemeKind.TWO_PHOTON: 4}
ZETA_POWER = {SchemeKind.ONE_PHOTON: 1, SchemeKind.TWO_PHOTON: 2}

ONE_PHOTON_UNITARY = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)

TWO_PHOTON_UNITARY = 0.5 * np.array(
    [
        [1.0, 1.0, 1.0, -1.0],
        [1.0, 1.0, -1.0, 1.0],
        [1.0, -1.0, 1.0, 1.0],
        [-1.0, 1.0, 1.0, 1.0],
    ]
)


def mode_count(kind: SchemeKind) -> int:
    return 2 if kind is SchemeKind.ONE_PHOTON else 4


def _checked_clicks(kind: SchemeKind, clicks: tuple[int, ...] | None) -> tuple[int, ...]:
    if clicks is None:
        return HERALDING_CLASSES[kind][0]
    clicks = tuple(int(c) for c in clicks)
    if clicks not in HERALDING_CLASSES[kind]:
        raise ValueError(
            f"click pattern {clicks} is not a heralding class of {kind.value}; "
            f"accepted: {HERALDING_CLASSES[kind]}"
        )
    return clicks


def build_one_photon_spec(
    transmission: float,
    detector: DetectorModel,
    clicks: tuple[int, ...] | None = None,
) -> SchemeSpec:
    """Two sources interfered on a balanced beam splitter, one click heralds."""
    return SchemeSpec(
        mode_count=2,
        unitary=UnitaryMatrix(ONE_PHOTON_UNITARY),
        transmission=transmission,
        detector=detector,
        clicks=_checked_clicks(SchemeKind.ONE_PHOTON, clicks),
    )


def build_two_photon_spec(
    transmission: float,
    detector: DetectorModel,
    clicks: tuple[int, ...] | None = None,
) -> SchemeSpec:
    """Four sources through the two-photon interference circuit.

    Modes 1, 2 belong to node A and modes 3, 4 to node B; odd modes are
    horizontally and even modes vertically polarized.  Heralding retains
    events with exactly one click per node.
    """
    return SchemeSpec(
        mode_count=4,
        unitary=UnitaryMatrix(TWO_PHOTON_UNITARY),
        transmission=transmission,
        detector=detector,
        clicks=_checked_clicks(SchemeKind.TWO_PHOTON, clicks),
    )


def build_spec(
    kind: SchemeKind,
    transmission: float,
    detector: DetectorModel,
    clicks: tuple[int, ...] | None = None,
) -> SchemeSpec:
    if kind is SchemeKind.ONE_PHOTON:
        return build_one_photon_spec(transmission, detector, clicks)
    return build_two_photon_spec(transmission, detector, clicks)


@dataclass(frozen=True)
class OnePhotonElements:
    """Nonzero elements of the projected one-photon qubit matrix.

    Basis order |00>, |01>, |10>, |11>; ``c`` couples |01> and |10>.  The
    heralding efficiency is kept symbolic (set to 1, power recorded).
    """

    rho00: float
    rho01: float
    rho10: float
    rho11: float
    c: float
    zeta_power: int = 1

    def matrix(self) -> np.ndarray:
        out = np.zeros((4, 4), dtype=complex)
        out[0, 0] = self.rho00
        out[1, 1] = self.rho01
        out[2, 2] = self.rho10
        out[3, 3] = self.rho11
        out[1, 2] = self.c
        out[2, 1] = np.conjugate(self.c)
        return out


def analytic_one_photon_elements(
    stats: PhotonStatistics, transmission: float, sign: int = +1
) -> OnePhotonElements:
    """Leading-order projected elements of the one-photon scheme for T << 1.

    rho00 = T p0 p1, rho01 = rho10 = T (p0 p2 + p1^2 / 2),
    rho11 = 2 T p1 p2, c = +- T p1^2 / 2, all times the symbolic
    heralding efficiency.  The sign of ``c`` follows the detector that
    clicked (+1 for the first, -1 for the second).
    """
    if sign not in (+1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    p0, p1, p2 = stats.p(0), stats.p(1), stats.p(2)
    t = transmission
    return OnePhotonElements(
        rho00=t * p0 * p1,
        rho01=t * (p0 * p2 + p1**2 / 2.0),
        rho10=t * (p0 * p2 + p1**2 / 2.0),
        rho11=2.0 * t * p1 * p2,
        c=sign * 0.5 * t * p1**2,
    )


@dataclass(frozen=True)
class TwoPhotonElements:
    """Nonzero elements of the projected two-photon qubit matrix.

    Basis order |hh>, |hv>, |vh>, |vv>; ``c`` couples |hh> and |vv>.
    Heralding efficiency symbolic (power two for the two required
    detections).
    """

    rho_hh: float
    rho_hv: float
    rho_vh: float
    rho_vv: float
    c: float
    zeta_power: int = 2

    def matrix(self) -> np.ndarray:
        out = np.zeros((4, 4), dtype=complex)
        out[0, 0] = self.rho_hh
        out[1, 1] = self.rho_hv
        out[2, 2] = self.rho_vh
        out[3, 3] = self.rho_vv
        out[0, 3] = self.c
        out[3, 0] = np.conjugate(self.c)
        return out


def analytic_two_photon_elements(
    stats: PhotonStatistics, transmission: float = 1.0
) -> TwoPhotonElements:
    """Leading-order projected elements of the two-photon scheme.

    Valid for low heralding efficiency and T << 1; needs p0..p3.  All
    elements carry T^2 times the symbolic squared efficiency.
    """
    p0, p1, p2, p3 = stats.p(0), stats.p(1), stats.p(2), stats.p(3)
    t2 = transmission**2
    diag = 0.25 * t2 * (p1**4 + p0 * p1**2 * p2 + 4.0 * p0**2 * p2**2 + 3.0 * p0**2 * p1 * p3)
    cross = 0.25 * t2 * (5.0 * p0 * p1**2 * p2 + 3.0 * p0**2 * p1 * p3)
    return TwoPhotonElements(
        rho_hh=diag,
        rho_hv=cross,
        rho_vh=cross,
        rho_vv=diag,
        c=0.25 * t2 * p1**4,
    )


def general_t_condition_sides(
    stats: PhotonStatistics, transmission: float
) -> tuple[float, float]:
    """Both sides of the arbitrary-T entanglement condition (one-photon scheme).

    Left side p1^2 (p1^2/4 - 2 p0 p2); right side the quartic
    4 T^4 p2^4 + 8 T^3 p1 p2^3 + 4 T^2 p2^2 (p1^2 + 2 p0 p2)
    + 8 T p0 p1 p2^2, whose coefficients are all non-negative, so the
    condition is most relaxed at T -> 0.  Derived for sources emitting at
    most two photons; raises if the statistics carry mass above p2.
    """
    if any(p > 0.0 for p in stats.probs[3:]):
        raise ValueError(
            "the arbitrary-T condition holds only for sources with at most two photons"
        )
    p0, p1, p2 = stats.p(0), stats.p(1), stats.p(2)
    t = transmission
    lhs = p1**2 * (p1**2 / 4.0 - 2.0 * p0 * p2)
    rhs = (
        4.0 * t**4 * p2**4
        + 8.0 * t**3 * p1 * p2**3
        + 4.0 * t**2 * p2**2 * (p1**2 + 2.0 * p0 * p2)
        + 8.0 * t * p0 * p1 * p2**2
    )
    return lhs, rhs
