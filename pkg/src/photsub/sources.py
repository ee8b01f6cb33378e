"""Photon-number statistics of imperfect single-photon sources.

Two physical models are provided.  The double-emission model is a
mixture of zero, one and two photons parametrized by a transmission
``eta`` and a double-emission probability ``epsilon``.  The
down-conversion model describes a heralded pair source with pair
parameter ``r`` and transmission ``eta``; its multiphoton tail decays
more slowly than Poissonian, so distributions are truncated at a
configurable ``mmax`` and the truncated-away mass is tracked instead of
being renormalized (renormalizing would silently bias heralding
probabilities downstream).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_MMAX = 6
DEFAULT_DEFICIT_TOL = 1e-3


@dataclass(frozen=True)
class PhotonStatistics:
    """Finite probability vector p_0..p_mmax for one source.

    ``model_tag`` records provenance ("double_emission", "down_conversion"
    or "custom"); ``params`` keeps the generating parameters.
    ``truncation_deficit`` is 1 minus the retained probability mass.
    """

    probs: tuple[float, ...]
    model_tag: str
    params: dict[str, float] = field(default_factory=dict)
    truncation_deficit: float = 0.0

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.probs):
            raise ValueError("negative probability in photon statistics")
        if sum(self.probs) > 1.0 + 1e-12:
            raise ValueError(f"probabilities sum to {sum(self.probs)} > 1")

    @property
    def mmax(self) -> int:
        return len(self.probs) - 1

    def p(self, m: int) -> float:
        """p_m, zero beyond the stored range."""
        return self.probs[m] if 0 <= m < len(self.probs) else 0.0


def double_emission_stats(eta: float, epsilon: float) -> PhotonStatistics:
    """Source emitting two photons with probability epsilon, then loss eta.

    p0 = (1-eta)(1-eta*epsilon), p1 = eta + eta(1-2eta)*epsilon,
    p2 = eta^2*epsilon; the three terms sum to one exactly.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    p0 = (1.0 - eta) * (1.0 - eta * epsilon)
    p1 = eta + eta * (1.0 - 2.0 * eta) * epsilon
    p2 = eta**2 * epsilon
    return PhotonStatistics(
        probs=(p0, p1, p2),
        model_tag="double_emission",
        params={"eta": eta, "epsilon": epsilon},
        truncation_deficit=0.0,
    )


def _down_conversion_pm(eta: float, r: float, m: int) -> float:
    """Closed-form p_m of the heralded down-conversion source after loss.

    p_m = (1-r)^2 * eta^m * [m r^(m-1) + (1-eta) r^m] / [1-(1-eta)r]^(m+2);
    the m*r^(m-1) term is taken as 0 at m=0 so the formula is regular at
    r=0 as well.
    """
    denom = (1.0 - (1.0 - eta) * r) ** (m + 2)
    lead = m * r ** (m - 1) if m >= 1 else 0.0
    return (1.0 - r) ** 2 * eta**m * (lead + (1.0 - eta) * r**m) / denom


def down_conversion_stats(
    eta: float,
    r: float,
    mmax: int = DEFAULT_MMAX,
    deficit_tol: float = DEFAULT_DEFICIT_TOL,
) -> PhotonStatistics:
    """Heralded down-conversion source with loss eta and pair parameter r.

    The exact distribution is normalized; truncating at ``mmax`` leaves a
    deficit which is recorded on the result.  A deficit above
    ``deficit_tol`` raises, since it signals that ``mmax`` is too small
    for the requested r.  Pass ``deficit_tol=None`` to skip the check.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    if not 0.0 <= r < 1.0:
        raise ValueError(f"r must be in [0, 1), got {r}")
    if mmax < 2:
        raise ValueError(f"mmax must be >= 2, got {mmax}")
    probs = tuple(_down_conversion_pm(eta, r, m) for m in range(mmax + 1))
    deficit = max(0.0, 1.0 - sum(probs))
    if deficit_tol is not None and deficit >= deficit_tol:
        raise ValueError(
            f"truncation deficit {deficit:.3e} at mmax={mmax} exceeds {deficit_tol:.1e}"
        )
    return PhotonStatistics(
        probs=probs,
        model_tag="down_conversion",
        params={"eta": eta, "r": r},
        truncation_deficit=deficit,
    )


def poisson_stats(lam: float, mmax: int = 20) -> PhotonStatistics:
    """Truncated Poisson distribution, tagged as custom.

    Used as the classical reference: Poisson statistics saturate the
    p1^2 <= 2 p0 p2 bound exactly.
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    probs = tuple(math.exp(-lam) * lam**m / math.factorial(m) for m in range(mmax + 1))
    deficit = max(0.0, 1.0 - sum(probs))
    return PhotonStatistics(
        probs=probs, model_tag="custom", params={"lambda": lam}, truncation_deficit=deficit
    )


def custom_stats(probs, params: dict[str, float] | None = None) -> PhotonStatistics:
    """Wrap a user-supplied probability vector (validated, not normalized)."""
    vec = tuple(float(p) for p in probs)
    deficit = max(0.0, 1.0 - sum(vec))
    return PhotonStatistics(
        probs=vec, model_tag="custom", params=dict(params or {}), truncation_deficit=deficit
    )


def load_custom_stats(path: str | Path) -> PhotonStatistics:
    """Read statistics from a text file: one probability per line, index = m."""
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    probs = [float(line) for line in (s.strip() for s in lines) if line]
    if not probs:
        raise ValueError(f"no probabilities found in {path}")
    return custom_stats(probs)


def is_classical_candidate(stats: PhotonStatistics) -> bool:
    """True iff p1^2 <= 2 p0 p2.

    This is a necessary condition satisfied by every statistical mixture
    of coherent states.  Poisson statistics saturate it with equality, so
    the comparison carries a relative slack of 1e-12 to keep the exactly
    saturating case on the classical side of rounding noise.
    """
    lhs = stats.p(1) ** 2
    rhs = 2.0 * stats.p(0) * stats.p(2)
    return lhs <= rhs + 1e-12 * max(lhs, rhs)


def multiphoton_mass(stats: PhotonStatistics) -> float:
    """Total probability of emitting two or more photons.

    For the down-conversion model this is computed from the exact
    (untruncated) distribution as 1 - p0 - p1, so it does not depend on
    the chosen mmax.
    """
    if stats.model_tag == "down_conversion":
        eta = stats.params["eta"]
        r = stats.params["r"]
        return 1.0 - _down_conversion_pm(eta, r, 0) - _down_conversion_pm(eta, r, 1)
    return float(sum(stats.probs[2:]))
