"""Derivative-free optimization and parameter-map sweeps.

The quantities of interest are the rescaled entanglement of formation
maximized over the tap transmission T, the minimum of the Clauser-Horne
combination over coherent displacements, and the CHSH combination at
standard (optionally optimized) analyzer angles.  Grid sweeps over the
source parameters produce one record per grid point in row-major order;
every point is computed independently with a seed derived from the sweep
seed and the point index, so results are deterministic regardless of how
many workers execute the sweep, and a failing point is recorded in its
row instead of aborting the run.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from . import bell
from .entanglement import (
    BASIS_TAG_PHOTON_NUMBER,
    BASIS_TAG_POLARIZATION,
    ONE_PHOTON_BASIS,
    TWO_PHOTON_BASIS,
    TwoQubitDM,
    eof,
    threshold_small_t,
)
from .schemes import (
    HERALDING_MULTIPLICITY,
    SchemeKind,
    ZETA_POWER,
    build_spec,
    mode_count,
)
from .sources import (
    PhotonStatistics,
    double_emission_stats,
    down_conversion_stats,
    is_classical_candidate,
)
from .subtraction import (
    ProjectedBlockEvaluator,
    conditional_state_small_t,
    low_zeta_detector,
)

T_MIN = 1e-6
T_MAX = 1.0 - 1e-6
COARSE_GRID_POINTS = 64
GOLDEN_TOL = 1e-5
# Transmission used for the leading-order heralded states entering the
# Bell tests; after normalization the Bell quantities do not depend on it.
SMALL_T_FOR_BELL = 1e-3

DISPLACEMENT_BOUND = 3.0
NM_STARTS = 16
NM_SIMPLEX_SCALE = 0.3
NM_XATOL = 1e-6

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class _EffectiveEofOverT:
    """Rescaled entanglement of formation as a function of T.

    Wraps a ProjectedBlockEvaluator so a T scan costs a handful of
    multiply-adds per evaluation instead of rebuilding the conditional
    state; the result is identical to projecting ``conditional_state``.
    """

    def __init__(self, stats: PhotonStatistics, kind: SchemeKind) -> None:
        m = mode_count(kind)
        spec = build_spec(kind, 0.5, low_zeta_detector())
        one = kind is SchemeKind.ONE_PHOTON
        self._evaluator = ProjectedBlockEvaluator(
            [stats] * m,
            spec.unitary,
            spec.detector,
            spec.clicks,
            ONE_PHOTON_BASIS if one else TWO_PHOTON_BASIS,
        )
        self._basis_tag = BASIS_TAG_PHOTON_NUMBER if one else BASIS_TAG_POLARIZATION
        self._multiplicity = HERALDING_MULTIPLICITY[kind]
        self._zeta_power = ZETA_POWER[kind]
        self.eval_count = 0

    def __call__(self, transmission: float) -> float:
        self.eval_count += 1
        block = self._evaluator.block(transmission)
        tr = float(np.real(np.trace(block)))
        if tr <= 1e-15:
            return 0.0
        dm = TwoQubitDM(block, self._basis_tag, {"zeta": self._zeta_power})
        return self._multiplicity * tr * eof(dm)


def _golden_section_max(f, a: float, b: float, tol: float) -> tuple[float, float]:
    """Golden-section search for a maximum of f on [a, b]."""
    x1 = b - _INV_GOLDEN * (b - a)
    x2 = a + _INV_GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_GOLDEN * (b - a)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def maximize_e_over_t(
    stats: PhotonStatistics, kind: SchemeKind
) -> tuple[float, float]:
    """Maximize the rescaled entanglement of formation over the transmission.

    A 64-point log-uniform coarse grid over [1e-6, 1-1e-6] locates the
    basin; golden-section refinement narrows the bracket below 1e-5.  If
    the objective vanishes on the whole grid, returns the smallest grid T
    with value 0.
    """
    t_opt, e_opt, _ = _maximize_e_over_t_counted(stats, kind)
    return t_opt, e_opt


def _maximize_e_over_t_counted(
    stats: PhotonStatistics, kind: SchemeKind
) -> tuple[float, float, int]:
    objective = _EffectiveEofOverT(stats, kind)
    grid = np.geomspace(T_MIN, T_MAX, COARSE_GRID_POINTS)
    values = np.array([objective(t) for t in grid])
    best = int(np.argmax(values))
    if values[best] <= 0.0:
        return float(grid[0]), 0.0, objective.eval_count
    lo = grid[best - 1] if best > 0 else grid[0]
    hi = grid[best + 1] if best < len(grid) - 1 else grid[-1]
    t_ref, e_ref = _golden_section_max(objective, lo, hi, GOLDEN_TOL)
    if e_ref >= values[best]:
        return float(t_ref), float(e_ref), objective.eval_count
    # never worse than the best coarse point
    return float(grid[best]), float(values[best]), objective.eval_count


def minimize_ch(
    state,
    complex_displacements: bool = False,
    starts: int = NM_STARTS,
    seed: int = 0,
) -> tuple[bell.DisplacementSettings, float]:
    """Minimize the Clauser-Horne combination over coherent displacements.

    Multistart Nelder-Mead over real displacements in [-3, 3]^4 (eight
    parameters when ``complex_displacements``), with deterministic starts
    drawn from the given seed; the same seed reproduces the same settings
    bit for bit.
    """
    settings, value, _ = _minimize_ch_counted(state, complex_displacements, starts, seed)
    return settings, value


def _nelder_mead(objective, x0: np.ndarray, bounds=None, maxfev: int = 4000):
    simplex = np.vstack([x0] + [x0 + NM_SIMPLEX_SCALE * e for e in np.eye(len(x0))])
    if bounds is not None:
        lo = np.array([b[0] for b in bounds])
        hi = np.array([b[1] for b in bounds])
        simplex = np.clip(simplex, lo, hi)
    return minimize(
        objective,
        x0,
        method="Nelder-Mead",
        bounds=bounds,
        options={
            "xatol": NM_XATOL,
            "fatol": 1e-12,
            "initial_simplex": simplex,
            "maxfev": maxfev,
        },
    )


def _minimize_ch_counted(
    state,
    complex_displacements: bool = False,
    starts: int = NM_STARTS,
    seed: int = 0,
) -> tuple[bell.DisplacementSettings, float, int]:
    dim = 8 if complex_displacements else 4

    def objective(x: np.ndarray) -> float:
        return bell.ch_value(
            state, bell.DisplacementSettings.from_array(x, complex_displacements)
        )

    rng = np.random.default_rng(seed)
    start_points = [np.zeros(dim)]
    start_points += list(
        rng.uniform(-DISPLACEMENT_BOUND, DISPLACEMENT_BOUND, size=(starts - 1, dim))
    )
    bounds = [(-DISPLACEMENT_BOUND, DISPLACEMENT_BOUND)] * dim
    best_x = start_points[0]
    best_val = objective(best_x)
    evals = 1
    for x0 in start_points:
        res = _nelder_mead(objective, x0, bounds=bounds)
        evals += int(res.nfev)
        if res.fun < best_val:
            best_val = float(res.fun)
            best_x = res.x
    return (
        bell.DisplacementSettings.from_array(best_x, complex_displacements),
        float(best_val),
        evals,
    )


def optimize_chsh_angles(
    state, starts: int = NM_STARTS, seed: int = 0
) -> tuple[bell.AngleSettings, float]:
    """Maximize |CHSH| over the four analyzer angles (multistart Nelder-Mead)."""
    settings, value, _ = _optimize_chsh_counted(state, starts, seed)
    return settings, value


def _optimize_chsh_counted(
    state, starts: int = NM_STARTS, seed: int = 0
) -> tuple[bell.AngleSettings, float, int]:
    def objective(x: np.ndarray) -> float:
        return -abs(bell.chsh_value(state, bell.AngleSettings(*x)))

    rng = np.random.default_rng(seed)
    start_points = [np.array(bell.STANDARD_ANGLES)]
    start_points += list(rng.uniform(-math.pi / 2, math.pi / 2, size=(starts - 1, 4)))
    best_x = start_points[0]
    best_val = objective(best_x)
    evals = 1
    for x0 in start_points:
        res = _nelder_mead(objective, x0, maxfev=2000)
        evals += int(res.nfev)
        if res.fun < best_val:
            best_val = float(res.fun)
            best_x = res.x
    settings = bell.AngleSettings(*best_x)
    return settings, bell.chsh_value(state, settings), evals


# Per-point tasks a sweep can compute.
TASK_E = "E"
TASK_CH = "CH"
TASK_CHSH = "CHSH"
TASK_THRESHOLDS = "thresholds"


@dataclass(frozen=True)
class SweepGrid:
    """Rectangular parameter grid and the tasks to run at each point.

    ``model`` is "de" (double emission, x = epsilon) or "dc"
    (down-conversion, x = r); ``x_values`` spans the horizontal axis and
    ``eta_values`` the vertical one.  Records are emitted row-major: eta
    varies slowest.
    """

    model: str
    kind: SchemeKind
    x_values: tuple[float, ...]
    eta_values: tuple[float, ...]
    tasks: frozenset[str] = frozenset({TASK_E, TASK_THRESHOLDS})
    mmax: int = 6
    seed: int = 0
    complex_displacements: bool = False
    optimize_angles: bool = False

    def __post_init__(self) -> None:
        if self.model not in ("de", "dc"):
            raise ValueError(f"model must be 'de' or 'dc', got {self.model!r}")
        unknown = set(self.tasks) - {TASK_E, TASK_CH, TASK_CHSH, TASK_THRESHOLDS}
        if unknown:
            raise ValueError(f"unknown sweep tasks: {sorted(unknown)}")
        if not self.x_values or not self.eta_values:
            raise ValueError("sweep axes must be non-empty")

    def stats_at(self, x: float, eta: float) -> PhotonStatistics:
        if self.model == "de":
            return double_emission_stats(eta, x)
        # sweeps tolerate sub-unit trace; the deficit is tracked on the
        # statistics instead of enforced, since axes may reach large r
        return down_conversion_stats(eta, x, mmax=self.mmax, deficit_tol=None)


@dataclass(frozen=True)
class SweepRecord:
    """One grid point of a sweep.

    NaN marks quantities that were not requested or failed; in the
    latter case ``error`` carries the reason.
    """

    eta: float
    x: float
    e_opt: float = math.nan
    t_opt: float = math.nan
    ch_min: float = math.nan
    chsh: float = math.nan
    entangled_small_t: bool | None = None
    classical: bool | None = None
    eval_count: int = 0
    error: str = ""


def _point_seed(sweep_seed: int, index: int) -> int:
    return int(
        np.random.SeedSequence(entropy=sweep_seed, spawn_key=(index,)).generate_state(1)[0]
    )


def _point_record(grid: SweepGrid, index: int) -> SweepRecord:
    nx = len(grid.x_values)
    eta = grid.eta_values[index // nx]
    x = grid.x_values[index % nx]
    seed = _point_seed(grid.seed, index)
    evals = 0
    record = SweepRecord(eta=eta, x=x)
    try:
        stats = grid.stats_at(x, eta)
        if TASK_THRESHOLDS in grid.tasks:
            record = replace(
                record,
                entangled_small_t=threshold_small_t(stats, grid.kind),
                classical=is_classical_candidate(stats),
            )
        if TASK_E in grid.tasks:
            t_opt, e_opt, n = _maximize_e_over_t_counted(stats, grid.kind)
            evals += n
            record = replace(record, e_opt=e_opt, t_opt=t_opt)
        if TASK_CH in grid.tasks or TASK_CHSH in grid.tasks:
            spec = build_spec(grid.kind, SMALL_T_FOR_BELL, low_zeta_detector())
            state = conditional_state_small_t([stats] * mode_count(grid.kind), spec)
            if state.trace() <= 0.0:
                return replace(record, eval_count=evals, error="zero-trace heralded state")
            if TASK_CH in grid.tasks:
                _, ch_min, n = _minimize_ch_counted(
                    state, grid.complex_displacements, seed=seed
                )
                evals += n
                record = replace(record, ch_min=ch_min)
            if TASK_CHSH in grid.tasks:
                if grid.optimize_angles:
                    _, chsh, n = _optimize_chsh_counted(state, seed=seed)
                    evals += n
                else:
                    chsh = bell.chsh_value(state, bell.standard_angles())
                    evals += 1
                record = replace(record, chsh=chsh)
        return replace(record, eval_count=evals)
    except Exception as exc:  # recorded per point, sweep continues
        return replace(record, eval_count=evals, error=str(exc))


def run_sweep(grid: SweepGrid, threads: int = 1) -> list[SweepRecord]:
    """Compute one record per grid point, row-major over (eta, x).

    Points are independent tasks; with ``threads`` > 1 they run in a
    process pool, and both the output order and the per-point seeds are
    the same as in a serial run.
    """
    count = len(grid.eta_values) * len(grid.x_values)
    if threads <= 1:
        return [_point_record(grid, i) for i in range(count)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        chunk = max(1, count // (8 * threads))
        return list(
            pool.map(_point_record, [grid] * count, range(count), chunksize=chunk)
        )


@dataclass(frozen=True)
class FigurePreset:
    """Default axes, model and tasks reproducing one published map."""

    model: str
    kind: SchemeKind
    tasks: frozenset[str]
    x_name: str
    x_range: tuple[float, float]
    eta_range: tuple[float, float]
    mmax: int = 6


# The entanglement maps span the full parameter planes; the Bell maps use
# tighter ranges near eta = 1 where violations occur.  Axis limits are
# read off the published figures, so they are defaults, not contracts.
FIGURES: dict[str, FigurePreset] = {
    "3a": FigurePreset(
        "de", SchemeKind.ONE_PHOTON, frozenset({TASK_E, TASK_THRESHOLDS}),
        "epsilon", (0.0, 0.5), (0.5, 1.0),
    ),
    "3b": FigurePreset(
        "dc", SchemeKind.ONE_PHOTON, frozenset({TASK_E, TASK_THRESHOLDS}),
        "r", (0.0, 0.25), (0.5, 1.0),
    ),
    "4a": FigurePreset(
        "de", SchemeKind.ONE_PHOTON, frozenset({TASK_CH}),
        "epsilon", (0.0, 0.1), (0.9, 1.0),
    ),
    "4b": FigurePreset(
        "dc", SchemeKind.ONE_PHOTON, frozenset({TASK_CH}),
        "r", (0.0, 0.05), (0.9, 1.0), mmax=3,
    ),
    "6a": FigurePreset(
        "de", SchemeKind.TWO_PHOTON, frozenset({TASK_E, TASK_THRESHOLDS}),
        "epsilon", (0.0, 0.5), (0.5, 1.0),
    ),
    "6b": FigurePreset(
        "dc", SchemeKind.TWO_PHOTON, frozenset({TASK_E, TASK_THRESHOLDS}),
        "r", (0.0, 0.25), (0.5, 1.0), mmax=3,
    ),
    "8a": FigurePreset(
        "de", SchemeKind.TWO_PHOTON, frozenset({TASK_CHSH}),
        "epsilon", (0.0, 0.1), (0.9, 1.0),
    ),
    "8b": FigurePreset(
        "dc", SchemeKind.TWO_PHOTON, frozenset({TASK_CHSH}),
        "r", (0.0, 0.05), (0.9, 1.0), mmax=4,
    ),
}


def figure_grid(
    figure: str,
    nx: int = 101,
    ny: int = 101,
    seed: int = 0,
    mmax: int | None = None,
    complex_displacements: bool = False,
    optimize_angles: bool = False,
) -> SweepGrid:
    """Sweep grid reproducing one of the published parameter maps."""
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; valid: {sorted(FIGURES)}")
    preset = FIGURES[figure]
    return SweepGrid(
        model=preset.model,
        kind=preset.kind,
        x_values=tuple(float(v) for v in np.linspace(*preset.x_range, nx)),
        eta_values=tuple(float(v) for v in np.linspace(*preset.eta_range, ny)),
        tasks=preset.tasks,
        mmax=preset.mmax if mmax is None else mmax,
        seed=seed,
        complex_displacements=complex_displacements,
        optimize_angles=optimize_angles,
    )
