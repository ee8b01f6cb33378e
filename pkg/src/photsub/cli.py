"""Command-line interface.

Subcommands wrap the library: source statistics, heralded-state
characterization, threshold predicates, Bell-inequality optimization and
figure-reproduction sweeps.  Data goes to stdout (JSON) or to the file
given with --out (CSV); diagnostics go to stderr.  Exit codes: 0 on
success, 2 on usage errors, 1 on computation errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, bell, optimize
from .entanglement import (
    concurrence,
    effective_eof,
    eof,
    ppt_entangled,
    project_one_photon_qubits,
    project_two_photon_qubits,
    threshold_general_t,
    threshold_small_t,
)
from .schemes import SchemeKind, build_spec, mode_count
from .sources import (
    PhotonStatistics,
    double_emission_stats,
    down_conversion_stats,
    is_classical_candidate,
    multiphoton_mass,
)
from .subtraction import (
    binary_detector,
    conditional_state,
    conditional_state_small_t,
    low_zeta_detector,
)

CSV_COLUMNS = (
    "eta",
    "x",
    "E",
    "T_opt",
    "CH_min",
    "CHSH",
    "entangled",
    "classical",
    "eval_count",
    "error",
)


def _fmt(value: float) -> str:
    """17 significant digits: round-trips any float exactly."""
    return format(float(value), ".17g")


def _coerce_scalar(obj):
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _json_print(payload: dict) -> None:
    print(json.dumps(payload, indent=2, default=_coerce_scalar))


def _default_threads() -> int:
    env = os.environ.get("PHOTSUB_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", choices=("de", "dc"), required=True,
                        help="photon statistics model: double emission or down-conversion")
    parser.add_argument("--eta", type=float, required=True,
                        help="source transmission (loss) parameter")
    parser.add_argument("--epsilon", type=float, default=None,
                        help="double-emission probability (de model)")
    parser.add_argument("--r", type=float, default=None,
                        help="pair-generation parameter (dc model)")
    parser.add_argument("--mmax", type=int, default=6,
                        help="truncation of the dc photon-number distribution")


def _stats_from_args(parser: argparse.ArgumentParser, args) -> PhotonStatistics:
    if args.model == "de":
        if args.epsilon is None:
            parser.error("--model de requires --epsilon")
        if args.r is not None:
            parser.error("--r applies only to --model dc")
        return double_emission_stats(args.eta, args.epsilon)
    if args.r is None:
        parser.error("--model dc requires --r")
    if args.epsilon is not None:
        parser.error("--epsilon applies only to --model de")
    return down_conversion_stats(args.eta, args.r, mmax=args.mmax)


def _scheme_from_args(args) -> SchemeKind:
    return SchemeKind.ONE_PHOTON if args.scheme == "one" else SchemeKind.TWO_PHOTON


def _parse_clicks(parser: argparse.ArgumentParser, pattern: str | None):
    if pattern is None:
        return None
    if not pattern.isdigit():
        parser.error(f"click pattern must be digits, e.g. 10 or 1010; got {pattern!r}")
    return tuple(int(c) for c in pattern)


def _stats_payload(stats: PhotonStatistics) -> dict:
    return {
        "model": stats.model_tag,
        "params": stats.params,
        "probs": list(stats.probs),
        "truncation_deficit": stats.truncation_deficit,
        "multiphoton_mass": multiphoton_mass(stats),
        "classical_candidate": is_classical_candidate(stats),
    }


def _cmd_stats(parser, args) -> int:
    stats = _stats_from_args(parser, args)
    _json_print(_stats_payload(stats))
    return 0


def _cmd_run(parser, args) -> int:
    stats = _stats_from_args(parser, args)
    kind = _scheme_from_args(args)
    clicks = _parse_clicks(parser, args.clicks)
    detector = binary_detector(args.zeta) if args.zeta is not None else low_zeta_detector()
    spec = build_spec(kind, args.T, detector, clicks)
    state = conditional_state([stats] * mode_count(kind), spec)
    project = (
        project_one_photon_qubits if kind is SchemeKind.ONE_PHOTON
        else project_two_photon_qubits
    )
    dm = project(state)
    tr = dm.trace()
    payload = {
        "scheme": kind.value,
        "T": args.T,
        "clicks": list(spec.clicks),
        "detector": spec.detector.kind,
        "state_trace": state.trace(),
        "projected_trace": tr,
        "scale_exponents": dict(state.scale_exponents),
        "matrix_real": np.real(dm.matrix).tolist(),
        "matrix_imag": np.imag(dm.matrix).tolist(),
    }
    if tr > 0.0:
        payload.update(
            ppt_entangled=ppt_entangled(dm),
            concurrence=concurrence(dm),
            eof=eof(dm),
            effective_eof=effective_eof(state, kind, zeta=args.zeta),
        )
    else:
        payload.update(ppt_entangled=False, concurrence=0.0, eof=0.0, effective_eof=0.0)
    _json_print(payload)
    return 0


def _cmd_threshold(parser, args) -> int:
    stats = _stats_from_args(parser, args)
    kind = _scheme_from_args(args)
    payload = {
        "scheme": kind.value,
        "small_t": threshold_small_t(stats, kind),
        "general_t": None,
        "T": args.T,
    }
    if args.T is not None:
        if kind is not SchemeKind.ONE_PHOTON:
            parser.error("--T (general-T condition) applies only to --scheme one")
        if any(p > 0.0 for p in stats.probs[3:]):
            parser.error("the general-T condition needs sources with at most two photons")
        payload["general_t"] = threshold_general_t(stats, args.T)
    _json_print(payload)
    return 0


def _cmd_bell_ch(parser, args) -> int:
    stats = _stats_from_args(parser, args)
    spec = build_spec(
        SchemeKind.ONE_PHOTON, optimize.SMALL_T_FOR_BELL, low_zeta_detector()
    )
    state = conditional_state_small_t([stats, stats], spec)
    if state.trace() <= 0.0:
        print("heralded state has zero trace", file=sys.stderr)
        return 1
    settings, ch_min = optimize.minimize_ch(
        state, complex_displacements=args.complex, starts=args.starts, seed=args.seed
    )
    _json_print(
        {
            "ch_min": ch_min,
            "violation": ch_min < -1.0,
            "displacements": {
                "alpha": [settings.alpha.real, settings.alpha.imag],
                "alpha_prime": [settings.alpha_prime.real, settings.alpha_prime.imag],
                "beta": [settings.beta.real, settings.beta.imag],
                "beta_prime": [settings.beta_prime.real, settings.beta_prime.imag],
            },
            "complex_displacements": args.complex,
            "starts": args.starts,
            "seed": args.seed,
        }
    )
    return 0


def _cmd_bell_chsh(parser, args) -> int:
    stats = _stats_from_args(parser, args)
    spec = build_spec(
        SchemeKind.TWO_PHOTON, optimize.SMALL_T_FOR_BELL, low_zeta_detector()
    )
    state = conditional_state_small_t([stats] * 4, spec)
    if state.trace() <= 0.0:
        print("heralded state has zero trace", file=sys.stderr)
        return 1
    if args.optimize_angles:
        settings, value = optimize.optimize_chsh_angles(state, seed=args.seed)
    else:
        settings = bell.standard_angles()
        value = bell.chsh_value(state, settings)
    _json_print(
        {
            "chsh": value,
            "violation": abs(value) > 2.0,
            "angles": {
                "theta_a": settings.theta_a,
                "theta_a_prime": settings.theta_a_prime,
                "theta_b": settings.theta_b,
                "theta_b_prime": settings.theta_b_prime,
            },
            "optimized": bool(args.optimize_angles),
            "seed": args.seed,
        }
    )
    return 0


def _record_row(record: optimize.SweepRecord) -> list[str]:
    def flag(value: bool | None) -> str:
        return "" if value is None else ("true" if value else "false")

    return [
        _fmt(record.eta),
        _fmt(record.x),
        _fmt(record.e_opt),
        _fmt(record.t_opt),
        _fmt(record.ch_min),
        _fmt(record.chsh),
        flag(record.entangled_small_t),
        flag(record.classical),
        str(record.eval_count),
        record.error,
    ]


def write_sweep_csv(records, path: str | Path) -> None:
    """RFC-4180-style CSV: header row, fixed column order, '.' decimals."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(_record_row(record))


def sweep_metadata(grid: optimize.SweepGrid, figure: str, threads: int) -> dict:
    return {
        "tool": "photsub",
        "version": __version__,
        "figure": figure,
        "model": grid.model,
        "scheme": grid.kind.value,
        "tasks": sorted(grid.tasks),
        "x_values": [float(v) for v in grid.x_values],
        "eta_values": [float(v) for v in grid.eta_values],
        "nx": len(grid.x_values),
        "ny": len(grid.eta_values),
        "mmax": grid.mmax,
        "seed": grid.seed,
        "threads": threads,
        "complex_displacements": grid.complex_displacements,
        "optimize_angles": grid.optimize_angles,
        "optimizer": {
            "t_coarse_points": optimize.COARSE_GRID_POINTS,
            "t_range": [optimize.T_MIN, optimize.T_MAX],
            "golden_tol": optimize.GOLDEN_TOL,
            "nm_starts": optimize.NM_STARTS,
            "nm_simplex_scale": optimize.NM_SIMPLEX_SCALE,
            "nm_xatol": optimize.NM_XATOL,
            "displacement_bound": optimize.DISPLACEMENT_BOUND,
            "small_t_for_bell": optimize.SMALL_T_FOR_BELL,
        },
        "csv_columns": list(CSV_COLUMNS),
    }


def _cmd_sweep(parser, args) -> int:
    grid = optimize.figure_grid(
        args.figure,
        nx=args.nx,
        ny=args.ny,
        seed=args.seed,
        mmax=args.mmax,
        complex_displacements=args.complex,
        optimize_angles=args.optimize_angles,
    )
    threads = args.threads if args.threads is not None else _default_threads()
    records = optimize.run_sweep(grid, threads=threads)
    write_sweep_csv(records, args.out)
    meta_path = args.metadata or f"{args.out}.meta.json"
    Path(meta_path).write_text(
        json.dumps(sweep_metadata(grid, args.figure, threads), indent=2) + "\n",
        encoding="utf-8",
    )
    failures = sum(1 for r in records if r.error)
    if failures:
        print(f"{failures} of {len(records)} grid points failed", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photsub",
        description="Heralded entanglement distribution via nonlocal photon subtraction",
    )
    parser.add_argument("--version", action="version", version=f"photsub {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_stats = sub.add_parser("stats", help="photon-number distribution of a source model")
    _add_model_args(p_stats)

    p_run = sub.add_parser("run", help="heralded state and its entanglement measures")
    p_run.add_argument("--scheme", choices=("one", "two"), required=True)
    _add_model_args(p_run)
    p_run.add_argument("--T", type=float, required=True, help="tap transmission in (0,1)")
    p_run.add_argument("--clicks", default=None,
                       help="heralding pattern as digits, e.g. 10 or 1010")
    p_run.add_argument("--zeta", type=float, default=None,
                       help="finite detector efficiency (default: low-efficiency limit)")

    p_thr = sub.add_parser("threshold", help="entanglement-generation criteria")
    p_thr.add_argument("--scheme", choices=("one", "two"), required=True)
    _add_model_args(p_thr)
    p_thr.add_argument("--T", type=float, default=None,
                       help="also evaluate the arbitrary-T condition at this T")

    p_ch = sub.add_parser("bell-ch", help="minimize the Clauser-Horne combination")
    _add_model_args(p_ch)
    p_ch.add_argument("--complex", action="store_true",
                      help="optimize complex displacements (8 parameters)")
    p_ch.add_argument("--starts", type=int, default=optimize.NM_STARTS)
    p_ch.add_argument("--seed", type=int, default=0)

    p_chsh = sub.add_parser("bell-chsh", help="CHSH combination of the two-photon state")
    _add_model_args(p_chsh)
    p_chsh.add_argument("--optimize-angles", action="store_true")
    p_chsh.add_argument("--seed", type=int, default=0)

    p_sweep = sub.add_parser("sweep", help="figure-reproduction parameter sweep to CSV")
    p_sweep.add_argument("--figure", required=True, choices=sorted(optimize.FIGURES),
                         help="which parameter map to reproduce")
    p_sweep.add_argument("--nx", type=int, default=101)
    p_sweep.add_argument("--ny", type=int, default=101)
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.add_argument("--metadata", default=None,
                         help="metadata sidecar path (default: OUT.meta.json)")
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--mmax", type=int, default=None,
                         help="override the figure's default dc truncation")
    p_sweep.add_argument("--threads", type=int, default=None,
                         help="worker processes (default: PHOTSUB_THREADS or all cores)")
    p_sweep.add_argument("--complex", action="store_true",
                         help="CH optimization over complex displacements")
    p_sweep.add_argument("--optimize-angles", action="store_true",
                         help="optimize CHSH angles instead of the standard choice")

    return parser


_COMMANDS = {
    "stats": _cmd_stats,
    "run": _cmd_run,
    "threshold": _cmd_threshold,
    "bell-ch": _cmd_bell_ch,
    "bell-chsh": _cmd_bell_chsh,
    "sweep": _cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](parser, args)
    except SystemExit as exc:  # parser.error inside a command
        return int(exc.code or 0)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
