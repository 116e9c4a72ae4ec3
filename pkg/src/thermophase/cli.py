"""Command-line entry point: run / equilibrium / verify / sweep-alpha / convergence.

Exit codes are a stable contract: 0 success, 2 configuration problem,
3 solver failure, 4 equilibrium failure, 5 verification failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, PreparedRun, effective_config, load_run
from .equilibrium import DegenerateEquilibriumError, PhaseRootError, build_equilibrium
from .grid import Grid, write_field
from .model import coupling_threshold
from .solver import (
    CflError,
    LinearSolveError,
    PositivityLossError,
    cfl_limits,
    run,
    write_diagnostics_csv,
)
from .stability import EnergyFitError, decay_ingredients, fit_decay_rate
from .verification import (
    convergence_study,
    format_report,
    trajectory_checks,
    validate_hypotheses,
    write_reports,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_EQUILIBRIUM = 4
EXIT_VERIFICATION = 5

_PLOT_SCRIPT = """\
# gnuplot script for the run diagnostics written next to this file
set datafile separator ','
set key autotitle columnhead
set xlabel 't'
set terminal push

set ylabel 'temperature extrema'
plot 'diagnostics.csv' using 1:2 with lines title 'theta_min', \\
     'diagnostics.csv' using 1:3 with lines title 'theta_max'
pause -1 'temperature extrema; press enter'

set ylabel 'fraction / phase extrema'
plot 'diagnostics.csv' using 1:4 with lines title 'c_min', \\
     'diagnostics.csv' using 1:5 with lines title 'c_max', \\
     'diagnostics.csv' using 1:6 with lines title 'phi_min', \\
     'diagnostics.csv' using 1:7 with lines title 'phi_max'
pause -1 'confinement extrema; press enter'

set ylabel 'relative energy'
set logscale y
plot 'diagnostics.csv' using 1:9 with lines title 'E'
pause -1 'energy decay; press enter'
"""


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("THERMOPHASE_THREADS", "1")))
    except ValueError:
        return 1


def _hypothesis_gate(prep: PreparedRun) -> tuple[list, int | None]:
    """Validate hypotheses; core failures (H1-H6) are configuration errors."""
    reports = validate_hypotheses(
        prep.params, prep.source, prep.initial, prep.theta_min0,
        eq=prep.equilibrium, curvature_min=prep.curvature_min,
    )
    core = {"H1", "H2", "H3", "H4", "H5", "H6"}
    core_failures = [r for r in reports if not r.passed and r.name.split("-")[0] in core]
    if core_failures:
        for r in core_failures:
            print(f"error: {format_report(r)}", file=sys.stderr)
        return reports, EXIT_CONFIG
    for r in reports:
        if not r.passed and r.applicable:
            print(f"warning: {format_report(r)}", file=sys.stderr)
    return reports, None


def _write_run_outputs(prep: PreparedRun, traj, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_diagnostics_csv(traj, out / "diagnostics.csv")
    for step_idx, state in zip(traj.snapshot_steps, traj.states):
        write_field(state.theta, out / f"snap_{step_idx}.csv")
        write_field(state.c, out / f"snap_{step_idx}_c.csv")
        write_field(state.phi, out / f"snap_{step_idx}_phi.csv")
    (out / "plot.gp").write_text(_PLOT_SCRIPT)
    (out / "effective_config.cfg").write_text(effective_config(prep))


def cmd_run(prep: PreparedRun) -> int:
    _, gate = _hypothesis_gate(prep)
    if gate is not None:
        return gate
    traj = run(prep.initial, prep.params, prep.source, prep.controls,
               equilibrium=prep.equilibrium)
    out = Path(prep.out_dir)
    _write_run_outputs(prep, traj, out)
    print(f"run finished: {traj.n_steps} steps, outputs in {out}")
    if prep.equilibrium is not None and traj.n_steps >= 2:
        cm = prep.curvature_min
        if cm is None and prep.equilibrium.curvature > 0:
            cm = 0.5 * prep.equilibrium.curvature
        try:
            fit = fit_decay_rate(traj)
            print(fit.summary())
        except EnergyFitError as exc:
            print(f"decay fit unavailable: {exc}")
        if cm is not None:
            parts = " ".join(f"{k}={v!r}" for k, v in
                             decay_ingredients(prep.params, prep.grid, cm).items())
            print(f"decay ingredients: {parts}")
    return EXIT_OK


def cmd_equilibrium(prep: PreparedRun) -> int:
    items = prep._raw_items
    if prep.equilibrium is not None:
        eq = prep.equilibrium
    else:
        if items is not None and items.has("initial.theta_bar"):
            theta_bar = items.get_float("initial.theta_bar")
        elif items is not None and items.has("initial.theta0"):
            theta_bar = items.get_float("initial.theta0")
        else:
            raise ConfigError("equilibrium needs initial.theta_bar or initial.theta0",
                              path=prep.path)
        eq = build_equilibrium(theta_bar, prep.params)
    print(f"theta_bar = {eq.theta_bar!r}")
    print(f"c_bar = {eq.c_bar!r}")
    for root in eq.candidates:
        marker = " (selected)" if root.phi == eq.phi_bar else ""
        print(f"phi root = {root.phi!r} curvature = {root.curvature!r} "
              f"stable = {root.stable}{marker}")
    print(f"phi_bar = {eq.phi_bar!r} stable = {eq.stable}")
    print(f"residual_c = {eq.residual_c!r} residual_phi = {eq.residual_phi!r}")
    cm = prep.curvature_min
    if cm is None and eq.curvature > 0:
        cm = 0.5 * eq.curvature
    if cm is not None:
        print(f"alpha0 = {coupling_threshold(prep.params, cm)!r} (curvature_min = {cm!r})")
    else:
        print("alpha0 undefined: selected root has no positive curvature")
    return EXIT_OK


def cmd_verify(prep: PreparedRun) -> int:
    hygiene, gate = _hypothesis_gate(prep)
    if gate is not None:
        return gate
    traj = run(prep.initial, prep.params, prep.source, prep.controls,
               equilibrium=prep.equilibrium)
    checks = trajectory_checks(traj, prep.params, prep.source, prep.theta_min0,
                               eq=prep.equilibrium, curvature_min=prep.curvature_min)
    out = Path(prep.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_run_outputs(prep, traj, out)
    write_reports(hygiene + checks, txt_path=out / "checks.txt", csv_path=out / "checks.csv")
    for report in checks:
        print(format_report(report))
    failed = [r for r in checks if r.applicable and not r.passed]
    return EXIT_VERIFICATION if failed else EXIT_OK


def _sweep_row(prep: PreparedRun, alpha: float):
    params = replace(prep.params, alpha=alpha)
    try:
        traj = run(prep.initial, params, prep.source, prep.controls,
                   equilibrium=prep.equilibrium)
        fit = fit_decay_rate(traj)
        passed = fit.kappa_fit > 0.0 and fit.monotone_frac == 1.0
        return alpha, fit.kappa_fit, fit.monotone_frac, passed
    except (PositivityLossError, LinearSolveError, CflError, EnergyFitError):
        return alpha, math.nan, math.nan, False


def cmd_sweep_alpha(prep: PreparedRun, alphas: tuple[float, ...]) -> int:
    if prep.equilibrium is None:
        raise ConfigError("sweep-alpha needs the equilibrium-perturbed initial preset",
                          path=prep.path)
    if not alphas:
        raise ConfigError("no sweep alphas given (set sweep.alphas or --alphas)",
                          path=prep.path)
    ordered = tuple(sorted(alphas))
    workers = min(_workers(), len(ordered))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda a: _sweep_row(prep, a), ordered))
    else:
        rows = [_sweep_row(prep, a) for a in ordered]
    out = Path(prep.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["alpha,kappa_fit,monotone_frac,passed"]
    for alpha, kappa, frac, passed in rows:
        line = f"{alpha!r},{kappa!r},{frac!r},{str(passed).lower()}"
        lines.append(line)
        print(line)
    (out / "sweep_alpha.csv").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def _smooth_profile(x: np.ndarray):
    length = float(x[-1] + x[0])  # cell centers are symmetric in [0, L]
    theta = 1.0 + 0.1 * np.cos(math.pi * x / length)
    c = 0.5 + 0.3 * np.cos(math.pi * x / length)
    phi = 0.5 + 0.3 * np.cos(2.0 * math.pi * x / length)
    return theta, c, phi


def cmd_convergence(prep: PreparedRun) -> int:
    conv = prep.conv or {
        "grids": (16, 32, 64),
        "steps": (500, 1000, 2000),
        "t_end": 0.1,
        "ref_factor": 4,
        "n_temporal": 32,
    }
    length = prep.grid.lengths[0]
    ref_grid = Grid.line(conv["grids"][-1] * conv["ref_factor"], length)
    theta_hat = float(np.max(_smooth_profile(ref_grid.axis_centers(0))[0]))
    dt_spatial = cfl_limits(prep.params, ref_grid, theta_hat)
    t_end = conv["t_end"]
    dts = tuple(t_end / s for s in conv["steps"])
    report = convergence_study(
        prep.params, prep.source, _smooth_profile,
        length=length, t_end=t_end,
        grids=tuple(conv["grids"]), dt_spatial=dt_spatial,
        spatial_ref_factor=conv["ref_factor"],
        n_temporal=conv["n_temporal"], dts=dts,
    )
    print(format_report(report))
    print(report.details)
    if not report.applicable or not report.passed:
        return EXIT_VERIFICATION
    return EXIT_OK


def _build_cli() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermophase",
        description="simulate and verify the coupled heat/colour/phase model",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, brief in (
        ("run", "integrate one configuration and write diagnostics"),
        ("equilibrium", "solve and classify the homogeneous stationary state"),
        ("verify", "run and evaluate every certified bound"),
        ("sweep-alpha", "rerun the configuration across coupling strengths"),
        ("convergence", "measure observed orders on the smooth preset"),
    ):
        sp = sub.add_parser(name, help=brief)
        sp.add_argument("--config", required=True, help="path to the run configuration")
        sp.add_argument("--out", help="output directory (overrides outputs.dir)")
        sp.add_argument("--seed", type=int, help="seed override for random perturbations")
        if name == "sweep-alpha":
            sp.add_argument("--alphas", help="comma-separated coupling values "
                                             "(overrides sweep.alphas)")
    return parser


def main(argv=None) -> int:
    args = _build_cli().parse_args(argv)
    try:
        prep = load_run(args.config, seed=args.seed, out_dir=args.out)
        if args.command == "run":
            return cmd_run(prep)
        if args.command == "equilibrium":
            return cmd_equilibrium(prep)
        if args.command == "verify":
            return cmd_verify(prep)
        if args.command == "sweep-alpha":
            alphas = prep.sweep_alphas or ()
            if args.alphas:
                alphas = tuple(float(a) for a in args.alphas.split(","))
            return cmd_sweep_alpha(prep, alphas)
        if args.command == "convergence":
            return cmd_convergence(prep)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CflError as exc:
        print(f"error: invalid step controls: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PositivityLossError, LinearSolveError) as exc:
        step_note = f" at step {exc.step}" if getattr(exc, "step", None) is not None else ""
        print(f"error: solver failure{step_note}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DegenerateEquilibriumError, PhaseRootError) as exc:
        print(f"error: equilibrium failure: {exc}", file=sys.stderr)
        return EXIT_EQUILIBRIUM


if __name__ == "__main__":
    sys.exit(main())
