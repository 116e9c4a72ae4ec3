"""Independent oracles and property suites keyed to the proved statements.

The ODE oracle integrates the spatially homogeneous reduction with classical
RK4 and shares no stencil or stepping code with the solver, so agreement
between the two is evidence rather than tautology.  ``trajectory_checks``
turns each proved bound into a runnable check over a recorded trajectory and
reports the worst spatiotemporal margin; checks whose hypotheses do not cover
part of the run are scoped to the covered part instead of failing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .equilibrium import EquilibriumState
from .grid import Field, Grid, State, mean
from .model import (
    ModelParams,
    PositivityError,
    SourceSpec,
    conductivity,
    coupling_threshold,
    decolour_rate,
    double_well,
    double_well_deriv,
    positivity_horizon,
    reaction_rate,
    recolour_rate,
)
from .solver import PositivityLossError, SCHEME_EXPLICIT, StepControls, Trajectory, run
from .stability import EnergyFitError, fit_decay_rate

__all__ = [
    "CheckReport",
    "OdeSeries",
    "validate_hypotheses",
    "ode_oracle",
    "compare_pde_vs_ode",
    "convergence_study",
    "trajectory_checks",
    "format_report",
    "write_reports",
]

_PRECONDITION_NOTE = "assumes the hypothesis validation passed for this configuration"

IMEX_CONFINEMENT_TOL = 1e-8
SPATIAL_ORDER_RANGE = (1.6, 2.4)
TEMPORAL_ORDER_RANGE = (0.8, 1.2)


@dataclass
class CheckReport:
    """One named check: pass/fail, worst margin, and where the worst case sat.

    ``worst_margin`` is slack when positive and violation size when negative;
    ``location`` is (flat cell index, step index) when known.  ``applicable``
    is False when the check's hypotheses did not cover the run at all.
    """

    name: str
    passed: bool
    worst_margin: float
    location: tuple[int, int] | None = None
    details: str = ""
    applicable: bool = True


def format_report(r: CheckReport) -> str:
    status = "PASS" if r.passed else "FAIL"
    if not r.applicable:
        status = "SKIP"
    at = f"at=({r.location[0]},{r.location[1]})" if r.location is not None else "at=(-,-)"
    return f"CHECK {r.name} {status} margin={r.worst_margin!r} {at}"


def write_reports(reports: list[CheckReport], txt_path=None, csv_path=None) -> None:
    reports = sorted(reports, key=lambda r: r.name)
    if txt_path is not None:
        Path(txt_path).write_text("\n".join(format_report(r) for r in reports) + "\n")
    if csv_path is not None:
        lines = ["name,passed,applicable,margin,cell,step,details"]
        for r in reports:
            cell = r.location[0] if r.location else ""
            step_i = r.location[1] if r.location else ""
            details = r.details.replace(",", ";")
            lines.append(
                f"{r.name},{r.passed},{r.applicable},{r.worst_margin!r},{cell},{step_i},{details}"
            )
        Path(csv_path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# hypothesis validation

def _with_note(details: str) -> str:
    return f"{details}; {_PRECONDITION_NOTE}" if details else _PRECONDITION_NOTE


def validate_hypotheses(
    p: ModelParams,
    src: SourceSpec,
    initial: State,
    theta_min0: float,
    eq: EquilibriumState | None = None,
    curvature_min: float | None = None,
) -> list[CheckReport]:
    """One report per validity hypothesis (H1-H6; H7-H10 when eq is given)."""
    reports: list[CheckReport] = []

    phis = np.linspace(-5.0, 6.0, 2201)
    k_vals = np.asarray(conductivity(phis, p))
    margin = float(min(np.min(k_vals - p.k_lo), np.min(p.k_hi - k_vals)))
    reports.append(CheckReport(
        "H1-conductivity-bounds", margin >= 0.0, margin,
        details="k(phi) sampled on [-5, 6]",
    ))

    thetas = theta_min0 * np.logspace(0.0, 6.0, 200)
    kd = np.asarray(decolour_rate(thetas, p))
    kr = np.asarray(recolour_rate(thetas, p))
    margin = float(min(np.min(kd), np.min(kr), np.min(p.A_d - kd), np.min(p.A_r - kr)))
    reports.append(CheckReport(
        "H2-rate-bounds", margin >= 0.0, margin,
        details=f"rates bounded on [{theta_min0}, {theta_min0 * 1e6}]",
    ))

    phis = np.linspace(-10.0, 11.0, 4201)
    f_vals = np.asarray(double_well(phis))
    margin = float(np.min(f_vals))
    reports.append(CheckReport(
        "H3-potential-nonnegative", margin >= 0.0, margin,
        details="double well sampled on [-10, 11]",
    ))

    strict = (p.rho, p.c_p, p.d_c, p.tau_phi, p.eps_interface, p.lambda_cpl,
              p.beta, p.gamma, p.A_d, p.A_r, p.E_d, p.E_r, p.R_gas, p.k_lo)
    soft = (p.alpha, p.L_c, p.L_phi, p.k_hi - p.k_lo)
    margin = float(min(min(strict), min(soft) + 1.0) if min(soft) >= 0 else min(soft))
    reports.append(CheckReport(
        "H4-parameter-signs", min(strict) > 0 and min(soft) >= 0, margin,
    ))

    h0 = src.evaluate(initial.grid, 0.0)
    ok = bool(np.all(np.isfinite(h0))) and math.isfinite(src.s_sup)
    margin = float(min(src.C0, src.s_sup))
    reports.append(CheckReport(
        "H5-source-declaration", ok and margin >= 0.0, margin,
        details=f"C0={src.C0}, s_sup={src.s_sup}",
    ))

    th0 = initial.theta.values
    c0 = initial.c.values
    ph0 = initial.phi.values
    margins = np.stack([
        np.broadcast_to(th0 - theta_min0, th0.shape),
        c0, 1.0 - c0, ph0, 1.0 - ph0,
    ])
    flat = margins.reshape(margins.shape[0], -1)
    worst_idx = np.unravel_index(int(np.argmin(flat)), flat.shape)
    margin = float(flat[worst_idx])
    ok = theta_min0 > 0 and margin >= 0.0
    reports.append(CheckReport(
        "H6-initial-data-range", ok, margin if theta_min0 > 0 else -math.inf,
        location=(int(worst_idx[1]), 0),
        details=f"theta floor {theta_min0}; worst over theta0 >= floor, c0 and phi0 in [0,1]",
    ))

    if eq is None:
        return reports

    if src.preset == "zero":
        h_abs = 0.0
    else:
        h_abs = float(np.max(np.abs(src.evaluate(initial.grid, 0.0))))
    reports.append(CheckReport(
        "H7-free-regime", h_abs == 0.0, -h_abs,
        details="external source sampled at t=0",
    ))

    res = max(abs(eq.residual_c), abs(eq.residual_phi))
    range_ok = eq.theta_bar > 0 and 0.0 <= eq.c_bar <= 1.0 and 0.0 <= eq.phi_bar <= 1.0
    tol = 1e-10
    reports.append(CheckReport(
        "H8-equilibrium-residuals", range_ok and res <= tol, tol - res,
        details=f"residual_c={eq.residual_c!r}, residual_phi={eq.residual_phi!r}",
    ))

    reports.append(CheckReport(
        "H9-equilibrium-curvature", eq.curvature > 0.0, eq.curvature,
        details=f"phi_bar={eq.phi_bar!r}",
    ))

    mean_dev = mean(initial.theta) - eq.theta_bar
    mean_tol = 1e-10 * max(1.0, abs(eq.theta_bar))
    if eq.curvature > 0:
        cm = curvature_min if curvature_min is not None else 0.5 * eq.curvature
        alpha0 = coupling_threshold(p, cm)
        margin = alpha0 - p.alpha
        ok = abs(mean_dev) <= mean_tol and p.alpha < alpha0
        details = f"mean(theta0)-theta_bar={mean_dev!r}, alpha0={alpha0!r}"
    else:
        margin = -math.inf
        ok = False
        details = "no positive curvature at the selected equilibrium root"
    reports.append(CheckReport("H10-zero-mean-weak-coupling", ok, margin, details=details))

    return reports


# ---------------------------------------------------------------------------
# ODE reduction oracle

@dataclass(frozen=True)
class OdeSeries:
    t: np.ndarray
    theta: np.ndarray
    c: np.ndarray
    phi: np.ndarray


def ode_oracle(
    theta0: float,
    c0: float,
    phi0: float,
    p: ModelParams,
    src: SourceSpec,
    t_end: float,
    n_steps: int = 10_000,
) -> OdeSeries:
    """Classical RK4 on the homogeneous reduction of the coupled system.

    With gradients gone the system collapses to three ODEs; the temperature
    equation receives the coupling terms with the colour and phase rates
    substituted in closed form.  Intended as a reference oracle, so keep
    n_steps at oracle grade (>= 1e4) when comparing against the PDE solver.
    """
    if not theta0 > 0:
        raise PositivityError(f"theta0 must be > 0, got {theta0}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if not src.uniform_in_space:
        raise ValueError("the ODE reduction needs a spatially uniform source")

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        th, cc, pp = y
        if th <= 0:
            raise PositivityLossError(
                f"temperature lost positivity in the ODE oracle at t={t}", t=t
            )
        c_dot = reaction_rate(th, cc, p)
        p_dot = (-double_well_deriv(pp) + p.lambda_cpl * (cc - pp)) / p.tau_phi
        t_dot = (src.uniform_value(t) + p.alpha * (p.L_c * c_dot + p.L_phi * p_dot)) / p.rho_cp
        return np.array([t_dot, c_dot, p_dot])

    out = np.empty((n_steps + 1, 3))
    out[0] = (theta0, c0, phi0)
    if t_end == 0:
        series = out[:1]
        return OdeSeries(np.zeros(1), series[:, 0], series[:, 1], series[:, 2])
    dt = t_end / n_steps
    y = out[0].copy()
    for k in range(n_steps):
        t = k * dt
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = y
    t_grid = np.arange(n_steps + 1) * dt
    return OdeSeries(t_grid, out[:, 0], out[:, 1], out[:, 2])


def compare_pde_vs_ode(
    p: ModelParams,
    src: SourceSpec,
    theta0: float,
    c0: float,
    phi0: float,
    grid: Grid,
    controls: StepControls,
) -> CheckReport:
    """Run the PDE solver on homogeneous data against the RK4 reduction.

    Passes when the componentwise relative deviation stays below
    max(10 dt, 1e-6); first-order-in-dt agreement is all the forward-Euler
    stepping can promise against a fourth-order reference.
    """
    initial = State(
        0.0,
        Field.full(grid, theta0),
        Field.full(grid, c0),
        Field.full(grid, phi0),
    )
    traj = run(initial, p, src, controls)
    steps = traj.n_steps
    refine = max(4, math.ceil(10_000 / max(steps, 1)))
    oracle = ode_oracle(theta0, c0, phi0, p, src, steps * controls.dt, steps * refine)

    worst = 0.0
    details = []
    for name, pde_series, ode_series in (
        ("theta", traj.theta_min, oracle.theta[::refine]),
        ("c", traj.c_min, oracle.c[::refine]),
        ("phi", traj.phi_min, oracle.phi[::refine]),
    ):
        scale = max(float(np.max(np.abs(ode_series))), 1e-30)
        dev = float(np.max(np.abs(pde_series - ode_series))) / scale
        details.append(f"{name}={dev:.3e}")
        worst = max(worst, dev)
    tol = max(10.0 * controls.dt, 1e-6)
    return CheckReport(
        "ode-oracle-agreement",
        worst <= tol,
        tol - worst,
        details=_with_note(f"relative deviations {', '.join(details)}; tol={tol:.3e}"),
    )


# ---------------------------------------------------------------------------
# grid-convergence study

def _final_fields(p, src, profile, n: int, length: float, dt: float, t_end: float):
    grid = Grid.line(n, length)
    th0, c0, ph0 = profile(grid.axis_centers(0))
    initial = State(0.0, Field(grid, th0), Field(grid, c0), Field(grid, ph0))
    controls = StepControls(dt=dt, scheme=SCHEME_EXPLICIT, t_end=t_end,
                            snapshot_every=10**9)
    traj = run(initial, p, src, controls)
    last = traj.states[-1]
    return last.theta.values, last.c.values, last.phi.values


def _restrict(fine: np.ndarray, factor: int) -> np.ndarray:
    return fine.reshape(-1, factor).mean(axis=1)


def _l2_error(sol, ref, h: float) -> float:
    total = 0.0
    for s, r in zip(sol, ref):
        d = s - r
        total += h * float(np.sum(d * d))
    return math.sqrt(total)


def convergence_study(
    p: ModelParams,
    src: SourceSpec,
    profile,
    *,
    length: float,
    t_end: float,
    grids: tuple[int, ...] = (16, 32, 64),
    dt_spatial: float,
    spatial_ref_factor: int = 4,
    n_temporal: int = 32,
    dts: tuple[float, ...] = (),
    temporal_ref_factor: int = 16,
) -> CheckReport:
    """Richardson self-convergence in h and in dt against finer reference runs.

    ``profile`` maps 1D cell centers to the initial (theta, c, phi) arrays.
    Observed spatial orders must land in [1.6, 2.4] and temporal orders in
    [0.8, 1.2]; a non-decreasing or roundoff-floor error sequence makes the
    study inconclusive rather than failed.
    """
    if len(grids) < 3:
        raise ValueError(f"need at least 3 grid levels, got {grids}")

    ref_n = grids[-1] * spatial_ref_factor
    ref = _final_fields(p, src, profile, ref_n, length, dt_spatial, t_end)
    ref_scale = max(float(np.max(np.abs(f))) for f in ref)
    spatial_errors = []
    for n in grids:
        sol = _final_fields(p, src, profile, n, length, dt_spatial, t_end)
        restricted = tuple(_restrict(f, ref_n // n) for f in ref)
        spatial_errors.append(_l2_error(sol, restricted, length / n))
    spatial_orders = [
        math.log(spatial_errors[i] / spatial_errors[i + 1]) / math.log(grids[i + 1] / grids[i])
        if spatial_errors[i + 1] > 0 else math.nan
        for i in range(len(grids) - 1)
    ]

    if not dts:
        dts = (t_end / 500, t_end / 1000, t_end / 2000)
    ref_dt = min(dts) / temporal_ref_factor
    t_ref = _final_fields(p, src, profile, n_temporal, length, ref_dt, t_end)
    temporal_errors = []
    for dt in sorted(dts, reverse=True):
        sol = _final_fields(p, src, profile, n_temporal, length, dt, t_end)
        temporal_errors.append(_l2_error(sol, t_ref, length / n_temporal))
    dts_sorted = sorted(dts, reverse=True)
    temporal_orders = [
        math.log(temporal_errors[i] / temporal_errors[i + 1]) / math.log(dts_sorted[i] / dts_sorted[i + 1])
        if temporal_errors[i + 1] > 0 else math.nan
        for i in range(len(dts_sorted) - 1)
    ]

    floor = 1e-13 * max(ref_scale, 1.0)
    details = (
        f"spatial errors {['%.3e' % e for e in spatial_errors]} orders {['%.3f' % o for o in spatial_orders]}; "
        f"temporal errors {['%.3e' % e for e in temporal_errors]} orders {['%.3f' % o for o in temporal_orders]}"
    )
    monotone = all(a > b for a, b in zip(spatial_errors, spatial_errors[1:])) and \
        all(a > b for a, b in zip(temporal_errors, temporal_errors[1:]))
    above_floor = min(spatial_errors + temporal_errors) > floor
    if not (monotone and above_floor):
        return CheckReport(
            "convergence-orders", False, math.nan, applicable=False,
            details=_with_note(f"inconclusive: {details}"),
        )

    margins = [o - SPATIAL_ORDER_RANGE[0] for o in spatial_orders]
    margins += [SPATIAL_ORDER_RANGE[1] - o for o in spatial_orders]
    margins += [o - TEMPORAL_ORDER_RANGE[0] for o in temporal_orders]
    margins += [TEMPORAL_ORDER_RANGE[1] - o for o in temporal_orders]
    worst = min(margins)
    return CheckReport(
        "convergence-orders", worst >= 0.0, worst, details=_with_note(details),
    )


# ---------------------------------------------------------------------------
# trajectory checks keyed to the proved statements

def trajectory_checks(
    traj: Trajectory,
    p: ModelParams,
    src: SourceSpec,
    theta_min0: float,
    eq: EquilibriumState | None = None,
    curvature_min: float | None = None,
) -> list[CheckReport]:
    """Evaluate every certified bound along a recorded trajectory."""
    reports: list[CheckReport] = []
    t = traj.t
    n_rows = len(t)
    eps = float(np.finfo(float).eps)
    confinement_tol = 0.0 if traj.scheme == SCHEME_EXPLICIT else IMEX_CONFINEMENT_TOL

    horizon = positivity_horizon(p, src, theta_min0)
    covered = t < horizon
    n_skipped = int(np.count_nonzero(~covered))
    if not np.any(covered):
        reports.append(CheckReport(
            "temperature-floor", False, math.nan, applicable=False,
            details=_with_note("entire run lies at or beyond the positivity horizon"),
        ))
    else:
        floor = theta_min0 - (src.C0 / p.rho_cp) * t[covered]
        margins = traj.theta_min[covered] - floor
        i = int(np.argmin(margins))
        step_idx = int(np.nonzero(covered)[0][i])
        note = f"{n_skipped} steps beyond the positivity horizon not covered" if n_skipped else ""
        reports.append(CheckReport(
            "temperature-floor", bool(margins[i] >= 0.0), float(margins[i]),
            location=(int(traj.arg_theta_min[step_idx]), step_idx),
            details=_with_note(note),
        ))

    ceiling = traj.theta0_sup + (t / p.rho_cp) * src.s_sup
    tol_round = 64.0 * eps * max(abs(traj.theta0_sup), float(np.max(np.abs(ceiling))))
    margins = ceiling + tol_round - traj.theta_max
    i = int(np.argmin(margins))
    reports.append(CheckReport(
        "temperature-ceiling", bool(margins[i] >= 0.0), float(margins[i]),
        location=(int(traj.arg_theta_max[i]), i),
        details=_with_note(f"roundoff allowance {tol_round!r}"),
    ))

    for name, lo, hi, arg_lo, arg_hi in (
        ("fraction-confinement", traj.c_min, traj.c_max, traj.arg_c_min, traj.arg_c_max),
        ("phase-confinement", traj.phi_min, traj.phi_max, traj.arg_phi_min, traj.arg_phi_max),
    ):
        lo_margin = lo
        hi_margin = 1.0 - hi
        worst_lo = int(np.argmin(lo_margin))
        worst_hi = int(np.argmin(hi_margin))
        if lo_margin[worst_lo] <= hi_margin[worst_hi]:
            worst_step, worst_cell = worst_lo, int(arg_lo[worst_lo])
            margin = float(lo_margin[worst_lo])
        else:
            worst_step, worst_cell = worst_hi, int(arg_hi[worst_hi])
            margin = float(hi_margin[worst_hi])
        reports.append(CheckReport(
            name, margin >= -confinement_tol, margin,
            location=(worst_cell, worst_step),
            details=_with_note(f"tolerance {confinement_tol!r} for scheme {traj.scheme}"),
        ))

    theta_peak = float(np.max(traj.theta_max))
    rate_cap = max(float(decolour_rate(theta_peak, p)), float(recolour_rate(theta_peak, p)))
    worst_hi = -math.inf
    worst_lo = math.inf
    loc = None
    for s_idx, state in zip(traj.snapshot_steps, traj.states):
        kd = np.asarray(decolour_rate(state.theta.values, p))
        kr = np.asarray(recolour_rate(state.theta.values, p))
        hi = float(max(np.max(kd), np.max(kr)))
        worst_lo = min(worst_lo, float(min(np.min(kd), np.min(kr))))
        if hi > worst_hi:
            worst_hi = hi
            loc = (int(np.argmax(np.maximum(kd, kr))), s_idx)
    margin = min(rate_cap - worst_hi, worst_lo)
    reports.append(CheckReport(
        "rate-bounds", margin >= 0.0, margin, location=loc,
        details=_with_note(
            f"cap {rate_cap!r} from the observed temperature range (peak {theta_peak!r})"
        ),
    ))

    drift = np.abs(traj.Q - traj.Q[0] - traj.heat_input)
    allowed = 10.0 * eps * abs(traj.Q[0]) * np.arange(n_rows)
    margins = allowed - drift
    i = int(np.argmin(margins))
    reports.append(CheckReport(
        "conservation", bool(margins[i] >= 0.0), float(margins[i]),
        location=(0, i),
        details=_with_note(f"|Q - Q0 - heat| <= 10 eps |Q0| steps; worst step {i}"),
    ))

    free_regime = bool(np.all(traj.heat_input == 0.0))
    if p.alpha == 0.0 and free_regime:
        theta_mass = traj.Q / p.rho_cp
        drift = np.abs(theta_mass - theta_mass[0])
        allowed = 10.0 * eps * abs(theta_mass[0]) * np.arange(n_rows)
        margins = allowed - drift
        i = int(np.argmin(margins))
        reports.append(CheckReport(
            "mean-conservation", bool(margins[i] >= 0.0), float(margins[i]),
            location=(0, i), details=_with_note("thermal mass conserved at alpha=0"),
        ))
    else:
        reports.append(CheckReport(
            "mean-conservation", False, math.nan, applicable=False,
            details=_with_note("only asserted for alpha=0 in the free regime"),
        ))

    if n_rows > 1:
        floor_margins = traj.source_floor_margin[1:]
        i = int(np.argmin(floor_margins))
        reports.append(CheckReport(
            "source-floor", bool(floor_margins[i] >= 0.0), float(floor_margins[i]),
            location=(0, i + 1),
            details=_with_note("discrete total source stayed above -C0"),
        ))
        ceil_margins = src.s_sup - traj.source_abs_max[1:]
        i = int(np.argmin(ceil_margins))
        reports.append(CheckReport(
            "source-ceiling", bool(ceil_margins[i] >= 0.0), float(ceil_margins[i]),
            location=(0, i + 1),
            details=_with_note("declared s_sup dominated the observed |S|"),
        ))

    if traj.energy is None or eq is None:
        reports.append(CheckReport(
            "energy-decay", False, math.nan, applicable=False,
            details=_with_note("no equilibrium attached"),
        ))
        return reports
    cm = curvature_min if curvature_min is not None else (
        0.5 * eq.curvature if eq.curvature > 0 else None
    )
    if cm is None or not eq.stable:
        reports.append(CheckReport(
            "energy-decay", False, math.nan, applicable=False,
            details=_with_note("selected equilibrium is not curvature-stable"),
        ))
        return reports
    alpha0 = coupling_threshold(p, cm)
    if p.alpha >= alpha0:
        reports.append(CheckReport(
            "energy-decay", False, math.nan, applicable=False,
            details=_with_note(
                f"alpha={p.alpha!r} is not below the coupling threshold {alpha0!r}; "
                "decay is not asserted there"
            ),
        ))
        return reports
    # a run sitting at the equilibrium has nothing to decay: energies at or
    # below the ulp-drift floor satisfy the bound vacuously
    energy_floor = 1e-24 * traj.states[0].grid.volume * max(1.0, p.rho_cp * eq.theta_bar**2)
    if float(np.max(np.abs(traj.energy))) <= energy_floor:
        reports.append(CheckReport(
            "energy-decay", True, 0.0,
            details=_with_note("energy at machine-precision floor; already at equilibrium"),
        ))
        return reports
    try:
        fit = fit_decay_rate(traj)
    except EnergyFitError as exc:
        reports.append(CheckReport(
            "energy-decay", False, -math.inf, details=_with_note(str(exc)),
        ))
        return reports
    margin = min(fit.kappa_fit, fit.monotone_frac - 1.0 + 1e-12)
    reports.append(CheckReport(
        "energy-decay",
        fit.kappa_fit > 0.0 and fit.monotone_frac == 1.0,
        margin,
        details=_with_note(fit.summary()),
    ))
    return reports
