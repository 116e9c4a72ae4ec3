"""Time integration of the coupled system with discrete-increment coupling.

The explicit scheme updates the fields in the order colour fraction, phase,
temperature.  The two time-derivative couplings feeding the heat equation are
substituted as exact discrete increments (c_new - c_old, phi_new - phi_old),
which is what makes the combined quantity

    Q = rho c_p int(theta) - alpha L_c int(c) - alpha L_phi int(phi)

change by exactly dt * int(H_ext) per step: the diffusion fluxes telescope to
zero across the zero-flux boundary and the coupling terms cancel against the
increments by construction.  Under the step-size bound of ``cfl_limits`` every
explicit update is a convex combination of admissible values, which yields the
discrete comparison principles (temperature floor, [0,1] confinement) without
tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .equilibrium import EquilibriumState
from .grid import (
    Field,
    Grid,
    State,
    _div_k_grad_diag,
    _div_k_grad_values,
    _integral_values,
    _laplacian_values,
)
from .model import (
    ModelParams,
    SourceSpec,
    conductivity,
    decolour_rate,
    double_well_deriv,
    reaction_rate,
    recolour_rate,
)
from .stability import energy_total

__all__ = [
    "SCHEME_EXPLICIT",
    "SCHEME_IMEX",
    "PositivityLossError",
    "LinearSolveError",
    "CflError",
    "StepControls",
    "Trajectory",
    "cfl_limits",
    "conserved_quantity",
    "step",
    "run",
    "write_diagnostics_csv",
    "DIAGNOSTIC_COLUMNS",
]

SCHEME_EXPLICIT = "explicit-monotone"
SCHEME_IMEX = "imex"
_SCHEMES = (SCHEME_EXPLICIT, SCHEME_IMEX)

# sup over [0,1] of |second derivative of the double well|
_SUP_CURVATURE = 0.5

DIAGNOSTIC_COLUMNS = (
    "t", "theta_min", "theta_max", "c_min", "c_max", "phi_min", "phi_max", "Q", "E",
)


class PositivityLossError(RuntimeError):
    """Temperature dropped to or below zero during a step."""

    def __init__(self, message: str, cell: int | None = None,
                 t: float | None = None, step: int | None = None):
        super().__init__(message)
        self.cell = cell
        self.t = t
        self.step = step


class LinearSolveError(RuntimeError):
    """Conjugate-gradient solve of an implicit stage did not converge."""


class CflError(ValueError):
    """Requested explicit step size exceeds the monotonicity bound."""


@dataclass(frozen=True)
class StepControls:
    dt: float
    scheme: str = SCHEME_EXPLICIT
    t_end: float = 1.0
    snapshot_every: int = 100

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {_SCHEMES}")
        if self.snapshot_every < 1:
            raise ValueError(f"snapshot_every must be >= 1, got {self.snapshot_every}")


@dataclass
class Trajectory:
    """Snapshots plus per-step diagnostics of one run.

    Diagnostics cover every step even when snapshots are thinned; row k
    corresponds to time ``t[k] = k * dt``.  ``source_floor_margin`` and
    ``source_abs_max`` describe the discrete total source of the step that
    produced each row (NaN on row 0).
    """

    states: list[State]
    snapshot_steps: list[int]
    t: np.ndarray
    theta_min: np.ndarray
    theta_max: np.ndarray
    c_min: np.ndarray
    c_max: np.ndarray
    phi_min: np.ndarray
    phi_max: np.ndarray
    arg_theta_min: np.ndarray
    arg_theta_max: np.ndarray
    arg_c_min: np.ndarray
    arg_c_max: np.ndarray
    arg_phi_min: np.ndarray
    arg_phi_max: np.ndarray
    Q: np.ndarray
    heat_input: np.ndarray
    source_floor_margin: np.ndarray
    source_abs_max: np.ndarray
    energy: np.ndarray | None
    scheme: str
    dt: float
    theta0_sup: float
    equilibrium: EquilibriumState | None = None

    @property
    def n_steps(self) -> int:
        return len(self.t) - 1


def cfl_limits(p: ModelParams, g: Grid, theta_max_est: float) -> float:
    """Largest explicit step size certified monotone, with a 0.9 safety factor.

    Minimum over the diffusion limits h^2 / (2 dim D) for the three
    diffusivities, the reaction limit 1 / (beta K_d + gamma K_r) at the
    estimated peak temperature, and the phase limit tau_phi / (lambda + 1/2).
    """
    if not theta_max_est > 0:
        raise ValueError(f"theta_max_est must be > 0, got {theta_max_est}")
    h_min = min(g.h)
    h_sq = h_min * h_min
    limits = []
    for diffusivity in (p.k_hi / p.rho_cp, p.d_c, p.eps_interface**2 / p.tau_phi):
        limits.append(h_sq / (2.0 * g.dim * diffusivity))
    rate_sum = p.beta * decolour_rate(theta_max_est, p) + p.gamma * recolour_rate(theta_max_est, p)
    if rate_sum > 0:
        limits.append(1.0 / rate_sum)
    limits.append(p.tau_phi / (p.lambda_cpl + _SUP_CURVATURE))
    return 0.9 * min(limits)


def conserved_quantity(state: State, p: ModelParams) -> float:
    """Q = rho c_p int(theta) - alpha L_c int(c) - alpha L_phi int(phi)."""
    vol = state.grid.cell_volume
    return math.fsum([
        p.rho_cp * _integral_values(state.theta.values, vol),
        -p.alpha * p.L_c * _integral_values(state.c.values, vol),
        -p.alpha * p.L_phi * _integral_values(state.phi.values, vol),
    ])


def _explicit_update(th, c, ph, t, dt, p: ModelParams, src: SourceSpec, grid: Grid):
    lap_c = _laplacian_values(c, grid.h)
    lap_ph = _laplacian_values(ph, grid.h)
    c_new = c + dt * (p.d_c * lap_c + reaction_rate(th, c, p))
    ph_new = ph + (dt / p.tau_phi) * (
        p.eps_interface**2 * lap_ph - double_well_deriv(ph) + p.lambda_cpl * (c - ph)
    )
    h_vals = src.evaluate(grid, t)
    k_vals = np.asarray(conductivity(ph, p))
    coupling = p.L_c * (c_new - c) + p.L_phi * (ph_new - ph)
    th_new = th + (dt / p.rho_cp) * (_div_k_grad_values(k_vals, th, grid.h) + h_vals) \
        + (p.alpha / p.rho_cp) * coupling
    s_disc = h_vals + (p.alpha / dt) * coupling
    return th_new, c_new, ph_new, h_vals, s_disc


def _cg_solve(apply_op, diag: np.ndarray, b: np.ndarray, label: str,
              rtol: float = 1e-10) -> np.ndarray:
    shape = b.shape
    size = b.size
    diag_flat = diag.ravel()

    def matvec(x):
        return apply_op(x.reshape(shape)).ravel()

    op = LinearOperator((size, size), matvec=matvec, dtype=float)
    pre = LinearOperator((size, size), matvec=lambda r: r / diag_flat, dtype=float)
    x0 = b.ravel() / diag_flat
    x, info = cg(op, b.ravel(), x0=x0, rtol=rtol, atol=0.0, M=pre, maxiter=10 * size)
    if info != 0:
        raise LinearSolveError(f"{label} solve did not converge (info={info})")
    return x.reshape(shape)


def _imex_update(th, c, ph, t, dt, p: ModelParams, src: SourceSpec, grid: Grid):
    """Backward-Euler diffusion, explicit reactions and couplings.

    Each implicit stage is a symmetric positive definite solve handled by
    diagonally preconditioned conjugate gradients at relative residual 1e-10;
    the matrices have unit row sums away from the reaction terms, so the
    stages preserve cell-value bounds up to the solver residual.
    """
    h = grid.h
    neighbor_weight = _div_k_grad_diag(np.ones(grid.shape), h)

    b_c = c + dt * reaction_rate(th, c, p)
    c_new = _cg_solve(
        lambda x: x - dt * p.d_c * _laplacian_values(x, h),
        1.0 + dt * p.d_c * neighbor_weight,
        b_c,
        "colour-fraction",
    )

    mobility = dt * p.eps_interface**2 / p.tau_phi
    b_ph = ph + (dt / p.tau_phi) * (-double_well_deriv(ph) + p.lambda_cpl * (c - ph))
    ph_new = _cg_solve(
        lambda x: x - mobility * _laplacian_values(x, h),
        1.0 + mobility * neighbor_weight,
        b_ph,
        "phase",
    )

    h_vals = src.evaluate(grid, t)
    k_vals = np.asarray(conductivity(ph, p))
    coupling = p.L_c * (c_new - c) + p.L_phi * (ph_new - ph)
    b_th = p.rho_cp * th + dt * h_vals + p.alpha * coupling
    th_new = _cg_solve(
        lambda x: p.rho_cp * x - dt * _div_k_grad_values(k_vals, x, h),
        p.rho_cp + dt * _div_k_grad_diag(k_vals, h),
        b_th,
        "temperature",
    )
    s_disc = h_vals + (p.alpha / dt) * coupling
    return th_new, c_new, ph_new, h_vals, s_disc


_KERNELS = {SCHEME_EXPLICIT: _explicit_update, SCHEME_IMEX: _imex_update}


def step(state: State, p: ModelParams, src: SourceSpec, controls: StepControls) -> State:
    """Advance one step.  The caller is responsible for dt <= cfl_limits when
    the scheme is explicit; ``run`` enforces that bound for whole runs."""
    if state.theta.min() <= 0:
        raise PositivityLossError(
            f"temperature must be > 0 before stepping, got min {state.theta.min()}",
            cell=int(np.argmin(state.theta.values)),
            t=state.t,
        )
    kernel = _KERNELS[controls.scheme]
    th, c, ph, _, _ = kernel(
        state.theta.values, state.c.values, state.phi.values,
        state.t, controls.dt, p, src, state.grid,
    )
    if float(np.min(th)) <= 0:
        raise PositivityLossError(
            f"temperature lost positivity at t={state.t + controls.dt}",
            cell=int(np.argmin(th)),
            t=state.t + controls.dt,
        )
    g = state.grid
    return State(state.t + controls.dt, Field(g, th), Field(g, c), Field(g, ph))


def run(
    initial: State,
    p: ModelParams,
    src: SourceSpec,
    controls: StepControls,
    equilibrium: EquilibriumState | None = None,
) -> Trajectory:
    """Integrate from ``initial`` to ``t_end``, recording diagnostics every step.

    The number of steps is round(t_end / dt); choose commensurate values when
    hitting t_end exactly matters.  With an equilibrium attached the relative
    energy is recorded alongside the extrema.  Two runs with identical inputs
    produce bitwise-identical trajectories.
    """
    grid = initial.grid
    if initial.theta.min() <= 0:
        raise PositivityLossError(
            f"initial temperature must be > 0 cellwise, got min {initial.theta.min()}",
            cell=int(np.argmin(initial.theta.values)),
            t=initial.t,
            step=0,
        )
    theta0_sup = initial.theta.max()
    if controls.scheme == SCHEME_EXPLICIT:
        theta_hat = theta0_sup + controls.t_end * src.s_sup / p.rho_cp
        limit = cfl_limits(p, grid, theta_hat)
        if controls.dt > limit * (1.0 + 1e-12):
            raise CflError(
                f"dt={controls.dt} exceeds the explicit monotonicity bound {limit} "
                f"(peak-temperature estimate {theta_hat})"
            )

    th = initial.theta.values.copy()
    c = initial.c.values.copy()
    ph = initial.phi.values.copy()
    dt = controls.dt
    n_steps = int(round(controls.t_end / dt)) if controls.t_end > 0 else 0
    kernel = _KERNELS[controls.scheme]

    rows: dict[str, list] = {name: [] for name in (
        "t", "theta_min", "theta_max", "c_min", "c_max", "phi_min", "phi_max",
        "arg_theta_min", "arg_theta_max", "arg_c_min", "arg_c_max",
        "arg_phi_min", "arg_phi_max", "Q", "heat_input",
        "source_floor_margin", "source_abs_max",
    )}
    energies: list[float] | None = [] if equilibrium is not None else None
    states: list[State] = []
    snapshot_steps: list[int] = []
    vol = grid.cell_volume
    heat_acc = 0.0

    def record(t_now: float, floor_margin: float, s_abs: float) -> None:
        rows["t"].append(t_now)
        rows["theta_min"].append(float(np.min(th)))
        rows["theta_max"].append(float(np.max(th)))
        rows["c_min"].append(float(np.min(c)))
        rows["c_max"].append(float(np.max(c)))
        rows["phi_min"].append(float(np.min(ph)))
        rows["phi_max"].append(float(np.max(ph)))
        rows["arg_theta_min"].append(int(np.argmin(th)))
        rows["arg_theta_max"].append(int(np.argmax(th)))
        rows["arg_c_min"].append(int(np.argmin(c)))
        rows["arg_c_max"].append(int(np.argmax(c)))
        rows["arg_phi_min"].append(int(np.argmin(ph)))
        rows["arg_phi_max"].append(int(np.argmax(ph)))
        rows["Q"].append(math.fsum([
            p.rho_cp * _integral_values(th, vol),
            -p.alpha * p.L_c * _integral_values(c, vol),
            -p.alpha * p.L_phi * _integral_values(ph, vol),
        ]))
        rows["heat_input"].append(heat_acc)
        rows["source_floor_margin"].append(floor_margin)
        rows["source_abs_max"].append(s_abs)
        if energies is not None:
            energies.append(energy_total(
                th - equilibrium.theta_bar,
                c - equilibrium.c_bar,
                ph - equilibrium.phi_bar,
                p, equilibrium.phi_bar, grid,
            ))

    def snapshot(step_index: int) -> None:
        states.append(State(
            step_index * dt,
            Field(grid, th.copy()), Field(grid, c.copy()), Field(grid, ph.copy()),
        ))
        snapshot_steps.append(step_index)

    record(0.0, math.nan, math.nan)
    snapshot(0)

    for k in range(n_steps):
        t_now = k * dt
        try:
            th_new, c_new, ph_new, h_vals, s_disc = kernel(th, c, ph, t_now, dt, p, src, grid)
        except LinearSolveError as exc:
            raise LinearSolveError(f"step {k + 1}: {exc}") from exc
        if float(np.min(th_new)) <= 0:
            raise PositivityLossError(
                f"temperature lost positivity at step {k + 1} (t={(k + 1) * dt}); "
                "the step size may be too large or the run extends beyond the "
                "certified horizon",
                cell=int(np.argmin(th_new)),
                t=(k + 1) * dt,
                step=k + 1,
            )
        heat_acc += dt * _integral_values(h_vals, vol)
        th, c, ph = th_new, c_new, ph_new
        record((k + 1) * dt,
               float(np.min(s_disc)) + src.C0,
               float(np.max(np.abs(s_disc))))
        if (k + 1) % controls.snapshot_every == 0 or k + 1 == n_steps:
            snapshot(k + 1)

    return Trajectory(
        states=states,
        snapshot_steps=snapshot_steps,
        t=np.asarray(rows["t"]),
        theta_min=np.asarray(rows["theta_min"]),
        theta_max=np.asarray(rows["theta_max"]),
        c_min=np.asarray(rows["c_min"]),
        c_max=np.asarray(rows["c_max"]),
        phi_min=np.asarray(rows["phi_min"]),
        phi_max=np.asarray(rows["phi_max"]),
        arg_theta_min=np.asarray(rows["arg_theta_min"], dtype=int),
        arg_theta_max=np.asarray(rows["arg_theta_max"], dtype=int),
        arg_c_min=np.asarray(rows["arg_c_min"], dtype=int),
        arg_c_max=np.asarray(rows["arg_c_max"], dtype=int),
        arg_phi_min=np.asarray(rows["arg_phi_min"], dtype=int),
        arg_phi_max=np.asarray(rows["arg_phi_max"], dtype=int),
        Q=np.asarray(rows["Q"]),
        heat_input=np.asarray(rows["heat_input"]),
        source_floor_margin=np.asarray(rows["source_floor_margin"]),
        source_abs_max=np.asarray(rows["source_abs_max"]),
        energy=np.asarray(energies) if energies is not None else None,
        scheme=controls.scheme,
        dt=dt,
        theta0_sup=theta0_sup,
        equilibrium=equilibrium,
    )


def write_diagnostics_csv(traj: Trajectory, path) -> None:
    """Columns t, theta_min, theta_max, c_min, c_max, phi_min, phi_max, Q, E;
    the E column is empty when no equilibrium was attached."""
    lines = [",".join(DIAGNOSTIC_COLUMNS)]
    for i in range(len(traj.t)):
        cells = [
            repr(float(traj.t[i])),
            repr(float(traj.theta_min[i])),
            repr(float(traj.theta_max[i])),
            repr(float(traj.c_min[i])),
            repr(float(traj.c_max[i])),
            repr(float(traj.phi_min[i])),
            repr(float(traj.phi_max[i])),
            repr(float(traj.Q[i])),
            repr(float(traj.energy[i])) if traj.energy is not None else "",
        ]
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
