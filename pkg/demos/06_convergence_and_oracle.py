"""Trust, then measure: the two independent accuracy checks.

First the homogeneous reduction: on constant-in-space data the PDE stepper
must track a fourth-order ODE integration of the same three-variable system,
with first-order-in-dt deviation.  Then Richardson self-convergence on a
smooth profile measures the observed orders directly.

Run:  python3 demos/06_convergence_and_oracle.py
"""

import math
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from thermophase import (
    Grid,
    ModelParams,
    SourceSpec,
    StepControls,
    cfl_limits,
    compare_pde_vs_ode,
    convergence_study,
    ode_oracle,
)

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

p = ModelParams(
    rho=1.0, c_p=1.0, d_c=0.2, tau_phi=1.0, eps_interface=0.1, lambda_cpl=0.5,
    beta=1.0, gamma=1.0, alpha=0.03, L_c=0.5, L_phi=0.5,
    A_d=1.0, A_r=1.2, E_d=2.0, E_r=1.0, R_gas=1.0, k_lo=0.8, k_hi=1.2,
)
src = SourceSpec.zero()

# --- homogeneous reduction ---------------------------------------------------
series = ode_oracle(1.1, 0.2, 0.8, p, src, t_end=4.0, n_steps=20_000)
print("homogeneous relaxation toward the rate balance:")
print(f"  c: 0.2 -> {series.c[-1]:.4f}   phi: 0.8 -> {series.phi[-1]:.4f}   "
      f"theta: 1.1 -> {series.theta[-1]:.4f}")

grid = Grid.line(8, 1.0)
for dt in (2e-3, 1e-3):
    rep = compare_pde_vs_ode(p, src, 1.1, 0.2, 0.8, grid, StepControls(dt=dt, t_end=1.0))
    dev = max(10.0 * dt, 1e-6) - rep.worst_margin
    print(f"  dt={dt:.0e}: worst relative deviation from the oracle {dev:.3e} "
          f"({'PASS' if rep.passed else 'FAIL'})")

fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(series.t, series.theta, label="temperature")
ax.plot(series.t, series.c, label="colour fraction")
ax.plot(series.t, series.phi, label="phase")
ax.set(xlabel="t", title="homogeneous reduction (RK4 oracle)")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "ode_oracle.png", dpi=120)

# --- observed orders ---------------------------------------------------------
def profile(x):
    length = float(x[-1] + x[0])
    return (1.0 + 0.1 * np.cos(math.pi * x / length),
            0.5 + 0.3 * np.cos(math.pi * x / length),
            0.5 + 0.3 * np.cos(2.0 * math.pi * x / length))


t_end = 0.05
report = convergence_study(
    p, src, profile, length=1.0, t_end=t_end,
    grids=(16, 32, 64), dt_spatial=cfl_limits(p, Grid.line(256, 1.0), 1.1),
    spatial_ref_factor=4, n_temporal=32,
    dts=(t_end / 250, t_end / 500, t_end / 1000), temporal_ref_factor=16,
)
print("\nself-convergence against finer reference runs:")
print(f"  {report.details.split(';')[0]}")
print(f"  {report.details.split(';')[1].strip()}")
print(f"  within brackets: {report.passed}")
print(f"plots written to {OUT}/")
