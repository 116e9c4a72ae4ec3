"""Where the homogeneous system comes to rest.

Sweeps the stationary colour fraction across temperature, then shows how the
stationary phase roots move (and appear or vanish) as the colour-phase
relaxation strength changes.

Run:  python3 demos/02_equilibrium_map.py
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from thermophase import ModelParams, build_equilibrium, equilibrium_fraction, phase_roots

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def params(lam=0.5):
    return ModelParams(
        rho=1.0, c_p=1.0, d_c=0.2, tau_phi=1.0, eps_interface=0.1, lambda_cpl=lam,
        beta=1.0, gamma=1.0, alpha=0.03, L_c=0.5, L_phi=0.5,
        A_d=1.0, A_r=1.2, E_d=2.0, E_r=1.0, R_gas=1.0, k_lo=0.8, k_hi=1.2,
    )


# --- stationary fraction vs temperature ------------------------------------
thetas = np.linspace(0.3, 5.0, 300)
fractions = [equilibrium_fraction(t, params()) for t in thetas]
print("Stationary colour fraction rises with temperature for these kinetics:")
print(f"  c_bar(0.3) = {fractions[0]:.4f}  ->  c_bar(5.0) = {fractions[-1]:.4f}")

fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(thetas, fractions)
ax.set(xlabel="stationary temperature", ylabel="stationary colour fraction",
       title="rate balance across temperature")
fig.tight_layout()
fig.savefig(OUT / "fraction_map.png", dpi=120)

# --- phase roots vs relaxation strength -------------------------------------
lams = np.linspace(0.02, 1.0, 160)
c_bar = 0.5
fig, ax = plt.subplots(figsize=(6, 4))
for lam in lams:
    for root in phase_roots(c_bar, float(lam)):
        ax.plot(lam, root, ".", ms=2, c="C0")
ax.set(xlabel="relaxation strength", ylabel="stationary phase roots",
       title=f"root structure at colour fraction {c_bar}")
fig.tight_layout()
fig.savefig(OUT / "phase_roots.png", dpi=120)
print("\nBelow relaxation strength 1/4 the balanced fraction admits three "
      "phase roots; above it only the middle (unstable) one survives.")

# --- assembled equilibria ---------------------------------------------------
for theta_bar in (0.7, 1.0, 2.0):
    eq = build_equilibrium(theta_bar, params())
    print(f"theta_bar={theta_bar:4.1f}: c_bar={eq.c_bar:.4f} "
          f"phi_bar={eq.phi_bar:.4f} stable={eq.stable} "
          f"curvature={eq.curvature:+.4f} ({len(eq.candidates)} root(s))")
print(f"plots written to {OUT}/")
