"""Tour of the model's closed forms: Arrhenius rates, the double well and its
derivatives, and the bounded conductivity laws.

Run:  python3 demos/01_closed_forms.py
Writes plots into demos/out/.
"""

import math
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from thermophase import (
    CONDUCTIVITY_LAWS,
    ModelParams,
    conductivity,
    decolour_rate,
    double_well,
    double_well_curvature,
    double_well_deriv,
    recolour_rate,
)

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

p = ModelParams(
    rho=1.0, c_p=1.0, d_c=0.2, tau_phi=1.0, eps_interface=0.1, lambda_cpl=0.5,
    beta=1.0, gamma=1.0, alpha=0.03, L_c=0.5, L_phi=0.5,
    A_d=1.0, A_r=1.2, E_d=2.0, E_r=1.0, R_gas=1.0, k_lo=0.8, k_hi=1.2,
)

# --- kinetic rates --------------------------------------------------------
theta = np.linspace(0.2, 8.0, 400)
kd = decolour_rate(theta, p)
kr = recolour_rate(theta, p)
print("Arrhenius rates saturate at their prefactors:")
print(f"  K_d(8) = {kd[-1]:.4f}  (A_d = {p.A_d})")
print(f"  K_r(8) = {kr[-1]:.4f}  (A_r = {p.A_r})")
print(f"  both vanish toward theta -> 0+: K_d(0.2) = {kd[0]:.3e}")

fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(theta, kd, label="decolour rate")
ax.plot(theta, kr, label="recolour rate")
ax.axhline(p.A_d, ls=":", c="C0", lw=1)
ax.axhline(p.A_r, ls=":", c="C1", lw=1)
ax.set(xlabel="temperature", ylabel="rate", title="Arrhenius kinetics")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "rates.png", dpi=120)

# --- double well ----------------------------------------------------------
phi = np.linspace(-0.4, 1.4, 600)
root_lo = (3.0 - math.sqrt(3.0)) / 6.0
root_hi = (3.0 + math.sqrt(3.0)) / 6.0
print("\nDouble well: minima at 0 and 1, barrier 1/64 at 1/2.")
print(f"  curvature sign window: ({root_lo:.5f}, {root_hi:.5f}) is concave")

fig, axes = plt.subplots(1, 3, figsize=(11, 3.2))
for ax, values, name in zip(
    axes,
    (double_well(phi), double_well_deriv(phi), double_well_curvature(phi)),
    ("energy density", "force", "curvature"),
):
    ax.plot(phi, values)
    ax.axhline(0.0, c="k", lw=0.6)
    ax.set(xlabel="phase", title=name)
axes[2].axvspan(root_lo, root_hi, color="orange", alpha=0.2)
fig.tight_layout()
fig.savefig(OUT / "double_well.png", dpi=120)

# --- conductivity laws ----------------------------------------------------
phi = np.linspace(-0.5, 1.5, 400)
fig, ax = plt.subplots(figsize=(6, 4))
for law in sorted(CONDUCTIVITY_LAWS):
    ax.plot(phi, conductivity(phi, p, law=law) + (0.0 if law == "smoothstep" else 0.0),
            label=law)
ax.axhline(p.k_lo, ls=":", c="gray")
ax.axhline(p.k_hi, ls=":", c="gray")
ax.set(xlabel="phase", ylabel="conductivity", title="bounded conductivity laws")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "conductivity.png", dpi=120)

print(f"\nk stays inside [{p.k_lo}, {p.k_hi}] for every law and every phase value.")
print(f"plots written to {OUT}/")
