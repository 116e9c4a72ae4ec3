"""Homogeneous stationary states of the coupled model and their classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    ModelParams,
    PositivityError,
    decolour_rate,
    double_well_curvature,
    double_well_deriv,
    recolour_rate,
)

__all__ = [
    "DegenerateEquilibriumError",
    "PhaseRootError",
    "PhaseRoot",
    "EquilibriumState",
    "equilibrium_fraction",
    "phase_roots",
    "build_equilibrium",
]

DEFAULT_TOL = 1e-10


class DegenerateEquilibriumError(ValueError):
    """Both rate products vanish, so every colour fraction is stationary."""


class PhaseRootError(ValueError):
    """No phase root found inside [0, 1]; carries the full real root set."""

    def __init__(self, message: str, real_roots: tuple[float, ...] = ()):
        super().__init__(message)
        self.real_roots = real_roots


@dataclass(frozen=True)
class PhaseRoot:
    phi: float
    curvature: float

    @property
    def stable(self) -> bool:
        return self.curvature > 0


@dataclass(frozen=True)
class EquilibriumState:
    """Stationary triple (theta_bar, c_bar, phi_bar) with residual bookkeeping.

    ``stable`` records the sign of the double-well curvature at the selected
    phase root (H9); ``candidates`` lists every admissible root, ascending.
    """

    theta_bar: float
    c_bar: float
    phi_bar: float
    residual_c: float
    residual_phi: float
    curvature: float
    stable: bool
    candidates: tuple[PhaseRoot, ...] = ()


def equilibrium_fraction(theta_bar: float, p: ModelParams) -> float:
    """Stationary colour fraction gamma K_r / (beta K_d + gamma K_r) at theta_bar."""
    if not theta_bar > 0:
        raise PositivityError(f"theta_bar must be > 0, got {theta_bar}")
    kd = p.beta * decolour_rate(theta_bar, p)
    kr = p.gamma * recolour_rate(theta_bar, p)
    denom = kd + kr
    if denom == 0.0:
        raise DegenerateEquilibriumError(
            f"both rate products vanish at theta_bar={theta_bar}; any fraction is stationary"
        )
    return kr / denom


def _cubic(phi: float, lam: float, c_bar: float) -> float:
    # Horner form of phi^3 - 3/2 phi^2 + (1/2 + lam) phi - lam c_bar
    return ((phi - 1.5) * phi + (0.5 + lam)) * phi - lam * c_bar


def _cubic_deriv(phi: float, lam: float) -> float:
    return (3.0 * phi - 3.0) * phi + (0.5 + lam)


def _polish(lo: float, hi: float, lam: float, c_bar: float, tol: float) -> float:
    """Bisection to a 1e-3 bracket, then bracket-safeguarded Newton to |residual| <= tol."""
    f_lo = _cubic(lo, lam, c_bar)
    for _ in range(200):
        if hi - lo <= 1e-3:
            break
        mid = 0.5 * (lo + hi)
        f_mid = _cubic(mid, lam, c_bar)
        if f_mid == 0.0:
            return mid
        if (f_lo < 0) == (f_mid < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(100):
        fx = _cubic(x, lam, c_bar)
        if abs(fx) <= tol:
            return x
        dfx = _cubic_deriv(x, lam)
        step_ok = dfx != 0.0
        if step_ok:
            x_new = x - fx / dfx
            step_ok = lo <= x_new <= hi
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if (fx < 0) == (f_lo < 0):
            lo = x
        else:
            hi = x
        x = x_new
    return x


def phase_roots(c_bar: float, lambda_cpl: float, tol: float = 1e-12) -> list[float]:
    """All roots in [0, 1] of the stationary phase relation, sorted ascending.

    The relation "potential force balances lambda (c_bar - phi)" expands to
    the cubic phi^3 - 3/2 phi^2 + (1/2 + lambda) phi - lambda c_bar = 0.
    Roots are located by a sign-change scan on a fine partition (so one to
    three roots are all found), then polished by bisection plus safeguarded
    Newton to the requested residual tolerance.
    """
    if not 0.0 <= c_bar <= 1.0:
        raise ValueError(f"c_bar must lie in [0, 1], got {c_bar}")
    if not lambda_cpl > 0:
        raise ValueError(f"lambda_cpl must be > 0 (H4), got {lambda_cpl}")

    m = 4096
    xs = np.linspace(0.0, 1.0, m + 1)
    fs = np.array([_cubic(float(x), lambda_cpl, c_bar) for x in xs])

    roots: list[float] = []
    for i in range(m):
        if fs[i] == 0.0:
            roots.append(float(xs[i]))
        elif (fs[i] < 0) != (fs[i + 1] < 0) and fs[i + 1] != 0.0:
            roots.append(_polish(float(xs[i]), float(xs[i + 1]), lambda_cpl, c_bar, tol))
    if fs[m] == 0.0:
        roots.append(1.0)

    deduped: list[float] = []
    for r in sorted(roots):
        if not deduped or r - deduped[-1] > 1e-9:
            deduped.append(r)
    if not deduped:
        # includes the full real root set so the caller can see what was missed
        all_roots = np.roots([1.0, -1.5, 0.5 + lambda_cpl, -lambda_cpl * c_bar])
        real = tuple(sorted(float(r.real) for r in all_roots if abs(r.imag) < 1e-9))
        raise PhaseRootError(
            f"no stationary phase value in [0, 1] for c_bar={c_bar}, lambda={lambda_cpl}; "
            f"real roots: {real}",
            real_roots=real,
        )
    return deduped


def build_equilibrium(theta_bar: float, p: ModelParams, tol: float = DEFAULT_TOL) -> EquilibriumState:
    """Compose the stationary fraction and phase root into an equilibrium record.

    When several roots exist the stable one with the largest curvature is
    preferred, ties broken toward the root nearest c_bar, then toward the
    smallest phi.  Residuals are re-substitutions into the stationary
    relations and should sit at roundoff level.
    """
    c_bar = equilibrium_fraction(theta_bar, p)
    candidates = tuple(
        PhaseRoot(phi=r, curvature=float(double_well_curvature(r)))
        for r in phase_roots(c_bar, p.lambda_cpl, tol=min(tol, 1e-12))
    )
    selected = min(
        candidates,
        key=lambda r: (not r.stable, -r.curvature, abs(r.phi - c_bar), r.phi),
    )
    residual_c = float(
        -p.beta * decolour_rate(theta_bar, p) * c_bar
        + p.gamma * recolour_rate(theta_bar, p) * (1.0 - c_bar)
    )
    residual_phi = float(
        double_well_deriv(selected.phi) - p.lambda_cpl * (c_bar - selected.phi)
    )
    return EquilibriumState(
        theta_bar=float(theta_bar),
        c_bar=float(c_bar),
        phi_bar=selected.phi,
        residual_c=residual_c,
        residual_phi=residual_phi,
        curvature=selected.curvature,
        stable=selected.stable,
        candidates=candidates,
    )
