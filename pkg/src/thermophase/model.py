"""Closed-form model functions: kinetics, double-well potential, conductivity,
comparison bounds and the weak-coupling threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "PositivityError",
    "ModelParams",
    "SourceSpec",
    "decolour_rate",
    "recolour_rate",
    "double_well",
    "double_well_deriv",
    "double_well_curvature",
    "conductivity",
    "CONDUCTIVITY_LAWS",
    "reaction_rate",
    "positivity_horizon",
    "temperature_floor",
    "temperature_ceiling",
    "coupling_threshold",
]


class PositivityError(ValueError):
    """Temperature is zero or negative where a strictly positive value is required.

    The Arrhenius rates are singular at theta = 0, so every kinetic evaluation
    guards against nonpositive temperatures.
    """


@dataclass(frozen=True)
class ModelParams:
    """Physical and kinetic constants of the coupled heat/colour/phase model.

    Units are SI unless the run works in reduced units; the code only relies
    on internal consistency.  Validity hypotheses H1 and H4 are enforced at
    construction time:

    * rho, c_p, d_c, tau_phi, eps_interface, lambda_cpl, beta, gamma > 0 (H4)
    * alpha, L_c, L_phi >= 0 (H4)
    * 0 < k_lo <= k_hi (H1)
    * A_d, A_r, E_d, E_r, R_gas > 0 (Arrhenius form)
    """

    rho: float            # mass density
    c_p: float            # specific heat capacity
    d_c: float            # colour-fraction diffusivity
    tau_phi: float        # phase relaxation time
    eps_interface: float  # interface width parameter
    lambda_cpl: float     # colour -> phase relaxation coefficient
    beta: float           # decolouration intensity
    gamma: float          # recolouration intensity
    alpha: float          # internal thermal coupling intensity
    L_c: float            # latent coefficient of the colour transformation
    L_phi: float          # latent coefficient of the phase transition
    A_d: float            # decolouration pre-exponential factor
    A_r: float            # recolouration pre-exponential factor
    E_d: float            # decolouration activation energy
    E_r: float            # recolouration activation energy
    R_gas: float          # universal gas constant
    k_lo: float           # lower conductivity bound
    k_hi: float           # upper conductivity bound
    k_law: str = "smoothstep"

    def __post_init__(self) -> None:
        positive = {
            "rho": self.rho,
            "c_p": self.c_p,
            "d_c": self.d_c,
            "tau_phi": self.tau_phi,
            "eps_interface": self.eps_interface,
            "lambda_cpl": self.lambda_cpl,
            "beta": self.beta,
            "gamma": self.gamma,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ValueError(f"{name} must be > 0 (H4), got {value}")
        for name, value in (("alpha", self.alpha), ("L_c", self.L_c), ("L_phi", self.L_phi)):
            if not value >= 0:
                raise ValueError(f"{name} must be >= 0 (H4), got {value}")
        if not 0 < self.k_lo <= self.k_hi:
            raise ValueError(
                f"conductivity bounds must satisfy 0 < k_lo <= k_hi (H1), "
                f"got k_lo={self.k_lo}, k_hi={self.k_hi}"
            )
        for name, value in (
            ("A_d", self.A_d),
            ("A_r", self.A_r),
            ("E_d", self.E_d),
            ("E_r", self.E_r),
            ("R_gas", self.R_gas),
        ):
            if not value > 0:
                raise ValueError(f"{name} must be > 0 (Arrhenius kinetics), got {value}")
        if self.k_law not in CONDUCTIVITY_LAWS:
            raise ValueError(f"unknown conductivity law {self.k_law!r}; choose from {sorted(CONDUCTIVITY_LAWS)}")

    @property
    def rho_cp(self) -> float:
        """Volumetric heat capacity rho * c_p."""
        return self.rho * self.c_p


@dataclass(frozen=True)
class SourceSpec:
    """External heat source with its declared bounds.

    ``h_ext(*coords, t)`` evaluates the source at cell centers; preset sources
    are spatially uniform and expose ``time_profile`` for the homogeneous ODE
    reduction.  ``C0`` is the declared lower-bound constant for the total
    source S (H5: S >= -C0); ``s_sup`` is the declared upper bound on |S| over
    the run.  Both declarations are re-checked a posteriori against discrete
    increments by the solver and the verification suite.
    """

    h_ext: Callable[..., "float | np.ndarray"]
    C0: float = 0.0
    s_sup: float = 0.0
    preset: str = "custom"
    preset_args: tuple[float, ...] = ()
    time_profile: Callable[[float], float] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not self.C0 >= 0:
            raise ValueError(f"C0 must be >= 0 (H5), got {self.C0}")
        if not self.s_sup >= 0:
            raise ValueError(f"s_sup must be >= 0, got {self.s_sup}")

    @property
    def uniform_in_space(self) -> bool:
        return self.time_profile is not None

    def uniform_value(self, t: float) -> float:
        """Source value at time t for spatially uniform sources."""
        if self.time_profile is None:
            raise ValueError("source is not declared spatially uniform")
        return float(self.time_profile(t))

    def evaluate(self, grid, t: float) -> np.ndarray:
        """Source values on every cell of ``grid`` at time ``t``."""
        if self.time_profile is not None:
            return np.full(grid.shape, float(self.time_profile(t)))
        raw = np.asarray(self.h_ext(*grid.centers(), t), dtype=float)
        return np.broadcast_to(raw, grid.shape).copy()

    @classmethod
    def zero(cls) -> "SourceSpec":
        return cls(h_ext=lambda *args: 0.0, C0=0.0, s_sup=0.0,
                   preset="zero", time_profile=lambda t: 0.0)

    @classmethod
    def constant(cls, value: float, C0: float | None = None,
                 s_sup: float | None = None) -> "SourceSpec":
        v = float(value)
        return cls(
            h_ext=lambda *args: v,
            C0=max(0.0, -v) if C0 is None else C0,
            s_sup=abs(v) if s_sup is None else s_sup,
            preset="constant",
            preset_args=(v,),
            time_profile=lambda t: v,
        )

    @classmethod
    def gaussian_pulse(cls, amp: float, t0: float, sigma: float,
                       C0: float | None = None, s_sup: float | None = None) -> "SourceSpec":
        if sigma <= 0:
            raise ValueError(f"pulse width sigma must be > 0, got {sigma}")
        amp, t0, sigma = float(amp), float(t0), float(sigma)

        def profile(t: float) -> float:
            z = (t - t0) / sigma
            return amp * math.exp(-0.5 * z * z)

        return cls(
            h_ext=lambda *args: profile(args[-1]),
            C0=max(0.0, -amp) if C0 is None else C0,
            s_sup=abs(amp) if s_sup is None else s_sup,
            preset="gaussian-pulse",
            preset_args=(amp, t0, sigma),
            time_profile=profile,
        )


def _check_theta(theta) -> np.ndarray:
    arr = np.asarray(theta, dtype=float)
    if np.any(arr <= 0):
        bad = float(np.min(arr))
        raise PositivityError(f"temperature must be > 0, got minimum {bad}")
    return arr


def _maybe_scalar(arr: np.ndarray, out: np.ndarray):
    return float(out) if arr.ndim == 0 else out


def decolour_rate(theta, p: ModelParams):
    """Arrhenius decolouration rate A_d * exp(-E_d / (R * theta)), theta > 0."""
    arr = _check_theta(theta)
    return _maybe_scalar(arr, p.A_d * np.exp(-p.E_d / (p.R_gas * arr)))


def recolour_rate(theta, p: ModelParams):
    """Arrhenius recolouration rate A_r * exp(-E_r / (R * theta)), theta > 0."""
    arr = _check_theta(theta)
    return _maybe_scalar(arr, p.A_r * np.exp(-p.E_r / (p.R_gas * arr)))


def double_well(phi):
    """Double-well energy density phi^2 (1-phi)^2 / 4, minima at 0 and 1."""
    arr = np.asarray(phi, dtype=float)
    one_m = 1.0 - arr
    return _maybe_scalar(arr, 0.25 * arr * arr * one_m * one_m)


def double_well_deriv(phi):
    """First derivative phi (1-phi) (1-2 phi) / 2 of the double well."""
    arr = np.asarray(phi, dtype=float)
    return _maybe_scalar(arr, 0.5 * arr * (1.0 - arr) * (1.0 - 2.0 * arr))


def double_well_curvature(phi):
    """Second derivative 1/2 - 3 phi + 3 phi^2 of the double well.

    This is the exact second derivative of the quartic above.  Its roots
    (3 +- sqrt(3)) / 6 delimit the concavity window around the local maximum
    at phi = 1/2.
    """
    arr = np.asarray(phi, dtype=float)
    return _maybe_scalar(arr, 0.5 - 3.0 * arr + 3.0 * arr * arr)


def _k_smoothstep(phi, p):
    t = np.clip(np.asarray(phi, dtype=float), 0.0, 1.0)
    s = t * t * (3.0 - 2.0 * t)
    return p.k_lo + (p.k_hi - p.k_lo) * s


def _k_linear(phi, p):
    t = np.clip(np.asarray(phi, dtype=float), 0.0, 1.0)
    return p.k_lo + (p.k_hi - p.k_lo) * t


def _k_constant(phi, p):
    arr = np.asarray(phi, dtype=float)
    return np.full_like(arr, 0.5 * (p.k_lo + p.k_hi))


# Clamped smoothstep is the only law that is C^1 across the clamp boundaries;
# the alternatives exist for comparison runs, not for H1-grade verification.
CONDUCTIVITY_LAWS = {
    "smoothstep": _k_smoothstep,
    "linear": _k_linear,
    "constant": _k_constant,
}


def conductivity(phi, p: ModelParams, law: str | None = None):
    """Phase-dependent thermal conductivity, bounded in [k_lo, k_hi] for all phi."""
    chosen = p.k_law if law is None else law
    try:
        fn = CONDUCTIVITY_LAWS[chosen]
    except KeyError:
        raise ValueError(f"unknown conductivity law {chosen!r}; choose from {sorted(CONDUCTIVITY_LAWS)}") from None
    arr = np.asarray(phi, dtype=float)
    return _maybe_scalar(arr, fn(arr, p))


def reaction_rate(theta, c, p: ModelParams):
    """Net colour-fraction rate -beta K_d(theta) c + gamma K_r(theta) (1 - c)."""
    arr_t = _check_theta(theta)
    arr_c = np.asarray(c, dtype=float)
    out = -p.beta * decolour_rate(arr_t, p) * arr_c + p.gamma * recolour_rate(arr_t, p) * (1.0 - arr_c)
    return float(out) if (arr_t.ndim == 0 and arr_c.ndim == 0) else out


def positivity_horizon(p: ModelParams, src: SourceSpec, theta_min0: float) -> float:
    """Time up to which the affine temperature floor stays positive.

    Returns rho c_p theta_min0 / C0, or ``math.inf`` when C0 = 0 (a total
    source that never undershoots zero keeps the floor constant forever).
    """
    if not theta_min0 > 0:
        raise PositivityError(f"theta_min0 must be > 0, got {theta_min0}")
    if src.C0 == 0.0:
        return math.inf
    return p.rho_cp * theta_min0 / src.C0


def temperature_floor(t: float, p: ModelParams, src: SourceSpec, theta_min0: float) -> float:
    """Affine lower comparison bound theta_min0 - (C0 / rho c_p) t, valid for t < horizon."""
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    horizon = positivity_horizon(p, src, theta_min0)
    if t >= horizon:
        raise ValueError(f"floor is not positive at t={t} (horizon {horizon})")
    return theta_min0 - (src.C0 / p.rho_cp) * t


def temperature_ceiling(t: float, p: ModelParams, theta0_sup: float, s_sup: float) -> float:
    """Affine upper comparison bound theta0_sup + (t / rho c_p) s_sup."""
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    return theta0_sup + (t / p.rho_cp) * s_sup


def coupling_threshold(p: ModelParams, curvature_min: float) -> float:
    """Weak-coupling threshold on alpha below which the relative energy is coercive.

    Minimum of four closed forms; any term whose latent coefficient vanishes
    imposes no restriction and is treated as +inf exactly (``math.inf``, never
    an overflowed sentinel).  ``curvature_min`` is the lower curvature bound
    of the residual potential near the equilibrium phase value and must be
    positive (H9).
    """
    if not curvature_min > 0:
        raise ValueError(f"curvature_min must be > 0 (H9), got {curvature_min}")
    rho_cp = p.rho_cp
    terms = []
    if p.L_c > 0:
        terms.append(math.sqrt(rho_cp) / (math.sqrt(2.0) * p.L_c))
        terms.append(rho_cp * math.sqrt(p.d_c * p.k_lo) / (2.0 * p.k_hi * p.L_c))
    else:
        terms.extend([math.inf, math.inf])
    if p.L_phi > 0:
        terms.append(math.sqrt(rho_cp * (2.0 * curvature_min + p.tau_phi)) / (math.sqrt(2.0) * p.L_phi))
        terms.append(rho_cp * p.eps_interface * math.sqrt(p.k_lo) / (2.0 * p.k_hi * p.L_phi))
    else:
        terms.extend([math.inf, math.inf])
    return min(terms)
