from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np
import pytest

from thermophase import (
    EnergyFitError,
    Field,
    Grid,
    PerturbationState,
    State,
    build_equilibrium,
    check_coercivity,
    decay_ingredients,
    fit_decay_rate,
    reaction_lipschitz_bound,
    reaction_rate,
    relative_energy,
    residual_potential,
    residual_potential_bounds,
)
from thermophase.grid import poincare_constant

from conftest import TINY, desk_params


def make_pert(grid, u, v, w):
    return PerturbationState(Field(grid, u), Field(grid, v), Field(grid, w))


@pytest.fixture
def eq(params):
    return build_equilibrium(1.0, params)


class TestResidualPotential:
    def test_vanishes_at_origin(self):
        assert residual_potential(0.0, 0.3) == 0.0

    def test_no_linear_part(self):
        h = 1e-6
        for phi_bar in (0.0, 0.3, 0.9):
            slope = (residual_potential(h, phi_bar) - residual_potential(-h, phi_bar)) / (2 * h)
            assert abs(slope) < 1e-9

    def test_small_offset_curvature_limit(self):
        # quarter is half the curvature of the well at its left minimum
        ratio = residual_potential(1e-4, 0.0) / 1e-8
        assert abs(ratio - 0.25) < 1e-4

    def test_bounds_enclose_ratio(self, rng):
        for _ in range(100):
            phi_bar = float(rng.uniform(0.0, 1.0))
            z_lo, z_hi = sorted(rng.uniform(-0.2, 0.2, size=2))
            m, cap = residual_potential_bounds(phi_bar, float(z_lo), float(z_hi))
            zs = np.linspace(z_lo, z_hi, 101)
            zs = zs[np.abs(zs) > 1e-12]
            ratio = residual_potential(zs, phi_bar) / (zs * zs)
            assert np.all(ratio >= m - 1e-12)
            assert np.all(ratio <= cap + 1e-12)

    def test_bounds_invalid_interval(self):
        with pytest.raises(ValueError):
            residual_potential_bounds(0.5, 0.2, -0.2)


class TestRelativeEnergy:
    def test_zero_perturbation_is_zero(self, params, eq):
        g = Grid.line(16, 1.0)
        rep = relative_energy(make_pert(g, np.zeros(16), np.zeros(16), np.zeros(16)), params, eq)
        assert rep.total == 0.0
        assert all(v == 0.0 for v in rep.parts().values())

    def test_single_active_term(self, eq, rng):
        p = desk_params(alpha=0.0)
        g = Grid.line(32, 1.0)
        u = rng.uniform(-1.0, 1.0, size=32)
        rep = relative_energy(make_pert(g, u, np.zeros(32), np.zeros(32)), p, eq)
        norm_sq = float(np.sum(u * u)) * g.cell_volume
        assert rep.total == pytest.approx(0.5 * p.rho_cp * norm_sq, rel=1e-13)
        assert rep.c_term == 0.0 and rep.phi_term == 0.0
        assert rep.grad_term == 0.0 and rep.potential_term == 0.0
        assert rep.cross_theta_c == 0.0 and rep.cross_theta_phi == 0.0

    def test_homogeneous_phase_offset(self):
        # E = (tau/2) d^2 V + G(d) V with everything else zero
        p = desk_params(alpha=0.0, tau_phi=0.8)
        eq0 = build_equilibrium(1.0, desk_params(gamma=TINY))
        assert eq0.phi_bar == 0.0
        g = Grid.line(16, 2.0)
        delta = 0.05
        rep = relative_energy(make_pert(g, np.zeros(16), np.zeros(16),
                                        np.full(16, delta)), p, eq0)
        volume = 2.0
        expected = 0.5 * p.tau_phi * delta**2 * volume + residual_potential(delta, 0.0) * volume
        assert rep.total == pytest.approx(expected, rel=1e-13)
        assert rep.grad_term == 0.0

    def test_parts_sum_to_total(self, params, eq, rng):
        g = Grid.line(24, 1.0)
        pert = make_pert(g, rng.uniform(-0.1, 0.1, 24), rng.uniform(-0.1, 0.1, 24),
                         rng.uniform(-0.1, 0.1, 24))
        rep = relative_energy(pert, params, eq)
        assert rep.total == pytest.approx(sum(rep.parts().values()), rel=1e-12, abs=1e-15)

    def test_continuity_in_single_cell(self, params, eq):
        g = Grid.line(16, 1.0)
        base = make_pert(g, np.zeros(16), np.zeros(16), np.zeros(16))
        e0 = relative_energy(base, params, eq).total
        for delta in (1e-3, 1e-4, 1e-5):
            u = np.zeros(16)
            u[7] = delta
            e1 = relative_energy(make_pert(g, u, np.zeros(16), np.zeros(16)), params, eq).total
            assert abs(e1 - e0) <= 10.0 * delta

    def test_nonnegative_without_coupling(self, eq, rng):
        # equality only at the zero perturbation for small phase deviations
        p = desk_params(alpha=0.0)
        g = Grid.line(24, 1.0)
        for _ in range(100):
            u = rng.uniform(-0.05, 0.05, 24)
            v = rng.uniform(-0.05, 0.05, 24)
            w = rng.uniform(-0.05, 0.05, 24)
            total = relative_energy(make_pert(g, u, v, w), p, eq).total
            assert total >= 0.0
            if max(np.max(np.abs(u)), np.max(np.abs(v)), np.max(np.abs(w))) > 1e-6:
                assert total > 0.0

    def test_from_state(self, params, eq):
        g = Grid.line(8, 1.0)
        state = State(0.0, Field.full(g, eq.theta_bar + 0.1),
                      Field.full(g, eq.c_bar), Field.full(g, eq.phi_bar))
        pert = PerturbationState.from_state(state, eq)
        assert np.allclose(pert.theta_dev.values, 0.1)
        assert np.all(pert.c_dev.values == 0.0)


class TestCrossTermBound:
    def test_young_inequality_numerically(self, rng):
        p = desk_params(alpha=0.05)
        g = Grid.line(32, 1.0)
        vol = g.cell_volume
        for _ in range(200):
            u = rng.uniform(-1.0, 1.0, 32)
            v = rng.uniform(-1.0, 1.0, 32)
            cross = abs(p.alpha * p.L_c * float(np.sum(u * v)) * vol)
            bound = (0.25 * p.rho_cp * float(np.sum(u * u)) * vol
                     + (p.alpha * p.L_c) ** 2 / p.rho_cp * float(np.sum(v * v)) * vol)
            assert cross <= bound * (1.0 + 1e-12)


class TestCoercivity:
    def test_zero_perturbation_holds(self, params, eq):
        g = Grid.line(16, 1.0)
        rep = check_coercivity(make_pert(g, np.zeros(16), np.zeros(16), np.zeros(16)),
                               params, eq, curvature_min=0.5 * eq.curvature)
        assert rep.holds
        assert rep.margin == 0.0

    def test_alpha_zero_diagonal_bound(self, eq, rng):
        p = desk_params(alpha=0.0)
        g = Grid.line(32, 1.0)
        for _ in range(50):
            pert = make_pert(g,
                             rng.uniform(-0.01, 0.01, 32),
                             rng.uniform(-0.01, 0.01, 32),
                             rng.uniform(-0.01, 0.01, 32))
            w = pert.phi_dev.values
            m_eff, _ = residual_potential_bounds(eq.phi_bar, float(w.min()), float(w.max()))
            rep = check_coercivity(pert, p, eq, curvature_min=m_eff)
            assert rep.holds
            # the diagonal coefficients bound the constants at alpha = 0
            assert rep.c_lower == pytest.approx(
                min(0.5 * p.rho_cp, 0.5, 0.5 * p.tau_phi + m_eff,
                    0.5 * p.eps_interface**2), rel=1e-14)

    def test_below_threshold_random_perturbations(self, eq, rng):
        for _ in range(50):
            m_probe = 0.5 * eq.curvature
            from thermophase import coupling_threshold
            alpha0 = coupling_threshold(desk_params(alpha=0.0), m_probe)
            p = desk_params(alpha=float(rng.uniform(0.0, 0.9)) * alpha0)
            g = Grid.line(24, 1.0)
            pert = make_pert(g,
                             rng.uniform(-0.01, 0.01, 24),
                             rng.uniform(-0.01, 0.01, 24),
                             rng.uniform(-0.01, 0.01, 24))
            w = pert.phi_dev.values
            m_eff, _ = residual_potential_bounds(eq.phi_bar, float(w.min()), float(w.max()))
            rep = check_coercivity(pert, p, eq, curvature_min=min(m_eff, m_probe))
            assert rep.holds

    def test_far_above_threshold_fails_on_adversarial_pair(self, eq):
        # parameters where the L2 cross-term condition is the binding part of
        # the threshold: pushing alpha far above it voids the lower constant
        from thermophase import coupling_threshold
        m = 0.5 * eq.curvature
        base = dict(d_c=100.0, eps_interface=10.0, k_lo=1.0, k_hi=1.0,
                    L_c=1.0, L_phi=1.0)
        alpha0 = coupling_threshold(desk_params(alpha=0.0, **base), m)
        assert alpha0 == pytest.approx(math.sqrt(0.5), rel=1e-12)
        p = desk_params(alpha=10.0 * alpha0, **base)
        g = Grid.line(16, 1.0)
        u = np.full(16, 0.01)
        pert = make_pert(g, u, u.copy(), np.zeros(16))
        with pytest.warns(UserWarning, match="threshold"):
            rep = check_coercivity(pert, p, eq, curvature_min=m)
        assert rep.energy < 0.0
        assert not rep.holds

    def test_matches_quadratic_form_eigenvalue_threshold(self, eq):
        # homogeneous (u, v, 0): energy per volume is a 2x2 quadratic form;
        # it loses positivity exactly when alpha L_c crosses
        # sqrt(rho c_p) * ... the smallest eigenvalue crossing zero
        p0 = desk_params(alpha=0.0)
        g = Grid.line(8, 1.0)
        crossing = None
        for alpha in np.linspace(0.0, 5.0, 201):
            m = np.array([
                [0.5 * p0.rho_cp, -0.5 * alpha * p0.L_c],
                [-0.5 * alpha * p0.L_c, 0.5],
            ])
            if np.linalg.eigvalsh(m)[0] < 0:
                crossing = alpha
                break
        assert crossing is not None
        # analytic crossing of the determinant: alpha L_c = sqrt(rho c_p)
        assert crossing * p0.L_c == pytest.approx(math.sqrt(p0.rho_cp), abs=0.05)
        u = np.full(8, 0.01)
        pert = make_pert(g, u, u.copy(), np.zeros(8))
        with pytest.warns(UserWarning):
            rep = check_coercivity(pert, desk_params(alpha=crossing * 1.5), eq,
                                   curvature_min=0.5 * eq.curvature)
        assert rep.energy < 0.0
        assert not rep.holds

    def test_requires_positive_curvature(self, params, eq):
        g = Grid.line(8, 1.0)
        pert = make_pert(g, np.zeros(8), np.zeros(8), np.zeros(8))
        with pytest.raises(ValueError, match="H9"):
            check_coercivity(pert, params, eq, curvature_min=0.0)


class TestLipschitzBound:
    def test_vanishing_prefactors_give_zero(self):
        p = desk_params(A_d=TINY, A_r=TINY)
        assert reaction_lipschitz_bound(0.5, 2.0, p) <= 1e-300

    def test_zero_activation_energy_closed_form(self):
        p = desk_params(E_d=TINY, E_r=TINY, A_d=0.7, A_r=1.9, beta=1.3, gamma=0.4)
        expected = p.beta * p.A_d + p.gamma * p.A_r
        assert reaction_lipschitz_bound(0.5, 2.0, p) == pytest.approx(expected, rel=1e-12)

    def test_monotone_in_domain(self, params):
        wide = reaction_lipschitz_bound(0.3, 3.0, params)
        narrow = reaction_lipschitz_bound(0.8, 1.5, params)
        point = reaction_lipschitz_bound(1.0, 1.0, params)
        assert point <= narrow * (1.0 + 1e-12)
        assert narrow <= wide * (1.0 + 1e-12)

    def test_certificate_on_random_pairs(self, params, rng):
        lo, hi = 0.5, 2.0
        bound = reaction_lipschitz_bound(lo, hi, params)
        thetas = rng.uniform(lo, hi, size=(10_000, 2))
        cs = rng.uniform(0.0, 1.0, size=(10_000, 2))
        r1 = reaction_rate(thetas[:, 0], cs[:, 0], params)
        r2 = reaction_rate(thetas[:, 1], cs[:, 1], params)
        lhs = np.abs(r1 - r2)
        rhs = bound * (np.abs(thetas[:, 0] - thetas[:, 1]) + np.abs(cs[:, 0] - cs[:, 1]))
        violations = int(np.count_nonzero(lhs > rhs * (1.0 + 1e-12)))
        assert violations == 0

    def test_invalid_interval(self, params):
        with pytest.raises(ValueError):
            reaction_lipschitz_bound(0.0, 1.0, params)
        with pytest.raises(ValueError):
            reaction_lipschitz_bound(2.0, 1.0, params)


class TestDecayFit:
    def test_exact_exponential(self):
        t = np.linspace(0.0, 5.0, 2001)
        traj = SimpleNamespace(t=t, energy=2.0 * np.exp(-3.0 * t))
        fit = fit_decay_rate(traj)
        assert fit.kappa_fit == pytest.approx(3.0, abs=1e-10)
        assert fit.r_squared >= 1.0 - 1e-12
        assert fit.monotone_frac == 1.0
        assert fit.fit_window == (0.5, 4.5)

    def test_constant_series(self):
        t = np.linspace(0.0, 5.0, 101)
        fit = fit_decay_rate(SimpleNamespace(t=t, energy=np.full(101, 7.0)))
        assert abs(fit.kappa_fit) < 1e-12
        assert fit.r_squared == 1.0
        assert fit.monotone_frac == 1.0

    def test_nonpositive_energy_rejected(self):
        t = np.linspace(0.0, 5.0, 101)
        e = np.exp(-t)
        e[50] = 0.0
        with pytest.raises(EnergyFitError, match="positive"):
            fit_decay_rate(SimpleNamespace(t=t, energy=e))

    def test_missing_series_rejected(self):
        with pytest.raises(ValueError, match="energy"):
            fit_decay_rate(SimpleNamespace(t=np.arange(10.0), energy=None))

    def test_ingredients_reported(self, params):
        g = Grid.line(16, 2.0)
        parts = decay_ingredients(params, g, 0.1)
        assert parts["k_lo"] == params.k_lo
        assert parts["poincare"] == poincare_constant(g)
        assert set(parts) == {"k_lo", "d_c", "eps_sq", "lambda_cpl",
                              "curvature_min", "poincare"}
