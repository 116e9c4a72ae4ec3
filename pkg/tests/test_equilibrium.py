from __future__ import annotations

import math

import numpy as np
import pytest

from thermophase import (
    DegenerateEquilibriumError,
    build_equilibrium,
    decolour_rate,
    double_well_curvature,
    double_well_deriv,
    equilibrium_fraction,
    phase_roots,
    recolour_rate,
)

from conftest import TINY, desk_params


def cubic(phi, lam, c_bar):
    # independent expansion of the stationary phase relation
    return phi**3 - 1.5 * phi**2 + (0.5 + lam) * phi - lam * c_bar


class TestEquilibriumFraction:
    def test_balanced_rates_give_half(self):
        p = desk_params(A_d=1.0, A_r=1.0, E_d=2.0, E_r=2.0, beta=1.0, gamma=1.0)
        assert equilibrium_fraction(1.7, p) == 0.5

    def test_vanishing_decolouration_gives_one(self):
        assert equilibrium_fraction(1.0, desk_params(beta=TINY)) == 1.0

    def test_vanishing_recolouration_gives_zero(self):
        assert equilibrium_fraction(1.0, desk_params(gamma=TINY)) == 0.0

    def test_degenerate_rates_raise(self):
        # both exponentials underflow to exactly zero
        p = desk_params(E_d=2000.0, E_r=2000.0)
        with pytest.raises(DegenerateEquilibriumError):
            equilibrium_fraction(1.0, p)

    def test_stays_in_unit_interval(self, rng):
        for _ in range(200):
            p = desk_params(
                beta=float(rng.uniform(0.01, 10)),
                gamma=float(rng.uniform(0.01, 10)),
                A_d=float(rng.uniform(0.1, 5)),
                A_r=float(rng.uniform(0.1, 5)),
            )
            c_bar = equilibrium_fraction(float(rng.uniform(0.2, 5.0)), p)
            assert 0.0 <= c_bar <= 1.0

    def test_invariant_under_joint_rate_rescaling(self, rng):
        for _ in range(50):
            theta = float(rng.uniform(0.3, 3.0))
            s = float(rng.uniform(0.1, 50.0))
            p = desk_params(beta=0.7, gamma=1.3)
            ps = desk_params(beta=0.7 * s, gamma=1.3 * s)
            assert equilibrium_fraction(theta, ps) == pytest.approx(
                equilibrium_fraction(theta, p), rel=1e-14)

    def test_nonpositive_temperature_rejected(self, params):
        with pytest.raises(ValueError):
            equilibrium_fraction(0.0, params)


class TestPhaseRoots:
    def test_endpoint_roots(self):
        assert 0.0 in phase_roots(0.0, 0.5)
        assert 1.0 in phase_roots(1.0, 0.5)

    def test_symmetric_fraction_has_middle_root(self):
        roots = phase_roots(0.5, 0.5)
        assert any(abs(r - 0.5) < 1e-12 for r in roots)
        assert double_well_curvature(0.5) == -0.25

    def test_three_roots_below_quarter_coupling(self):
        lam = 0.1
        roots = phase_roots(0.5, lam)
        assert len(roots) == 3
        # factorization (phi - 1/2)(phi^2 - phi + lam) gives the outer pair
        lo = 0.5 * (1.0 - math.sqrt(1.0 - 4.0 * lam))
        hi = 0.5 * (1.0 + math.sqrt(1.0 - 4.0 * lam))
        assert roots[0] == pytest.approx(lo, abs=1e-10)
        assert roots[2] == pytest.approx(hi, abs=1e-10)

    def test_roots_sorted_and_residuals_small(self, rng):
        for _ in range(100):
            c_bar = float(rng.uniform(0.0, 1.0))
            lam = float(rng.uniform(0.01, 5.0))
            roots = phase_roots(c_bar, lam)
            assert roots == sorted(roots)
            for r in roots:
                assert 0.0 <= r <= 1.0
                assert abs(cubic(r, lam, c_bar)) <= 1e-12

    def test_root_count_matches_independent_sign_scan(self, rng):
        for _ in range(100):
            c_bar = float(rng.uniform(0.0, 1.0))
            lam = float(rng.uniform(0.01, 2.0))
            roots = phase_roots(c_bar, lam)
            xs = np.linspace(0.0, 1.0, 6001)
            vals = cubic(xs, lam, c_bar)
            crossings = int(np.count_nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0))
            crossings += int(np.count_nonzero(vals == 0.0))
            assert len(roots) == crossings

    def test_invalid_inputs(self):
        with pytest.raises(ValueError, match="c_bar"):
            phase_roots(1.5, 0.5)
        with pytest.raises(ValueError, match="lambda"):
            phase_roots(0.5, 0.0)


class TestBuildEquilibrium:
    def test_fully_recoloured_branch(self):
        eq = build_equilibrium(1.0, desk_params(beta=TINY))
        assert (eq.c_bar, eq.phi_bar) == (1.0, 1.0)
        assert eq.residual_c == 0.0
        assert eq.residual_phi == 0.0
        assert eq.stable and eq.curvature == 0.5

    def test_fully_bleached_branch(self):
        eq = build_equilibrium(1.0, desk_params(gamma=TINY))
        assert (eq.c_bar, eq.phi_bar) == (0.0, 0.0)
        assert eq.residual_c == 0.0
        assert eq.residual_phi == 0.0
        assert eq.stable and eq.curvature == 0.5

    def test_degenerate_propagates(self):
        with pytest.raises(DegenerateEquilibriumError):
            build_equilibrium(1.0, desk_params(E_d=2000.0, E_r=2000.0))

    def test_residuals_satisfy_stationary_relations(self, rng):
        for _ in range(30):
            p = desk_params(
                beta=float(rng.uniform(0.2, 3.0)),
                gamma=float(rng.uniform(0.2, 3.0)),
                lambda_cpl=float(rng.uniform(0.05, 2.0)),
            )
            theta_bar = float(rng.uniform(0.4, 3.0))
            eq = build_equilibrium(theta_bar, p)
            res_c = (-p.beta * decolour_rate(theta_bar, p) * eq.c_bar
                     + p.gamma * recolour_rate(theta_bar, p) * (1.0 - eq.c_bar))
            res_phi = double_well_deriv(eq.phi_bar) - p.lambda_cpl * (eq.c_bar - eq.phi_bar)
            assert abs(res_c) <= 1e-10
            assert abs(res_phi) <= 1e-10
            assert eq.residual_c == res_c
            assert eq.residual_phi == res_phi

    def test_multiple_stable_roots_selection_policy(self):
        # symmetric fraction: two stable outer roots; the policy prefers the
        # stable root with the largest curvature and lists the alternates
        p = desk_params(A_d=1.0, A_r=1.0, E_d=2.0, E_r=2.0, lambda_cpl=0.1)
        eq = build_equilibrium(1.0, p)
        assert eq.c_bar == 0.5
        assert len(eq.candidates) == 3
        stable = [r for r in eq.candidates if r.stable]
        assert len(stable) == 2
        assert eq.stable
        assert eq.curvature == max(r.curvature for r in stable)
        assert eq.phi_bar in {r.phi for r in stable}

    def test_unstable_only_root_flagged(self):
        # strong coupling pins the single root near c_bar = 1/2, inside the
        # concave window of the double well
        p = desk_params(A_d=1.0, A_r=1.0, E_d=2.0, E_r=2.0, lambda_cpl=3.0)
        eq = build_equilibrium(1.0, p)
        assert len(eq.candidates) == 1
        assert not eq.stable
        assert eq.curvature < 0.0
