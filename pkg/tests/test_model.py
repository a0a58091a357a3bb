import math

import numpy as np
import pytest

from sinhpoisson.torus import Field, TorusGrid, dirichlet_energy, mu1, zero_field
from sinhpoisson.model import (
    Parameters,
    TwoAtomMeasure,
    atoms_to_pair,
    functional_J,
    gradient_J,
    hessian_apply,
    hessian_rayleigh_min,
    mt_threshold,
)
from conftest import skewed_random, smooth_random

PI = math.pi


class TestParameters:
    def test_kappa_identity_exact_for_binary_volumes(self):
        for vol in (1.0, 2.0, 0.5, 4.0):
            p = Parameters(30.0, 5.0, 0.5, volume=vol)
            assert p.kappa * vol == 30.0 - 5.0

    def test_kappa_identity_general_volume(self):
        p = Parameters(17.0, 3.0, 0.7, volume=1.5)
        assert abs(p.kappa * 1.5 - 14.0) <= 1e-14 * 14.0

    def test_validation(self):
        with pytest.raises(ValueError):
            Parameters(-1.0, 0.0, 0.5)
        with pytest.raises(ValueError):
            Parameters(1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            Parameters(1.0, 1.0, 1.5)


class TestTwoAtomMeasure:
    def test_rejects_degenerate_tau(self):
        for tau in (0.0, 1.0):
            with pytest.raises(ValueError):
                TwoAtomMeasure(10.0, tau, 0.5)

    def test_atoms_to_pair_examples(self):
        p = atoms_to_pair(TwoAtomMeasure(100.0, 0.5, 1.0))
        assert (p.lambda1, p.lambda2) == (50.0, 50.0)
        p = atoms_to_pair(TwoAtomMeasure(100.0, 0.3, 0.5))
        assert abs(p.lambda1 - 30.0) <= 1e-12
        assert abs(p.lambda2 - 35.0) <= 1e-12

    def test_atoms_to_pair_roundtrip(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            lam = float(rng.uniform(1.0, 200.0))
            tau = float(rng.uniform(0.05, 0.95))
            gamma = float(rng.uniform(0.05, 1.0))
            p = atoms_to_pair(TwoAtomMeasure(lam, tau, gamma))
            lam_back = p.lambda1 + p.lambda2 / gamma
            tau_back = p.lambda1 / lam_back
            assert abs(lam_back - lam) <= 1e-12 * lam
            assert abs(tau_back - tau) <= 1e-12


class TestMtThreshold:
    @staticmethod
    def _brute_force(m: TwoAtomMeasure) -> float:
        """Oracle: enumerate every admissible nonempty atom subset."""
        atoms_pos = [(1.0, m.tau)]
        atoms_neg = [(-m.gamma, 1.0 - m.tau)]
        ratios = []
        for atoms in (atoms_pos, atoms_neg):
            for pick in range(1, 2 ** len(atoms)):
                chosen = [a for i, a in enumerate(atoms) if pick >> i & 1]
                mass = sum(w for _, w in chosen)
                moment = sum(a * w for a, w in chosen)
                ratios.append(mass / moment**2)
        return 8.0 * PI * min(ratios)

    def test_symmetric_case(self):
        m = TwoAtomMeasure(1.0, 0.5, 1.0)
        assert abs(mt_threshold(m) - 16 * PI) <= 1e-12 * 16 * PI
        assert abs(mt_threshold(m) - self._brute_force(m)) <= 1e-12 * 16 * PI

    def test_half_gamma_case(self):
        m = TwoAtomMeasure(1.0, 0.5, 0.5)
        expected = 8 * PI * min(2.0, 8.0)
        assert abs(mt_threshold(m) - expected) <= 1e-12 * expected
        assert abs(mt_threshold(m) - self._brute_force(m)) <= 1e-12 * expected

    def test_agrees_with_brute_force_on_grid(self):
        for gamma in (0.2, 0.5, 0.8, 1.0):
            for tau in (0.1, 0.3, 0.5, 0.7, 0.9):
                m = TwoAtomMeasure(1.0, tau, gamma)
                assert abs(mt_threshold(m) - self._brute_force(m)) <= 1e-12 * mt_threshold(m)

    def test_limit_toward_tau_one(self):
        gamma = 0.5
        taus = [0.9, 0.99, 0.999, 0.9999]
        vals = [mt_threshold(TwoAtomMeasure(1.0, t, gamma)) for t in taus]
        assert all(b < a for a, b in zip(vals, vals[1:]))  # decreasing along 1/tau
        assert abs(vals[-1] - 8 * PI / 0.9999) <= 1e-9


class TestFunctional:
    def test_zero_field_gives_zero_on_unit_torus(self, grid64):
        p = Parameters(30.0, 5.0, 0.5)
        assert functional_J(zero_field(grid64), p) == 0.0

    def test_gamma_one_swap_symmetry(self, grid64):
        rng = np.random.default_rng(1)
        p = Parameters(30.0, 5.0, 1.0)
        for _ in range(5):
            v = smooth_random(grid64, rng, scale=1.5)
            a = functional_J(v, p)
            b = functional_J(Field(grid64, -v.values, project=True), p.swapped())
            assert abs(a - b) <= 1e-12 * max(abs(a), 1.0)

    def test_overflow_policy(self, grid64):
        # amplitudes far beyond exp overflow stay finite through max-shift
        rng = np.random.default_rng(2)
        v = smooth_random(grid64, rng, scale=900.0)
        p = Parameters(30.0, 5.0, 0.5)
        assert math.isfinite(functional_J(v, p))
        assert np.all(np.isfinite(gradient_J(v, p).values))

    def test_translation_invariance(self, grid64):
        rng = np.random.default_rng(3)
        p = Parameters(30.0, 5.0, 0.5)
        v = smooth_random(grid64, rng, scale=1.3)
        j0 = functional_J(v, p)
        for shift in ((5, 0), (0, 11), (17, 23)):
            w = Field(grid64, np.roll(v.values, shift, axis=(0, 1)), project=True)
            assert abs(functional_J(w, p) - j0) <= 1e-12 * max(abs(j0), 1.0)


class TestGradient:
    def test_zero_field_is_critical_exactly(self, grid64):
        p = Parameters(30.0, 5.0, 0.5)
        g = gradient_J(zero_field(grid64), p)
        assert g.sup_norm() == 0.0

    def test_first_variation_vanishes_at_zero(self, grid64):
        p = Parameters(12.0, 7.0, 0.8)
        g = gradient_J(zero_field(grid64), p)
        rng = np.random.default_rng(4)
        phi = smooth_random(grid64, rng)
        assert grid64.integrate(g.values * phi.values) == 0.0

    def test_finite_difference_convergence_order(self, grid64):
        p = Parameters(30.0, 5.0, 0.5)
        rng = np.random.default_rng(12345)
        hs = np.array([1e-3, 1e-4, 1e-5])
        for _ in range(10):
            v = smooth_random(grid64, rng, 3, 1.0)
            phi = skewed_random(grid64, rng)
            analytic = grid64.integrate(gradient_J(v, p).values * phi.values)
            errs = []
            for h in hs:
                vp = Field(grid64, v.values + h * phi.values, project=True)
                vm = Field(grid64, v.values - h * phi.values, project=True)
                fd = (functional_J(vp, p) - functional_J(vm, p)) / (2 * h)
                errs.append(abs(fd - analytic))
            order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
            assert order >= 1.9

    def test_source_term_has_zero_mean(self, grid64):
        # the density difference minus kappa integrates to zero
        from sinhpoisson.model import normalized_density

        rng = np.random.default_rng(5)
        p = Parameters(30.0, 5.0, 0.5)
        for scale in (0.5, 2.0, 50.0):
            v = smooth_random(grid64, rng, scale=scale)
            rho1 = p.lambda1 * normalized_density(grid64, v.values, 1.0)
            rho2 = p.lambda2 * normalized_density(grid64, v.values, -p.gamma)
            total = grid64.integrate(rho1 - rho2) - p.kappa * grid64.volume
            assert abs(total) <= 1e-10

    def test_gamma_one_duality_pointwise(self, grid64):
        rng = np.random.default_rng(6)
        p = Parameters(30.0, 5.0, 1.0)
        v = smooth_random(grid64, rng, scale=1.2)
        a = gradient_J(v, p)
        b = gradient_J(Field(grid64, -v.values, project=True), p.swapped())
        scale = max(a.sup_norm(), 1.0)
        assert np.max(np.abs(a.values + b.values)) <= 1e-12 * scale


class TestHessian:
    def test_quadratic_form_at_zero_matches_closed_form(self, grid64):
        p = Parameters(30.0, 5.0, 0.5)
        rng = np.random.default_rng(7)
        for _ in range(5):
            phi = smooth_random(grid64, rng, 6, 1.5)
            h = hessian_apply(zero_field(grid64), phi, p)
            lhs = grid64.integrate(h.values * phi.values)
            rhs = dirichlet_energy(phi) - (p.lambda1 + p.gamma * p.lambda2) / grid64.volume * grid64.integrate(phi.values**2)
            assert abs(lhs - rhs) <= 1e-9 * max(abs(rhs), 1.0)

    def test_rayleigh_minimum_at_zero(self, grid64):
        p = Parameters(20.0, 10.0, 0.5)
        got = hessian_rayleigh_min(zero_field(grid64), p)
        expected = mu1(grid64) - (p.lambda1 + p.gamma * p.lambda2) / grid64.volume
        assert abs(got - expected) <= 1e-8 * max(abs(expected), 1.0)

    def test_rayleigh_sign_flips_at_threshold(self, grid64):
        thr = mu1(grid64) * grid64.volume
        below = Parameters(thr - 1.0, 0.0, 0.5)
        above = Parameters(thr + 1.0, 0.0, 0.5)
        assert hessian_rayleigh_min(zero_field(grid64), below) > 0
        assert hessian_rayleigh_min(zero_field(grid64), above) < 0

    def test_symmetry(self, grid64):
        rng = np.random.default_rng(8)
        p = Parameters(30.0, 5.0, 0.5)
        v = smooth_random(grid64, rng, 3, 1.0)
        phi = smooth_random(grid64, rng, 4, 1.5)
        psi = smooth_random(grid64, rng, 4, 1.5)
        a = grid64.integrate(hessian_apply(v, phi, p).values * psi.values)
        b = grid64.integrate(hessian_apply(v, psi, p).values * phi.values)
        assert abs(a - b) <= 1e-9 * max(abs(a), 1.0)

    def test_finite_difference_convergence_order(self, grid64):
        p = Parameters(30.0, 5.0, 0.5)
        rng = np.random.default_rng(9)
        hs = np.array([1e-2, 1e-3, 1e-4])
        for _ in range(10):
            v = smooth_random(grid64, rng, 3, 1.0)
            phi = skewed_random(grid64, rng)
            hv = hessian_apply(v, phi, p)
            errs = []
            for h in hs:
                vp = Field(grid64, v.values + h * phi.values, project=True)
                vm = Field(grid64, v.values - h * phi.values, project=True)
                fd = (gradient_J(vp, p).values - gradient_J(vm, p).values) / (2 * h)
                diff = fd - hv.values
                errs.append(math.sqrt(grid64.integrate(diff * diff)))
            order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
            assert order >= 1.9
