import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import entrodiff as ed
from entrodiff.errors import DomainError
from conftest import random_positive_state


class TestEntropy:
    def test_unit_state_is_zero(self, spec3, grid64):
        state = ed.constant_state([1.0, 1.0, 1.0], grid64)
        assert ed.entropy(state, spec3, grid64) == pytest.approx(0.0, abs=1e-14)

    def test_single_species_contribution_e(self, grid64):
        # a = (e, 1): contribution e(1-1)+1 = 1 from the first species only
        spec = ed.SystemSpec(alpha=(1,), d=(1.0, 1.0))
        state = ed.constant_state([np.e, 1.0], grid64)
        assert ed.entropy(state, spec, grid64) == pytest.approx(1.0, rel=1e-13)

    def test_nonnegative_on_random_states(self, spec3, grid64, rng):
        for _ in range(1000):
            a = rng.uniform(0.01, 10.0, size=(3,) + grid64.shape)
            assert ed.entropy(ed.StateFields(0.0, a), spec3, grid64) >= 0.0

    def test_zero_cells_use_x_log_x_limit(self, spec3, grid64):
        a = np.ones((3,) + grid64.shape)
        a[1, 0] = 0.0  # phi(0) = 1
        e = ed.entropy(ed.StateFields(0.0, a), spec3, grid64)
        assert e == pytest.approx(grid64.cell_volume, rel=1e-12)

    def test_negative_cell_rejected(self, spec3, grid64):
        a = np.ones((3,) + grid64.shape)
        a[0, 5] = -1e-3
        with pytest.raises(DomainError):
            ed.entropy(ed.StateFields(0.0, a), spec3, grid64)

    def test_alpha_weighting(self, grid64):
        spec = ed.SystemSpec(alpha=(3, 2), d=(1.0, 1.0, 1.0))
        state = ed.constant_state([2.0, 1.0, 1.0], grid64)
        phi2 = 2.0 * (np.log(2.0) - 1.0) + 1.0
        assert ed.entropy(state, spec, grid64) == pytest.approx(3 * phi2, rel=1e-13)


class TestDissipation:
    def test_zero_at_equilibrium(self, spec3, grid64):
        state = ed.constant_state([1.0, 1.0, 1.0], grid64)
        assert ed.dissipation(state, spec3, grid64) == pytest.approx(0.0, abs=1e-14)

    def test_constant_off_balance_state(self, spec3, grid64):
        # oracle: (1 - 4) ln(1/4) = 3 ln 4 per unit volume, no gradient part
        state = ed.constant_state([2.0, 2.0, 1.0], grid64)
        assert ed.dissipation(state, spec3, grid64) == pytest.approx(3 * np.log(4.0), rel=1e-12)

    def test_balanced_state_is_pure_gradient_part(self, grid64):
        spec = ed.SystemSpec(alpha=(1, 1), d=(1.0, 1.0, 1.0))
        u = 1.0 + 0.4 * np.cos(np.pi * grid64.cell_centers(0))
        a = np.stack([u, np.ones(grid64.shape), u.copy()])
        state = ed.StateFields(0.0, a)
        expected = sum(
            spec.alpha[i] * spec.d[i]
            * ed.integrate(ed.grad_sq(a[i], grid64) / a[i], grid64)
            for i in range(3)
        )
        assert ed.dissipation(state, spec, grid64) == pytest.approx(expected, rel=1e-13)

    def test_degenerate_species_gradient_excluded(self, spec3, grid64):
        # only the non-diffusing species varies: D must reduce to the pure
        # reaction term, with no gradient contribution from d_1 = 0
        u = 1.0 + 0.4 * np.cos(np.pi * grid64.cell_centers(0))
        a = np.stack([u, np.ones(grid64.shape), np.ones(grid64.shape)])
        reaction_term = ed.integrate((1.0 - u) * (0.0 - np.log(u)), grid64)
        got = ed.dissipation(ed.StateFields(0.0, a), spec3, grid64)
        assert got == pytest.approx(reaction_term, rel=1e-13)

    def test_nonnegative_on_random_states(self, spec3, grid64, rng):
        for _ in range(200):
            state = random_positive_state(spec3, grid64, rng)
            assert ed.dissipation(state, spec3, grid64) >= 0.0

    def test_non_positive_cell_rejected(self, spec3, grid64):
        a = np.ones((3,) + grid64.shape)
        a[2, 0] = 0.0
        with pytest.raises(DomainError):
            ed.dissipation(ed.StateFields(0.0, a), spec3, grid64)


class TestRelativeEntropy:
    def test_zero_at_equilibrium(self, spec3, grid64):
        eq = ed.solve_equilibrium([2.0, 2.0], 1.0, spec3.alpha)
        state = ed.constant_state(eq.a_inf, grid64)
        assert ed.relative_entropy(state, eq, spec3, grid64) == pytest.approx(0.0, abs=1e-13)

    def test_matches_entropy_difference_for_consistent_states(self, spec3, grid64, rng):
        # mass-consistent by construction: the equilibrium is solved from the
        # state's own discrete masses
        for _ in range(100):
            state = random_positive_state(spec3, grid64, rng)
            masses = ed.conserved_masses(state.a, grid64)
            eq = ed.solve_equilibrium(masses, grid64.volume, spec3.alpha)
            eq_state = ed.constant_state(eq.a_inf, grid64)
            lhs = ed.relative_entropy(state, eq, spec3, grid64)
            rhs = ed.entropy(state, spec3, grid64) - ed.entropy(eq_state, spec3, grid64)
            assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(rhs)))

    @settings(max_examples=200, deadline=None)
    @given(st.floats(min_value=1e-6, max_value=1e6),
           st.floats(min_value=1e-6, max_value=1e6))
    def test_pointwise_convexity(self, x, y):
        assert x * np.log(x / y) - x + y >= -1e-12 * (x + y)

    def test_nonnegative_on_random_states(self, spec3, grid64, rng):
        eq = ed.solve_equilibrium([2.0, 2.0], 1.0, spec3.alpha)
        for _ in range(200):
            state = random_positive_state(spec3, grid64, rng)
            assert ed.relative_entropy(state, eq, spec3, grid64) >= 0.0


class TestGamma:
    def test_diagonal_value_exact(self):
        for x in (1e-6, 0.3, 1.0, 7.0, 1e6):
            assert ed.gamma(x, x) == 2.0

    def test_reference_values(self):
        assert ed.gamma(4.0, 1.0) == pytest.approx(4 * np.log(4.0) - 3.0, rel=1e-13)
        assert ed.gamma(1.0, 4.0) == pytest.approx(3.0 - np.log(4.0), rel=1e-13)

    def test_continuous_across_diagonal(self):
        # the series branch takes over below |sqrt x - sqrt y| = 1e-8 sqrt y,
        # where the direct quotient would be 0/0-degenerate
        y = 0.7
        inside = ed.gamma(y * (1 + 1e-9), y)  # series branch
        assert abs(inside - (2.0 + 1e-9 / 3.0)) < 1e-12

    def test_against_high_precision_oracle(self):
        from mpmath import mp, mpf

        mp.dps = 50

        def oracle(x, y):
            x, y = mpf(x), mpf(y)
            return float((x * mp.log(x / y) - x + y) / (mp.sqrt(x) - mp.sqrt(y)) ** 2)

        # mid-range values: full precision from the direct branch
        for x, y in ((2.0, 0.5), (4.0, 1.0), (0.01, 3.0)):
            assert ed.gamma(x, y) == pytest.approx(oracle(x, y), rel=1e-13)
        # just above the guard the quotient cancels catastrophically; the
        # value must still be finite and usably close
        y = 0.7
        x = y * (1 + 1e-6)
        assert ed.gamma(x, y) == pytest.approx(oracle(x, y), rel=5e-3)
        # just below the guard the series is essentially exact
        x = y * (1 + 1e-9)
        assert ed.gamma(x, y) == pytest.approx(oracle(x, y), rel=1e-12)

    def test_positive_everywhere(self, rng):
        x = 10.0 ** rng.uniform(-3, 3, size=10_000)
        y = 10.0 ** rng.uniform(-3, 3, size=10_000)
        assert np.all(ed.gamma(x, y) > 0.0)

    def test_non_positive_rejected(self):
        with pytest.raises(DomainError):
            ed.gamma(0.0, 1.0)

    def test_relative_entropy_identity(self, spec3, grid64, rng):
        # sum_i alpha_i int Gamma(a_i, a_inf_i)(A_i - A_inf_i)^2 == E_rel
        eq = ed.solve_equilibrium([2.0, 2.0], 1.0, spec3.alpha)
        for _ in range(50):
            state = random_positive_state(spec3, grid64, rng)
            total = 0.0
            for i in range(3):
                gam = ed.gamma(state.a[i], np.full(grid64.shape, eq.a_inf[i]))
                dev = np.sqrt(state.a[i]) - np.sqrt(eq.a_inf[i])
                total += spec3.alpha[i] * ed.integrate(gam * dev * dev, grid64)
            ref = ed.relative_entropy(state, eq, spec3, grid64)
            assert total == pytest.approx(ref, rel=1e-8)


class TestGammaBound:
    def test_trivial_cases(self):
        assert ed.gamma_bound_residual(1.0, 1.0, 2.0) == pytest.approx(0.0, abs=1e-14)
        expected = 3 * np.log(4.0) - (4 * np.log(4.0) - 3.0)
        assert ed.gamma_bound_residual(4.0, 1.0, 3.0) == pytest.approx(expected, rel=1e-12)

    def test_fitted_constant_covers_sweep(self):
        c = ed.fit_gamma_bound_constant()
        assert 2.0 < c < 3.0  # the ratio peaks somewhat above 2 near x/y = e
        xs = 10.0 ** np.linspace(-3, 3, 201)
        X, Y = np.meshgrid(xs, xs)
        res = ed.gamma_bound_residual(X.ravel(), Y.ravel(), c)
        assert res.min() >= -1e-12


class TestAlgebraicInequality:
    def test_reference_values(self):
        assert ed.algebraic_inequality_residual(1.0, 1.0) == 0.0
        assert ed.algebraic_inequality_residual(4.0, 1.0) == pytest.approx(
            3 * np.log(4.0) - 4.0, rel=1e-12)

    def test_random_sweep(self, rng):
        x = 10.0 ** rng.uniform(-6, 6, size=100_000)
        y = 10.0 ** rng.uniform(-6, 6, size=100_000)
        assert ed.algebraic_inequality_residual(x, y).min() >= -1e-12

    def test_boundary_convention(self):
        assert ed.algebraic_inequality_residual(0.0, 0.0) == 0.0
        assert ed.algebraic_inequality_residual(0.0, 1.0) > 0.0

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            ed.algebraic_inequality_residual(-1.0, 1.0)


class TestDeviationNorms:
    def test_constant_state_no_deviation(self, spec3, grid64):
        norms = ed.sqrt_deviation_norms(ed.constant_state([1.0, 2.0, 3.0], grid64),
                                        spec3, grid64)
        np.testing.assert_allclose(norms.delta2, 0.0, atol=1e-25)

    def test_equilibrium_zero_defect(self, spec3, grid64):
        norms = ed.sqrt_deviation_norms(ed.constant_state([1.0, 1.0, 1.0], grid64),
                                        spec3, grid64)
        assert norms.defect == pytest.approx(0.0, abs=1e-25)

    def test_constant_defect_value(self, spec3, grid64):
        # oracle: |sqrt(2) - sqrt(4) sqrt(1)|^2 * |Omega|
        norms = ed.sqrt_deviation_norms(ed.constant_state([4.0, 1.0, 2.0], grid64),
                                        spec3, grid64)
        assert norms.defect == pytest.approx((np.sqrt(2.0) - 2.0) ** 2, rel=1e-12)

    def test_mean_gap_dominated_by_deviation(self, spec3, grid64, rng):
        # ||mean(A) - sqrt(mean(A^2))||^2 <= ||A - mean(A)||^2 per species
        for _ in range(200):
            state = random_positive_state(spec3, grid64, rng)
            norms = ed.sqrt_deviation_norms(state, spec3, grid64)
            for i in range(3):
                A = np.sqrt(state.a[i])
                abar = ed.mean(A, grid64)
                rms = np.sqrt(ed.mean(A * A, grid64))
                lhs = grid64.volume * (abar - rms) ** 2
                assert lhs <= norms.delta2[i] + 1e-15


class TestDissipationLowerBound:
    def test_zero_at_equilibrium(self, spec3, grid64):
        state = ed.constant_state([1.0, 1.0, 1.0], grid64)
        rhs = ed.dissipation_lower_bound_rhs(state, spec3, grid64, 1 / np.pi**2)
        assert rhs == pytest.approx(0.0, abs=1e-20)

    def test_balanced_state_has_no_defect_term(self, grid64):
        spec = ed.SystemSpec(alpha=(1, 1), d=(1.0, 1.0, 1.0))
        u = 1.0 + 0.4 * np.cos(np.pi * grid64.cell_centers(0))
        a = np.stack([u, np.ones(grid64.shape), u.copy()])
        norms = ed.sqrt_deviation_norms(ed.StateFields(0.0, a), spec, grid64)
        assert norms.defect == pytest.approx(0.0, abs=1e-25)
        P = 1 / np.pi**2
        rhs = ed.dissipation_lower_bound_rhs(ed.StateFields(0.0, a), spec, grid64, P)
        expected = sum(spec.alpha[i] * spec.d[i] / P * norms.delta2[i] for i in range(3))
        assert rhs == pytest.approx(expected, rel=1e-13)

    def test_dominated_by_dissipation(self, spec3, grid64, rng):
        P = 1 / np.pi**2
        for _ in range(100):
            state = random_positive_state(spec3, grid64, rng)
            rhs = ed.dissipation_lower_bound_rhs(state, spec3, grid64, P)
            assert ed.dissipation(state, spec3, grid64) >= 0.95 * rhs


class TestCKP:
    def test_equal_densities(self, grid64):
        f = np.ones(grid64.shape)
        lhs, rhs = ed.ckp_sides(f, f.copy(), grid64)
        assert lhs == 0.0 and rhs == pytest.approx(0.0, abs=1e-15)

    def test_indicator_example(self, grid64):
        # f = 2 on [0, 1/2], g = 1: lhs = 1/2, rhs = ln 2
        f = np.where(grid64.cell_centers(0) < 0.5, 2.0, 0.0)
        g = np.ones(grid64.shape)
        lhs, rhs = ed.ckp_sides(f, g, grid64)
        assert lhs == pytest.approx(0.5, rel=1e-12)
        assert rhs == pytest.approx(np.log(2.0), rel=1e-12)
        assert rhs >= lhs

    def test_random_normalized_pairs(self, grid64, rng):
        for _ in range(1000):
            f = rng.uniform(0.05, 2.0, grid64.shape)
            g = rng.uniform(0.05, 2.0, grid64.shape)
            f /= ed.integrate(f, grid64)
            g /= ed.integrate(g, grid64)
            lhs, rhs = ed.ckp_sides(f, g, grid64)
            assert rhs - lhs >= -1e-10

    def test_unit_mass_required(self, grid64):
        f = np.full(grid64.shape, 2.0)
        with pytest.raises(DomainError):
            ed.ckp_sides(f, np.ones(grid64.shape), grid64)
