import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import entrodiff as ed
from entrodiff.errors import DomainError


class TestSystemSpec:
    def test_alpha_gets_trailing_one(self):
        spec = ed.SystemSpec(alpha=(2, 3), d=(1.0, 1.0, 1.0))
        assert spec.alpha == (2, 3, 1)
        assert spec.m == 3

    def test_full_alpha_accepted(self):
        spec = ed.SystemSpec(alpha=(2, 3, 1), d=(1.0, 1.0, 1.0))
        assert spec.alpha == (2, 3, 1)

    def test_product_coefficient_must_be_one(self):
        with pytest.raises(DomainError):
            ed.SystemSpec(alpha=(1, 1, 2), d=(1.0, 1.0, 1.0))

    def test_zero_alpha_rejected(self):
        with pytest.raises(DomainError):
            ed.SystemSpec(alpha=(0, 1), d=(1.0, 1.0, 1.0))

    def test_non_integer_alpha_rejected(self):
        with pytest.raises(DomainError):
            ed.SystemSpec(alpha=(1.5, 1), d=(1.0, 1.0, 1.0))

    def test_two_degeneracies_rejected(self):
        with pytest.raises(DomainError):
            ed.SystemSpec(alpha=(1, 1), d=(0.0, 0.0, 1.0))

    def test_all_zero_rejected(self):
        with pytest.raises(DomainError):
            ed.SystemSpec(alpha=(1, 1), d=(0.0, 0.0, 0.0))

    def test_degenerate_reactant_needs_unit_coefficient(self):
        with pytest.raises(DomainError):
            ed.SystemSpec(alpha=(2, 1), d=(0.0, 1.0, 1.0))
        # degenerate product: any reactant coefficients are fine
        spec = ed.SystemSpec(alpha=(2, 3), d=(1.0, 1.0, 0.0))
        assert spec.degenerate_index == 2

    def test_degenerate_index(self, spec3):
        assert spec3.degenerate_index == 0
        assert ed.SystemSpec(alpha=(1, 1), d=(1.0, 1.0, 1.0)).degenerate_index is None


class TestReactionRates:
    def test_equilibrium_is_zero_rate(self, spec3):
        r = ed.reaction_rates(np.array([1.0, 1.0, 1.0]), spec3)
        assert np.all(r == 0.0)

    def test_direct_arithmetic(self, spec3):
        # oracle: rate = a3 - a1*a2 = 1 - 6
        r = ed.reaction_rates(np.array([2.0, 3.0, 1.0]), spec3)
        np.testing.assert_array_equal(r, [-5.0, -5.0, 5.0])

    def test_square_coefficient(self):
        spec = ed.SystemSpec(alpha=(2, 1), d=(1.0, 1.0, 1.0))
        r = ed.reaction_rates(np.array([2.0, 1.0, 4.0]), spec)
        np.testing.assert_array_equal(r, [0.0, 0.0, 0.0])

    def test_negative_input_rejected(self, spec3):
        with pytest.raises(DomainError):
            ed.reaction_rates(np.array([1.0, -0.1, 1.0]), spec3)

    def test_vectorized_over_cells(self, spec3):
        a = np.array([[2.0, 1.0], [3.0, 1.0], [1.0, 1.0]])
        r = ed.reaction_rates(a, spec3)
        np.testing.assert_array_equal(r[:, 0], [-5.0, -5.0, 5.0])
        np.testing.assert_array_equal(r[:, 1], [0.0, 0.0, 0.0])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=50.0), min_size=4, max_size=4),
           st.integers(min_value=1, max_value=3), st.integers(min_value=1, max_value=3))
    def test_antisymmetry_exact(self, values, a1, a2):
        spec = ed.SystemSpec(alpha=(a1, a2, 1), d=(1.0, 1.0, 1.0, 1.0))
        r = ed.reaction_rates(np.array(values), spec)
        for i in range(spec.m - 1):
            assert r[i] + r[-1] == 0.0
            assert r[i] == r[0]


class TestEquilibriumF:
    def test_linear_root(self):
        assert ed.equilibrium_f(1.0, [2.0], 1.0, (1,)) == 0.0

    def test_direct_evaluation(self):
        assert ed.equilibrium_f(0.0, [2.0, 2.0], 1.0, (1, 1)) == 4.0
        assert ed.equilibrium_f(2.0, [2.0, 2.0], 1.0, (1, 1)) == -2.0

    def test_sign_change_endpoints(self):
        masses = [1.7, 2.9]
        assert ed.equilibrium_f(0.0, masses, 1.0, (2, 1)) > 0.0
        assert ed.equilibrium_f(1.7, masses, 1.0, (2, 1)) < 0.0

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            ed.equilibrium_f(2.5, [2.0, 2.0], 1.0, (1, 1))
        with pytest.raises(DomainError):
            ed.equilibrium_f(-0.1, [2.0, 2.0], 1.0, (1, 1))

    def test_strictly_decreasing(self, rng):
        masses = [2.3, 1.4]
        xs = np.sort(rng.uniform(1e-6, 1.4 - 1e-6, size=200))
        vals = [ed.equilibrium_f(x, masses, 1.0, (2, 1)) for x in xs]
        assert np.all(np.diff(vals) < 0)


class TestSolveEquilibrium:
    def test_linear_case(self):
        eq = ed.solve_equilibrium([2.0], 1.0, (1,))
        np.testing.assert_allclose(eq.a_inf, [1.0, 1.0], atol=1e-12)

    def test_quadratic_case_against_root_oracle(self):
        # (2-x)^2 = x  <=>  x^2 - 5x + 4 = 0, admissible root from np.roots
        roots = np.roots([1.0, -5.0, 4.0])
        expected = min(r.real for r in roots if 0 < r.real < 2)
        eq = ed.solve_equilibrium([2.0, 2.0], 1.0, (1, 1))
        np.testing.assert_allclose(eq.a_inf, [1.0, 1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(eq.a_inf[-1], expected, atol=1e-12)

    def test_cubic_case_against_root_oracle(self):
        # (2-x)^3 = x: unique real root in (0,2) from np.roots
        coeffs = [-1.0, 6.0, -13.0, 8.0]  # -(x^3) + 6x^2 - 13x + 8
        roots = np.roots(coeffs)
        real = [r.real for r in roots if abs(r.imag) < 1e-12 and 0 < r.real < 2]
        assert len(real) == 1
        eq = ed.solve_equilibrium([2.0, 2.0], 1.0, (2, 1))
        np.testing.assert_allclose(eq.a_inf, [1.0, 1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(eq.a_inf[-1], real[0], atol=1e-12)

    def test_residual_below_tolerance(self, rng):
        for _ in range(20):
            masses = rng.uniform(0.3, 5.0, size=3)
            alpha = tuple(rng.integers(1, 4, size=3))
            vol = rng.uniform(0.5, 2.0)
            eq = ed.solve_equilibrium(masses, vol, alpha)
            assert abs(ed.equilibrium_f(eq.a_inf[-1], masses, vol, alpha)) < 1e-10

    def test_equilibrium_is_reaction_fixed_point(self, rng):
        tol = 1e-12
        for _ in range(10):
            masses = rng.uniform(0.5, 4.0, size=2)
            spec = ed.SystemSpec(alpha=(1, 2), d=(1.0, 1.0, 1.0))
            eq = ed.solve_equilibrium(masses, 1.0, spec.alpha, tol=tol)
            r = ed.reaction_rates(eq.a_inf, spec)
            assert np.abs(r).max() < 10 * tol * 100  # |f'| bounded near root

    def test_mass_consistency_roundtrip(self, rng):
        masses = rng.uniform(0.5, 4.0, size=3)
        vol = 1.7
        eq = ed.solve_equilibrium(masses, vol, (1, 2, 1))
        np.testing.assert_allclose(eq.a_inf[:-1] + eq.a_inf[-1], masses / vol, rtol=1e-13)

    def test_deterministic_and_unique(self):
        eq1 = ed.solve_equilibrium([2.0, 2.0], 1.0, (1, 1))
        eq2 = ed.solve_equilibrium([2.0, 2.0], 1.0, (1, 1))
        np.testing.assert_array_equal(eq1.a_inf, eq2.a_inf)
        # tightening the tolerance does not move the root
        eq3 = ed.solve_equilibrium([2.0, 2.0], 1.0, (1, 1), tol=1e-6)
        np.testing.assert_allclose(eq3.a_inf, eq1.a_inf, atol=1e-7)

    def test_invalid_inputs(self):
        with pytest.raises(DomainError):
            ed.solve_equilibrium([0.0, 2.0], 1.0, (1, 1))
        with pytest.raises(DomainError):
            ed.solve_equilibrium([2.0, 2.0], 1.0, (1, 1), tol=0.0)


class TestConservedMasses:
    def test_constant_state(self, spec3, grid64):
        st_ = ed.constant_state([1.0, 1.0, 1.0], grid64)
        np.testing.assert_allclose(ed.conserved_masses(st_.a, grid64), [2.0, 2.0], rtol=1e-14)

    def test_constant_state_volume_two(self):
        grid = ed.Grid(lengths=(2.0,), n=(64,))
        a = np.zeros((3, 64))
        a[0], a[1], a[2] = 2.0, 0.0, 1.0
        np.testing.assert_allclose(ed.conserved_masses(a, grid), [6.0, 2.0], rtol=1e-14)

    def test_shape_mismatch(self, grid64):
        with pytest.raises(DomainError):
            ed.conserved_masses(np.ones((3, 65)), grid64)

    def test_negative_state_rejected(self, grid64):
        a = np.ones((3, 64))
        a[1, 3] = -1.0
        with pytest.raises(DomainError):
            ed.conserved_masses(a, grid64)


class TestClosenessCheck:
    def test_equal_coefficients_margins_are_thresholds(self):
        rep = ed.closeness_check(1.0, 1.0, c_prc=2.0, c_sor=5.0)
        assert rep.satisfied
        assert rep.margin_left == 0.5
        assert rep.margin_right == 0.2

    def test_satisfied_case(self):
        rep = ed.closeness_check(1.0, 1.5, c_prc=1.0, c_sor=1.0)
        assert rep.satisfied
        np.testing.assert_allclose(rep.margin_left, 0.5)
        np.testing.assert_allclose(rep.margin_right, 1.0 - 0.5 / 2.5)

    def test_violated_case(self):
        rep = ed.closeness_check(1.0, 4.0, c_prc=1.0, c_sor=1.0)
        assert not rep.satisfied
        assert rep.margin_left == 1.0 - 3.0

    def test_requires_explicit_positive_constants(self):
        with pytest.raises(DomainError):
            ed.closeness_check(1.0, 1.0, c_prc=0.0, c_sor=1.0)
        with pytest.raises(DomainError):
            ed.closeness_check(1.0, 1.0, c_prc=1.0, c_sor=-2.0)
        with pytest.raises(TypeError):
            ed.closeness_check(1.0, 1.0)  # no defaults exist

    def test_requires_positive_coefficients(self):
        with pytest.raises(DomainError):
            ed.closeness_check(0.0, 1.0, c_prc=1.0, c_sor=1.0)
