import subprocess
import sys

import numpy as np
import pytest

from entrodiff.kernels import REACTION_ATOL, REACTION_RTOL, active_backend
from entrodiff.kernels import numpy_backend

try:
    from entrodiff.kernels import numba_backend
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

ALPHA = np.array([1, 1, 1], dtype=np.int64)


def sample_cells(rng, nc=128):
    a = rng.uniform(0.1, 3.0, size=(3, nc))
    return np.ascontiguousarray(a)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not importable")
class TestBackendAgreement:
    def test_reaction_bitwise_identical(self, rng):
        a = sample_cells(rng)
        for dt in (1e-3, 0.05, 0.7):
            out_nb, f_nb = numba_backend.reaction_cells(
                a, dt, ALPHA, 1e-12, REACTION_RTOL, REACTION_ATOL, 10_000)
            out_np, f_np = numpy_backend.reaction_cells(
                a, dt, ALPHA, 1e-12, REACTION_RTOL, REACTION_ATOL, 10_000)
            assert f_nb == f_np == -1
            np.testing.assert_array_equal(out_nb, out_np)

    def test_reaction_agreement_with_halving(self, rng):
        # large dt forces rejected proposals; decisions must still match
        a = sample_cells(rng, nc=32) * 4.0
        out_nb, f_nb = numba_backend.reaction_cells(
            a, 5.0, ALPHA, 1e-12, REACTION_RTOL, REACTION_ATOL, 10_000)
        out_np, f_np = numpy_backend.reaction_cells(
            a, 5.0, ALPHA, 1e-12, REACTION_RTOL, REACTION_ATOL, 10_000)
        assert f_nb == f_np == -1
        np.testing.assert_array_equal(out_nb, out_np)

    def test_tridiagonal_agreement(self, rng):
        u = rng.uniform(0.0, 2.0, size=(5, 64))
        for r in (0.0, 0.3, 250.0):
            x_nb = numba_backend.backward_euler_tridiagonal(u, r)
            x_np = numpy_backend.backward_euler_tridiagonal(u, r)
            np.testing.assert_allclose(x_nb, x_np, rtol=1e-12, atol=1e-14)


class TestReactionKernel:
    def test_conserves_linear_invariants(self, rng):
        a = sample_cells(rng)
        out, fail = numpy_backend.reaction_cells(
            a, 0.5, ALPHA, 1e-12, REACTION_RTOL, REACTION_ATOL, 10_000)
        assert fail == -1
        for i in range(2):
            np.testing.assert_allclose(out[i] + out[2], a[i] + a[2], rtol=1e-12)

    def test_matches_reference_ode_solver(self):
        from scipy.integrate import solve_ivp

        a0 = np.array([[2.0], [2.0], [0.1]])

        def rhs(t, y):
            r = y[2] - y[0] * y[1]
            return [r, r, -r]

        ref = solve_ivp(rhs, (0, 3.0), a0[:, 0], rtol=1e-12, atol=1e-14)
        out, fail = numpy_backend.reaction_cells(
            a0, 3.0, ALPHA, 1e-14, REACTION_RTOL, REACTION_ATOL, 100_000)
        assert fail == -1
        np.testing.assert_allclose(out[:, 0], ref.y[:, -1], atol=1e-8)

    def test_budget_exhaustion_reports_cell(self):
        a = np.array([[5.0, 1.0], [5.0, 1.0], [0.01, 1.0]])
        out, fail = numpy_backend.reaction_cells(
            a, 10.0, ALPHA, 1e-12, REACTION_RTOL, REACTION_ATOL, 1)
        assert fail == 0
        # the failed column is returned unintegrated
        np.testing.assert_array_equal(out[:, 0], a[:, 0])

    def test_zero_dt_is_identity(self, rng):
        a = sample_cells(rng, nc=8)
        out, fail = numpy_backend.reaction_cells(
            a, 0.0, ALPHA, 1e-12, REACTION_RTOL, REACTION_ATOL, 10)
        assert fail == -1
        np.testing.assert_array_equal(out, a)

    def test_positivity_floor_triggers_halving(self):
        # component decaying toward zero: coarse steps must not cross the floor
        a = np.array([[3.0], [3.0], [8.9]])
        out, fail = numpy_backend.reaction_cells(
            a, 2.0, ALPHA, 1e-12, REACTION_RTOL, REACTION_ATOL, 100_000)
        assert fail == -1
        assert out.min() > 0.0


class TestTridiagonalKernel:
    def test_against_dense_solve(self, rng):
        n, r = 16, 0.8
        L = np.zeros((n, n))
        for i in range(n):
            L[i, i] = -2.0
            if i > 0:
                L[i, i - 1] = 1.0
            if i < n - 1:
                L[i, i + 1] = 1.0
        L[0, 0] = -1.0
        L[-1, -1] = -1.0
        A = np.eye(n) - r * L
        b = rng.normal(size=(3, n))
        x = numpy_backend.backward_euler_tridiagonal(b, r)
        np.testing.assert_allclose(x, np.linalg.solve(A, b.T).T, rtol=1e-11, atol=1e-13)

    def test_preserves_constant(self):
        u = np.full((1, 32), 4.2)
        x = numpy_backend.backward_euler_tridiagonal(u, 17.0)
        np.testing.assert_allclose(x, u, rtol=1e-13)


def test_env_flag_selects_numpy():
    code = (
        "import os; os.environ['ENTRODIFF_BACKEND']='numpy'; "
        "from entrodiff.kernels import active_backend; print(active_backend())"
    )
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "numpy"


def test_active_backend_reports_valid_name():
    assert active_backend() in ("numba", "numpy")
