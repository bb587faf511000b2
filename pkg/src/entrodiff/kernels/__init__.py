"""Backend dispatch for the hot numerical kernels.

Two interchangeable implementations exist: a numba ``@njit`` backend and a
pure-numpy fallback.  Both run the same per-cell algorithm with the same
floating-point operation order, so they agree bitwise on the cells they
integrate.  Selection order:

* ``ENTRODIFF_BACKEND=numpy`` forces the fallback,
* ``ENTRODIFF_BACKEND=numba`` requires numba and fails loudly without it,
* unset or ``auto``: numba when importable, numpy otherwise.

``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os

from . import numpy_backend

__all__ = [
    "active_backend",
    "reaction_cells",
    "backward_euler_tridiagonal",
    "REACTION_RTOL",
    "REACTION_ATOL",
]

BACKEND_ENV = "ENTRODIFF_BACKEND"

# Local error control for the adaptive reaction substeps (step doubling).
REACTION_RTOL = 1e-10
REACTION_ATOL = 1e-12


def _select() -> str:
    requested = os.environ.get(BACKEND_ENV, "auto").strip().lower()
    if requested not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"{BACKEND_ENV} must be 'numba', 'numpy', or 'auto', got {requested!r}"
        )
    if requested == "numpy":
        return "numpy"
    try:
        from . import numba_backend  # noqa: F401
    except ImportError:
        if requested == "numba":
            raise
        return "numpy"
    return "numba"


_ACTIVE = _select()

if _ACTIVE == "numba":
    from . import numba_backend as _impl
else:
    _impl = numpy_backend


def active_backend() -> str:
    """Name of the backend selected at import time."""
    return _ACTIVE


def reaction_cells(a, dt, alpha, floor, rtol, atol, max_substeps):
    """Advance the cell-wise reaction ODE over ``dt`` for a batch of cells.

    Parameters
    ----------
    a : (m, ncells) float64 array
        One composition column per cell; not modified.
    dt : float
        Integration horizon.
    alpha : (m,) int64 array
        Stoichiometric coefficients (trailing entry 1).
    floor : float
        Positivity threshold; proposals with any component at or below it
        are rejected and retried with half the substep.
    rtol, atol : float
        Step-doubling error control.
    max_substeps : int
        Per-cell budget of proposed substeps.

    Returns
    -------
    (out, fail) : ((m, ncells) array, int)
        ``fail`` is -1 on success, else the index of the first cell that
        exhausted its substep budget (its column is left unintegrated).
    """
    return _impl.reaction_cells(a, dt, alpha, floor, rtol, atol, max_substeps)


def backward_euler_tridiagonal(u, r):
    """Solve (I - r * L) x = u row-wise, L the 1D mirror-ghost Laplacian * h^2.

    ``u`` has shape (nbatch, n); ``r = dt * d / h^2`` is the dimensionless
    diffusion number.  The matrix is a symmetric M-matrix, so the solve is
    stable without pivoting and the inverse is entrywise non-negative.
    """
    return _impl.backward_euler_tridiagonal(u, r)
