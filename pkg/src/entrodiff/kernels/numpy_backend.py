"""Pure-numpy kernels: vectorized over cells, adaptive decisions per cell.

The reaction integrator mirrors the numba backend operation-for-operation;
the adaptivity loop keeps a per-cell local time and substep, masking out
finished cells, so each cell sees exactly the arithmetic the scalar kernel
would apply to it.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded


def _rate(y: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Net reaction rate a_m - prod_j a_j^alpha_j, columns = cells."""
    m = y.shape[0]
    prod = np.ones_like(y[0])
    for j in range(m - 1):
        aj = y[j]
        for _ in range(int(alpha[j])):
            prod = prod * aj
    return y[m - 1] - prod


def _apply(y: np.ndarray, coeff, rate) -> np.ndarray:
    """y + coeff * rate on reactants, y - coeff * rate on the product."""
    out = np.empty_like(y)
    out[:-1] = y[:-1] + coeff * rate
    out[-1] = y[-1] - coeff * rate
    return out


def _rk4_increment(y: np.ndarray, h, alpha: np.ndarray):
    """Classical four-stage increment of the scalar net rate, times h."""
    r1 = _rate(y, alpha)
    r2 = _rate(_apply(y, 0.5 * h, r1), alpha)
    r3 = _rate(_apply(y, 0.5 * h, r2), alpha)
    r4 = _rate(_apply(y, h, r3), alpha)
    return h * (r1 + 2.0 * r2 + 2.0 * r3 + r4) / 6.0


def reaction_cells(a, dt, alpha, floor, rtol, atol, max_substeps):
    a = np.ascontiguousarray(a, dtype=np.float64)
    m, nc = a.shape
    y = a.copy()
    if dt <= 0.0:
        return y, -1
    t = np.zeros(nc)
    h = np.full(nc, float(dt))
    nsub = np.zeros(nc, dtype=np.int64)
    while True:
        idx = np.nonzero(t < dt)[0]
        if idx.size == 0:
            return y, -1
        h[idx] = np.minimum(h[idx], dt - t[idx])
        ha = h[idx]
        ya = y[:, idx]
        # one full step and two half steps: the difference estimates the error
        d_full = _rk4_increment(ya, ha, alpha)
        yh = _apply(ya, 1.0, _rk4_increment(ya, 0.5 * ha, alpha))
        y2 = _apply(yh, 1.0, _rk4_increment(yh, 0.5 * ha, alpha))
        y1 = _apply(ya, 1.0, d_full)
        scale = atol + rtol * np.maximum(np.abs(ya), np.abs(y2))
        err = (np.abs(y1 - y2) / scale).max(axis=0)
        ok = (err <= 1.0) & (yh.min(axis=0) > floor) & (y2.min(axis=0) > floor)
        acc = idx[ok]
        y[:, acc] = y2[:, ok]
        t[acc] += ha[ok]
        grow = acc[err[ok] < 0.03125]
        h[grow] *= 2.0
        rej = idx[~ok]
        h[rej] *= 0.5
        nsub[idx] += 1
        over = nsub[idx] > max_substeps
        if over.any():
            return y, int(idx[over][0])


def backward_euler_tridiagonal(u, r):
    u = np.ascontiguousarray(u, dtype=np.float64)
    nbatch, n = u.shape
    ab = np.zeros((3, n))
    ab[0, 1:] = -r
    ab[2, :-1] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[1, 0] = 1.0 + r
    ab[1, -1] = 1.0 + r
    return solve_banded((1, 1), ab, u.T).T
