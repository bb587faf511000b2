"""Numba-compiled kernels.  Same algorithm and FP operation order as the
numpy backend; compiled once per process and cached on disk."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _rate(y, alpha, m):
    prod = 1.0
    for j in range(m - 1):
        aj = y[j]
        for _ in range(alpha[j]):
            prod = prod * aj
    return y[m - 1] - prod


@njit(cache=True)
def _rk4_increment(y, h, alpha, m, stage):
    r1 = _rate(y, alpha, m)
    c = 0.5 * h
    for i in range(m - 1):
        stage[i] = y[i] + c * r1
    stage[m - 1] = y[m - 1] - c * r1
    r2 = _rate(stage, alpha, m)
    for i in range(m - 1):
        stage[i] = y[i] + c * r2
    stage[m - 1] = y[m - 1] - c * r2
    r3 = _rate(stage, alpha, m)
    for i in range(m - 1):
        stage[i] = y[i] + h * r3
    stage[m - 1] = y[m - 1] - h * r3
    r4 = _rate(stage, alpha, m)
    return h * (r1 + 2.0 * r2 + 2.0 * r3 + r4) / 6.0


@njit(cache=True)
def reaction_cells(a, dt, alpha, floor, rtol, atol, max_substeps):
    m, nc = a.shape
    out = a.copy()
    if dt <= 0.0:
        return out, -1
    y = np.empty(m)
    yh = np.empty(m)
    y2 = np.empty(m)
    stage = np.empty(m)
    for c in range(nc):
        for i in range(m):
            y[i] = a[i, c]
        t = 0.0
        h = dt
        nsub = 0
        while t < dt:
            if h > dt - t:
                h = dt - t
            d_full = _rk4_increment(y, h, alpha, m, stage)
            d_h1 = _rk4_increment(y, 0.5 * h, alpha, m, stage)
            for i in range(m - 1):
                yh[i] = y[i] + d_h1
            yh[m - 1] = y[m - 1] - d_h1
            d_h2 = _rk4_increment(yh, 0.5 * h, alpha, m, stage)
            for i in range(m - 1):
                y2[i] = yh[i] + d_h2
            y2[m - 1] = yh[m - 1] - d_h2
            err = 0.0
            positive = True
            for i in range(m):
                y1i = y[i] + d_full if i < m - 1 else y[i] - d_full
                scale = atol + rtol * max(abs(y[i]), abs(y2[i]))
                e = abs(y1i - y2[i]) / scale
                if e > err:
                    err = e
                if y2[i] <= floor or yh[i] <= floor:
                    positive = False
            if err <= 1.0 and positive:
                for i in range(m):
                    y[i] = y2[i]
                t += h
                if err < 0.03125:
                    h *= 2.0
            else:
                h *= 0.5
            nsub += 1
            if nsub > max_substeps:
                return out, c
        for i in range(m):
            out[i, c] = y[i]
    return out, -1


@njit(cache=True)
def _thomas(u, r):
    nbatch, n = u.shape
    out = np.empty_like(u)
    cp = np.empty(n)
    # forward sweep coefficients depend only on the matrix, shared by rows
    diag0 = 1.0 + r
    diag = 1.0 + 2.0 * r
    cp[0] = -r / diag0
    for i in range(1, n - 1):
        cp[i] = -r / (diag + r * cp[i - 1])
    for b in range(nbatch):
        out[b, 0] = u[b, 0] / diag0
        for i in range(1, n - 1):
            out[b, i] = (u[b, i] + r * out[b, i - 1]) / (diag + r * cp[i - 1])
        out[b, n - 1] = (u[b, n - 1] + r * out[b, n - 2]) / (diag0 + r * cp[n - 2])
        for i in range(n - 2, -1, -1):
            out[b, i] = out[b, i] - cp[i] * out[b, i + 1]
    return out


def backward_euler_tridiagonal(u, r):
    u = np.ascontiguousarray(u, dtype=np.float64)
    return _thomas(u, float(r))
