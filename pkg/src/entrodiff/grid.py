"""Uniform cell-centered grids with homogeneous Neumann boundary conditions.

The domain is an interval (1D) or rectangle (2D) split into equal cells with
centers at (k + 1/2) * h.  Zero-flux boundaries are realised with mirror ghost
cells, which makes the discrete Laplacian exactly conservative (its sum over
all cells telescopes to zero) and self-adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "Grid",
    "neumann_laplacian",
    "grad_sq",
    "integrate",
    "mean",
    "lp_norm",
    "sup_norm",
    "poincare_constant",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid on a 1D interval or 2D rectangle.

    Parameters
    ----------
    lengths : tuple of float
        Domain extent per axis; one entry for 1D, two for 2D.
    n : tuple of int
        Cell count per axis, at least 4 per axis.
    """

    lengths: tuple[float, ...]
    n: tuple[int, ...]

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.lengths)
        n = tuple(int(v) for v in self.n)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "n", n)
        if len(lengths) not in (1, 2):
            raise DomainError(f"grid dimension must be 1 or 2, got {len(lengths)}")
        if len(n) != len(lengths):
            raise DomainError("lengths and n must have the same number of axes")
        if any(L <= 0 for L in lengths):
            raise DomainError("domain lengths must be positive")
        if any(k < 4 for k in n):
            raise DomainError("need at least 4 cells per axis")

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(L / k for L, k in zip(self.lengths, self.n))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def ncells(self) -> int:
        return int(np.prod(self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def cell_centers(self, axis: int = 0) -> np.ndarray:
        """Coordinates of cell centers along one axis."""
        h = self.h[axis]
        return (np.arange(self.n[axis]) + 0.5) * h

    def coordinate_fields(self) -> tuple[np.ndarray, ...]:
        """Per-axis coordinate arrays broadcast to the full grid shape."""
        axes = [self.cell_centers(ax) for ax in range(self.dim)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))


def _check_field(u: np.ndarray, grid: Grid) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != grid.shape:
        raise DomainError(f"field shape {u.shape} does not match grid {grid.shape}")
    return u


def _laplacian_axis(u: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-difference along one axis with mirror ghost cells."""
    out = np.empty_like(u)
    lo = [slice(None)] * u.ndim
    hi = [slice(None)] * u.ndim
    mid = [slice(None)] * u.ndim
    lo[axis] = slice(None, -2)
    mid[axis] = slice(1, -1)
    hi[axis] = slice(2, None)
    omid = [slice(None)] * u.ndim
    omid[axis] = slice(1, -1)
    out[tuple(omid)] = u[tuple(lo)] - 2.0 * u[tuple(mid)] + u[tuple(hi)]
    first = [slice(None)] * u.ndim
    second = [slice(None)] * u.ndim
    first[axis] = 0
    second[axis] = 1
    out[tuple(first)] = u[tuple(second)] - u[tuple(first)]
    last = [slice(None)] * u.ndim
    penult = [slice(None)] * u.ndim
    last[axis] = -1
    penult[axis] = -2
    out[tuple(last)] = u[tuple(penult)] - u[tuple(last)]
    out /= h * h
    return out


def neumann_laplacian(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Discrete Laplacian with zero-flux boundaries.

    Constant fields map to zero and the output sums to zero up to rounding,
    so diffusion driven by this operator conserves cell sums structurally.
    """
    u = _check_field(u, grid)
    out = _laplacian_axis(u, grid.h[0], 0)
    for axis in range(1, grid.dim):
        out += _laplacian_axis(u, grid.h[axis], axis)
    return out


def grad_sq(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Cell-centered squared gradient magnitude.

    Face-centered differences are squared and averaged onto cells; boundary
    faces carry zero flux.  With this choice the discrete identity
    integrate(u * (-laplacian(u))) == integrate(grad_sq(u)) holds exactly.
    """
    u = _check_field(u, grid)
    out = np.zeros_like(u)
    for axis in range(grid.dim):
        h = grid.h[axis]
        diff = (np.diff(u, axis=axis) / h) ** 2
        pad = [(0, 0)] * u.ndim
        pad[axis] = (1, 0)
        left = np.pad(diff, pad)
        pad[axis] = (0, 1)
        right = np.pad(diff, pad)
        out += 0.5 * (left + right)
    return out


def integrate(u: np.ndarray, grid: Grid) -> float:
    """Midpoint quadrature over the domain."""
    u = _check_field(u, grid)
    return float(u.sum() * grid.cell_volume)


def mean(u: np.ndarray, grid: Grid) -> float:
    """Domain average (1/|Omega|) * integral of u."""
    return integrate(u, grid) / grid.volume


def lp_norm(u: np.ndarray, grid: Grid, p: float) -> float:
    """L^p norm under midpoint quadrature, p >= 1."""
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    u = _check_field(u, grid)
    return float((np.abs(u) ** p).sum() * grid.cell_volume) ** (1.0 / p)


def sup_norm(u: np.ndarray) -> float:
    """Max-magnitude norm."""
    return float(np.abs(np.asarray(u)).max())


def poincare_constant(grid: Grid) -> float:
    """Poincare constant P = 1/lambda_1 for the q = 2 Poincare inequality.

    lambda_1 is the smallest positive Neumann eigenvalue of -Laplacian on the
    interval/rectangle, attained along the longest axis: (pi / max L)^2.
    """
    lmax = max(grid.lengths)
    return (lmax / np.pi) ** 2
