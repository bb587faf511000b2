"""Entropy, dissipation, and the inequality building blocks.

The entropy E = sum_i alpha_i * integral of (a_i(ln a_i - 1) + 1) is the
Lyapunov functional of the system; its dissipation

    D = sum_{d_i > 0} alpha_i d_i * integral |grad a_i|^2 / a_i
        + integral (a_m - P)(ln a_m - ln P),      P = prod_{j<m} a_j^alpha_j

satisfies dE/dt = -D along trajectories.  All integrands here are pointwise
non-negative, and logarithms use the continuous extensions x ln x -> 0 and
(x - y)(ln x - ln y) -> 0 with a hard 1e-300 floor against underflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError
from .grid import Grid, grad_sq, integrate, lp_norm, mean, sup_norm
from .model import EquilibriumState, SystemSpec, conserved_masses, stoich_product

__all__ = [
    "FunctionalSample",
    "DeviationNorms",
    "entropy",
    "dissipation",
    "relative_entropy",
    "gamma",
    "gamma_bound_residual",
    "fit_gamma_bound_constant",
    "algebraic_inequality_residual",
    "sqrt_deviation_norms",
    "dissipation_lower_bound_rhs",
    "ckp_sides",
    "sample_functionals",
]

LOG_FLOOR = 1e-300
# cells below this are treated as zero in x ln x and flagged in run reports
CELL_FLAG_FLOOR = 1e-14


def _xlogx(a: np.ndarray) -> np.ndarray:
    return np.where(a > 0.0, a * np.log(np.maximum(a, LOG_FLOOR)), 0.0)


def _entropy_density(a: np.ndarray) -> np.ndarray:
    # a(ln a - 1) + 1, convex, zero at a = 1, value 1 at a = 0
    return _xlogx(a) - a + 1.0


def _state_array(state, spec: SystemSpec, grid: Grid) -> np.ndarray:
    a = np.asarray(getattr(state, "a", state), dtype=np.float64)
    if a.shape != (spec.m,) + grid.shape:
        raise DomainError(
            f"state shape {a.shape} does not match (m={spec.m}, grid {grid.shape})"
        )
    return a


def entropy(state, spec: SystemSpec, grid: Grid) -> float:
    """E = sum_i alpha_i * integral of (a_i(ln a_i - 1) + 1); non-negative."""
    a = _state_array(state, spec, grid)
    if a.min() < -CELL_FLAG_FLOOR:
        raise DomainError(f"negative cell value {a.min()} in entropy input")
    a = np.maximum(a, 0.0)
    total = 0.0
    for i in range(spec.m):
        total += spec.alpha[i] * integrate(_entropy_density(a[i]), grid)
    return float(total)


def dissipation(state, spec: SystemSpec, grid: Grid) -> float:
    """Entropy dissipation: Fisher-type gradient terms plus the reaction term."""
    a = _state_array(state, spec, grid)
    if a.min() <= 0:
        raise DomainError("dissipation requires a strictly positive state")
    total = 0.0
    for i in range(spec.m):
        if spec.d[i] > 0.0:
            total += spec.alpha[i] * spec.d[i] * integrate(grad_sq(a[i], grid) / a[i], grid)
    prod = stoich_product(a, spec.alpha_array)
    gap = a[-1] - prod
    logs = np.log(np.maximum(a[-1], LOG_FLOOR)) - np.log(np.maximum(prod, LOG_FLOOR))
    total += integrate(gap * logs, grid)
    return float(total)


def relative_entropy(state, eq: EquilibriumState, spec: SystemSpec, grid: Grid) -> float:
    """sum_i alpha_i * integral of (a_i ln(a_i/a_inf_i) - a_i + a_inf_i) >= 0.

    Equals entropy(state) - entropy(equilibrium) whenever the state carries
    the same conserved masses as the equilibrium.
    """
    a = _state_array(state, spec, grid)
    if a.min() < -CELL_FLAG_FLOOR:
        raise DomainError(f"negative cell value {a.min()} in relative entropy input")
    a = np.maximum(a, 0.0)
    if np.any(eq.a_inf <= 0):
        raise DomainError("equilibrium must be strictly positive")
    total = 0.0
    for i in range(spec.m):
        ai_inf = eq.a_inf[i]
        integrand = _xlogx(a[i]) - a[i] * np.log(ai_inf) - a[i] + ai_inf
        total += spec.alpha[i] * integrate(integrand, grid)
    return float(total)


def gamma(x, y):
    """(x ln(x/y) - x + y) / (sqrt x - sqrt y)^2, continued by 2 at x = y.

    Near the diagonal (|sqrt x - sqrt y| < 1e-8 sqrt y) the quotient is
    0/0-degenerate, so a second-order expansion in eps = x/y - 1 is used:
    2 + eps/3 - eps^2/8.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("gamma requires strictly positive arguments")
    sx, sy = np.sqrt(x), np.sqrt(y)
    near = np.abs(sx - sy) < 1e-8 * sy
    eps = x / y - 1.0
    series = 2.0 + eps / 3.0 - eps * eps / 8.0
    denom = np.where(near, 1.0, (sx - sy) ** 2)
    direct = (x * np.log(np.where(near, 1.0, x / y)) - x + y) / denom
    out = np.where(near, series, direct)
    return float(out) if out.ndim == 0 else out


def gamma_bound_residual(x, y, c_gamma: float):
    """c * max(1, ln(x/y)) - gamma(x, y); non-negative iff the bound holds."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    bound = c_gamma * np.maximum(1.0, np.log(x / y))
    out = bound - gamma(x, y)
    return float(out) if np.ndim(out) == 0 else out


def _gamma_to_bound_ratio(logr: np.ndarray) -> np.ndarray:
    r = np.exp(logr)
    return gamma(r, np.ones_like(r)) / np.maximum(1.0, logr)


def fit_gamma_bound_constant(log_ratio_span: float = np.log(1e6), n_sweep: int = 200_001) -> float:
    """Empirical constant for the gamma bound, fitted by sweep.

    gamma is scale invariant, gamma(sx, sy) = gamma(x, y), so the supremum of
    gamma / max(1, ln(x/y)) is one-dimensional in the ratio x/y.  A dense
    sweep over log-ratio locates the peak and a bounded scalar minimizer
    polishes it to machine precision.
    """
    logr = np.linspace(-log_ratio_span, log_ratio_span, n_sweep)
    ratios = _gamma_to_bound_ratio(logr)
    k = int(np.argmax(ratios))
    lo = logr[max(k - 1, 0)]
    hi = logr[min(k + 1, len(logr) - 1)]
    res = minimize_scalar(
        lambda lr: -_gamma_to_bound_ratio(np.asarray(lr)),
        bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-14},
    )
    best = max(float(ratios[k]), float(-res.fun))
    return best * (1.0 + 1e-12)


def algebraic_inequality_residual(x, y):
    """(x - y)(ln x - ln y) - 4 (sqrt x - sqrt y)^2 >= 0 for x, y >= 0."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x < 0) or np.any(y < 0):
        raise DomainError("arguments must be non-negative")
    logs = np.log(np.maximum(x, LOG_FLOOR)) - np.log(np.maximum(y, LOG_FLOOR))
    out = (x - y) * np.where(x == y, 0.0, logs) - 4.0 * (np.sqrt(x) - np.sqrt(y)) ** 2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DeviationNorms:
    """Squared L2 deviations of sqrt-concentrations and the reaction defect."""

    delta2: np.ndarray  # ||sqrt(a_i) - mean sqrt(a_i)||_2^2 per species
    defect: float  # ||sqrt(a_m) - prod_j sqrt(a_j)^alpha_j||_2^2


def sqrt_deviation_norms(state, spec: SystemSpec, grid: Grid) -> DeviationNorms:
    a = _state_array(state, spec, grid)
    if a.min() < 0:
        raise DomainError("state must be non-negative")
    A = np.sqrt(a)
    delta2 = np.empty(spec.m)
    for i in range(spec.m):
        dev = A[i] - mean(A[i], grid)
        delta2[i] = integrate(dev * dev, grid)
    gap = A[-1] - stoich_product(A, spec.alpha_array)
    return DeviationNorms(delta2=delta2, defect=integrate(gap * gap, grid))


def dissipation_lower_bound_rhs(state, spec: SystemSpec, grid: Grid, poincare: float) -> float:
    """sum_{d_i>0} (alpha_i d_i / P) ||delta_{sqrt a_i}||^2 + defect.

    D dominates this quantity (the algebraic inequality handles the reaction
    term, the Poincare inequality the gradient terms); the degenerate species
    is absent here, unlike in the missing-term fits.
    """
    norms = sqrt_deviation_norms(state, spec, grid)
    total = norms.defect
    for i in range(spec.m):
        if spec.d[i] > 0.0:
            total += spec.alpha[i] * spec.d[i] / poincare * norms.delta2[i]
    return float(total)


def ckp_sides(f: np.ndarray, g: np.ndarray, grid: Grid) -> tuple[float, float]:
    """(lhs, rhs) of the Pinsker-type inequality for unit-mass densities.

    lhs = 0.5 ||f - g||_1^2, rhs = integral f ln(f/g); requires f, g >= 0
    with unit integral to 1e-8 (normalization is the caller's job).
    """
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if np.any(f < 0) or np.any(g < 0):
        raise DomainError("densities must be non-negative")
    for name, u in (("f", f), ("g", g)):
        total = integrate(u, grid)
        if abs(total - 1.0) > 1e-8:
            raise DomainError(f"{name} must have unit mass, integral = {total}")
    lhs = 0.5 * lp_norm(f - g, grid, 1.0) ** 2
    logs = np.log(np.maximum(f, LOG_FLOOR)) - np.log(np.maximum(g, LOG_FLOOR))
    rhs = integrate(np.where(f > 0.0, f * logs, 0.0), grid)
    return float(lhs), float(rhs)


@dataclass(frozen=True)
class FunctionalSample:
    """All functionals recorded at one sample time."""

    t: float
    E: float
    D: float
    E_rel: float
    D_lower_rhs: float
    masses: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    sup: np.ndarray
    l1dist: np.ndarray
    delta2: np.ndarray
    defect: float
    min_cell: float


def sample_functionals(state, spec: SystemSpec, grid: Grid, eq: EquilibriumState,
                       poincare: float) -> FunctionalSample:
    """Evaluate every recorded functional for one state."""
    a = _state_array(state, spec, grid)
    norms = sqrt_deviation_norms(state, spec, grid)
    return FunctionalSample(
        t=float(getattr(state, "t", 0.0)),
        E=entropy(state, spec, grid),
        D=dissipation(state, spec, grid),
        E_rel=relative_entropy(state, eq, spec, grid),
        D_lower_rhs=dissipation_lower_bound_rhs(state, spec, grid, poincare),
        masses=conserved_masses(a, grid),
        l1=np.array([lp_norm(a[i], grid, 1.0) for i in range(spec.m)]),
        l2=np.array([lp_norm(a[i], grid, 2.0) for i in range(spec.m)]),
        sup=np.array([sup_norm(a[i]) for i in range(spec.m)]),
        l1dist=np.array([lp_norm(a[i] - eq.a_inf[i], grid, 1.0) for i in range(spec.m)]),
        delta2=norms.delta2,
        defect=norms.defect,
        min_cell=float(a.min()),
    )
