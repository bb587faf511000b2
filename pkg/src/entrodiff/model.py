"""Reaction system definition, conserved masses, and the constant equilibrium.

The model is the single reversible reaction

    alpha_1 X_1 + ... + alpha_{m-1} X_{m-1}  <->  X_m

whose net rate R = a_m - prod_j a_j^alpha_j drives every species: +R for the
reactants, -R for the product.  The linear combinations a_i + a_m are then
conserved cell-wise, which fixes the unique constant steady state via a
one-dimensional root problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import Grid, integrate

__all__ = [
    "SystemSpec",
    "EquilibriumState",
    "ClosenessReport",
    "stoich_product",
    "reaction_rates",
    "equilibrium_f",
    "solve_equilibrium",
    "conserved_masses",
    "closeness_check",
]


@dataclass(frozen=True)
class SystemSpec:
    """Species count, stoichiometry, and diffusion coefficients.

    ``alpha`` may be given for the first m-1 species (the product coefficient
    is 1 by convention) or for all m with a trailing 1.  It is stored with the
    explicit trailing 1 so entropy-weighted sums run uniformly over species.

    At most one diffusion coefficient may vanish; the stoichiometric
    coefficient of a degenerate reactant must be 1.
    """

    alpha: tuple[int, ...]
    d: tuple[float, ...]

    def __post_init__(self):
        d = tuple(float(v) for v in self.d)
        m = len(d)
        if m < 2:
            raise DomainError(f"need at least 2 species, got {m}")
        alpha_in = tuple(self.alpha)
        if any(float(a) != int(a) for a in alpha_in):
            raise DomainError("stoichiometric coefficients must be integers")
        alpha_in = tuple(int(a) for a in alpha_in)
        if len(alpha_in) == m - 1:
            alpha = alpha_in + (1,)
        elif len(alpha_in) == m:
            if alpha_in[-1] != 1:
                raise DomainError("the product coefficient alpha_m must be 1")
            alpha = alpha_in
        else:
            raise DomainError(
                f"alpha must have {m - 1} or {m} entries for {m} species, "
                f"got {len(alpha_in)}"
            )
        if any(a < 1 for a in alpha):
            raise DomainError("stoichiometric coefficients must be >= 1")
        if any(v < 0 for v in d):
            raise DomainError("diffusion coefficients must be non-negative")
        zeros = [i for i, v in enumerate(d) if v == 0.0]
        if len(zeros) > 1:
            raise DomainError("at most one diffusion coefficient may be zero")
        if len(zeros) == m:
            raise DomainError("at least one diffusion coefficient must be positive")
        if zeros and zeros[0] < m - 1 and alpha[zeros[0]] != 1:
            raise DomainError(
                "a degenerate reactant must have stoichiometric coefficient 1, "
                f"species {zeros[0] + 1} has alpha = {alpha[zeros[0]]}"
            )
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "d", d)

    @property
    def m(self) -> int:
        return len(self.d)

    @property
    def degenerate_index(self) -> int | None:
        """0-based index of the non-diffusing species, or None."""
        for i, v in enumerate(self.d):
            if v == 0.0:
                return i
        return None

    @property
    def alpha_array(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=np.int64)

    @property
    def d_array(self) -> np.ndarray:
        return np.asarray(self.d, dtype=np.float64)


@dataclass(frozen=True)
class EquilibriumState:
    """The unique positive constant steady state (a_1..a_m at infinity)."""

    a_inf: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a_inf", np.asarray(self.a_inf, dtype=np.float64))

    @property
    def sqrt_a_inf(self) -> np.ndarray:
        return np.sqrt(self.a_inf)


@dataclass(frozen=True)
class ClosenessReport:
    satisfied: bool
    margin_left: float
    margin_right: float


def stoich_product(a, alpha) -> np.ndarray | float:
    """prod_{j<m} a_j^alpha_j by repeated multiplication.

    Integer exponents are expanded as repeated multiplies so small-integer
    inputs stay exact; ``a`` holds all m species, the product skips the last.
    """
    a = np.asarray(a, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.int64)
    prod = np.ones_like(a[0])
    for j in range(a.shape[0] - 1):
        aj = a[j]
        for _ in range(int(alpha[j])):
            prod = prod * aj
    return prod


def reaction_rates(a, spec: SystemSpec) -> np.ndarray:
    """Net production rates for every species.

    Species 1..m-1 all receive R = a_m - prod a_j^alpha_j and the product
    receives -R, so r_i + r_m = 0 holds exactly for every reactant.
    Accepts a single composition vector of length m or a stacked (m, ...)
    array of per-cell compositions.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape[0] != spec.m:
        raise DomainError(f"expected {spec.m} species, got {a.shape[0]}")
    if np.any(a < 0):
        raise DomainError("concentrations must be non-negative")
    rate = a[-1] - stoich_product(a, spec.alpha_array)
    out = np.empty_like(a)
    out[:-1] = rate
    out[-1] = -rate
    return out


def _mass_array(masses) -> np.ndarray:
    masses = np.atleast_1d(np.asarray(masses, dtype=np.float64))
    if np.any(masses <= 0):
        raise DomainError("conserved masses must be positive")
    return masses


def equilibrium_f(x: float, masses, volume: float, alpha) -> float:
    """Root function f(x) = prod_j (M_j/|Omega| - x)^alpha_j - x.

    Its unique root on (0, min_j M_j/|Omega|) is the equilibrium value of the
    product species; f is strictly decreasing there.
    """
    masses = _mass_array(masses)
    alpha = np.asarray(alpha, dtype=np.int64)
    if len(alpha) == len(masses) + 1:
        alpha = alpha[:-1]
    if len(alpha) != len(masses):
        raise DomainError("alpha and masses length mismatch")
    levels = masses / volume
    xmax = float(levels.min())
    if not 0.0 <= x <= xmax:
        raise DomainError(f"x = {x} outside [0, {xmax}]")
    value = 1.0
    for level, ak in zip(levels, alpha):
        base = level - x
        for _ in range(int(ak)):
            value *= base
    return value - x


def solve_equilibrium(masses, volume: float, alpha, tol: float = 1e-12) -> EquilibriumState:
    """Unique constant equilibrium by bisection on (0, min_i M_i/|Omega|).

    Bisection needs only the sign change f(0) > 0 > f(xmax) and monotonicity,
    so it converges unconditionally; iteration stops when the bracket width
    cannot shrink further or falls below ``tol`` (absolute, on x).
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if volume <= 0:
        raise DomainError("volume must be positive")
    masses = _mass_array(masses)
    alpha = np.asarray(alpha, dtype=np.int64)
    if len(alpha) == len(masses) + 1:
        alpha = alpha[:-1]
    lo, hi = 0.0, float((masses / volume).min())
    flo = equilibrium_f(lo, masses, volume, alpha)
    fhi = equilibrium_f(hi, masses, volume, alpha)
    if not (flo > 0.0 > fhi):
        raise RuntimeError("bisection bracket invalid; cannot happen for positive masses")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi or (hi - lo) < tol * 1e-4:
            break
        fmid = equilibrium_f(mid, masses, volume, alpha)
        if fmid > 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    a_inf = np.empty(len(masses) + 1)
    a_inf[:-1] = masses / volume - root
    a_inf[-1] = root
    return EquilibriumState(a_inf=a_inf)


def conserved_masses(state, grid: Grid) -> np.ndarray:
    """M_i = integral of (a_i + a_m) for i = 1..m-1.

    ``state`` may be a StateFields or a stacked (m, *grid.shape) array.
    """
    a = np.asarray(getattr(state, "a", state), dtype=np.float64)
    if a.ndim != grid.dim + 1 or a.shape[1:] != grid.shape or a.shape[0] < 2:
        raise DomainError(
            f"state shape {a.shape} does not match (m, {', '.join(map(str, grid.shape))})"
        )
    if np.any(a < 0):
        raise DomainError("state must be non-negative")
    return np.array([integrate(a[i] + a[-1], grid) for i in range(a.shape[0] - 1)])


def closeness_check(d_i: float, d_m: float, c_prc: float, c_sor: float) -> ClosenessReport:
    """Evaluate the closeness condition on two positive diffusion coefficients.

    Requires |d_i - d_m| < 1/c_prc and |d_i - d_m|/(d_i + d_m) < 1/c_sor.
    The regularity constants are user inputs; no defaults exist, so the
    checker refuses to run without explicit positive values.  Margins report
    threshold minus attained value (positive means satisfied).
    """
    if d_i <= 0 or d_m <= 0:
        raise DomainError("closeness applies to positive diffusion coefficients")
    if c_prc <= 0 or c_sor <= 0:
        raise DomainError("regularity constants must be positive")
    gap = abs(d_i - d_m)
    margin_left = 1.0 / c_prc - gap
    margin_right = 1.0 / c_sor - gap / (d_i + d_m)
    return ClosenessReport(
        satisfied=bool(margin_left > 0 and margin_right > 0),
        margin_left=float(margin_left),
        margin_right=float(margin_right),
    )
