"""Time integration by Strang splitting: R(dt/2) o D(dt) o R(dt/2).

R advances the pointwise reaction ODE in every cell with adaptive
step-doubling RK4 (reject-and-halve on positivity or error, never clamp);
D advances each diffusing species with a linear solve that conserves the
cell sum exactly and preserves positivity.  Species with d_i = 0 skip the
diffusion stage entirely.

Two diffusion sub-solvers are available:

* ``strang`` (default): the exact exponential of the discrete mirror-ghost
  Laplacian, applied in its cosine eigenbasis.  Exact in time, conservative
  and positivity-preserving (the propagator is doubly stochastic).
* ``backward-euler-diffusion``: implicit Euler via tridiagonal elimination
  (alternating-direction sweeps in 2D).  Unconditionally positive through
  the discrete maximum principle, but first order in dt.

The reaction stage applies one shared increment with opposite signs to
reactants and product, so the invariants a_i + a_m are conserved to rounding
within every substep; global mass conservation is structural, not tuned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import DomainError, PositivityError, StiffnessError
from .grid import Grid, poincare_constant
from .kernels import REACTION_ATOL, REACTION_RTOL, backward_euler_tridiagonal, reaction_cells
from .model import EquilibriumState, SystemSpec, conserved_masses, solve_equilibrium

__all__ = [
    "StepperConfig",
    "StateFields",
    "TrajectoryRecord",
    "SCHEMES",
    "diffusion_step",
    "reaction_substep",
    "step",
    "run",
    "constant_state",
    "cosine_perturbed_state",
    "random_smooth_state",
]

SCHEMES = ("strang", "backward-euler-diffusion")
DIFFUSION_METHODS = ("spectral", "backward-euler")

# stepper scheme -> diffusion sub-solver inside the Strang composition
_SCHEME_METHOD = {"strang": "spectral", "backward-euler-diffusion": "backward-euler"}


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    max_substeps: int = 10_000
    positivity_floor: float = 1e-12
    scheme: str = "strang"

    def __post_init__(self):
        if self.dt <= 0:
            raise DomainError("dt must be positive")
        if self.max_substeps < 1:
            raise DomainError("max_substeps must be >= 1")
        if self.positivity_floor < 0:
            raise DomainError("positivity_floor must be non-negative")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")


@dataclass
class StateFields:
    """All m species on one grid at one time; strictly positive cells."""

    t: float
    a: np.ndarray  # shape (m, *grid.shape)

    def validate(self, spec: SystemSpec, grid: Grid) -> None:
        if self.a.shape != (spec.m,) + grid.shape:
            raise DomainError(
                f"state shape {self.a.shape} does not match (m={spec.m}, grid {grid.shape})"
            )
        if not np.all(np.isfinite(self.a)):
            raise DomainError("state contains non-finite values")
        if self.a.min() <= 0:
            raise DomainError("state must be strictly positive")

    def copy(self) -> "StateFields":
        return StateFields(t=self.t, a=self.a.copy())


@dataclass
class TrajectoryRecord:
    """Sampled functionals along one run.

    Column blocks mirror the CSV layout used by the CLI; l1/l2 carry the raw
    per-species norms (not persisted to CSV), l1dist the distance to the
    equilibrium state the run was measured against.
    """

    t: np.ndarray
    E: np.ndarray
    E_rel: np.ndarray
    D: np.ndarray
    D_lower_rhs: np.ndarray
    masses: np.ndarray  # (S, m-1)
    sup: np.ndarray  # (S, m)
    l1dist: np.ndarray  # (S, m)
    delta2: np.ndarray  # (S, m)
    defect: np.ndarray  # (S,)
    a_inf: np.ndarray  # (m,)
    masses0: np.ndarray  # (m-1,)
    alpha: tuple[int, ...]
    d: tuple[float, ...]
    poincare: float
    volume: float
    l1: np.ndarray | None = None  # (S, m) raw norms; None when loaded from CSV
    l2: np.ndarray | None = None
    min_value: float = float("nan")
    snapshots: list[tuple[float, np.ndarray]] = field(default_factory=list)

    @property
    def n_samples(self) -> int:
        return len(self.t)

    @property
    def m(self) -> int:
        return self.sup.shape[1]

    def subsample(self, stride: int) -> "TrajectoryRecord":
        """Every stride-th sample (first retained); fitted constants should
        be insensitive to this."""
        sl = slice(None, None, stride)
        return TrajectoryRecord(
            t=self.t[sl],
            E=self.E[sl],
            E_rel=self.E_rel[sl],
            D=self.D[sl],
            D_lower_rhs=self.D_lower_rhs[sl],
            masses=self.masses[sl],
            sup=self.sup[sl],
            l1dist=self.l1dist[sl],
            delta2=self.delta2[sl],
            defect=self.defect[sl],
            a_inf=self.a_inf,
            masses0=self.masses0,
            alpha=self.alpha,
            d=self.d,
            poincare=self.poincare,
            volume=self.volume,
            l1=None if self.l1 is None else self.l1[sl],
            l2=None if self.l2 is None else self.l2[sl],
            min_value=self.min_value,
        )


def _dct_eigenvalues(n: int, h: float) -> np.ndarray:
    """Eigenvalues of the mirror-ghost Neumann Laplacian in the DCT-II basis."""
    k = np.arange(n)
    return -(4.0 / (h * h)) * np.sin(np.pi * k / (2.0 * n)) ** 2


class _DiffusionOperator:
    """Precomputed per-species diffusion solve for one (grid, dt) pair."""

    def __init__(self, grid: Grid, d: tuple[float, ...], dt: float, method: str):
        self.grid = grid
        self.method = method
        self.d = d
        if method == "spectral":
            # exp(dt * d * Lambda) per species; 2D factors combine as an
            # outer product because the axis operators commute
            axis_eigs = [_dct_eigenvalues(grid.n[ax], grid.h[ax]) for ax in range(grid.dim)]
            self.factors = []
            for di in d:
                if di == 0.0:
                    self.factors.append(None)
                elif grid.dim == 1:
                    self.factors.append(np.exp(dt * di * axis_eigs[0]))
                else:
                    fx = np.exp(dt * di * axis_eigs[0])
                    fy = np.exp(dt * di * axis_eigs[1])
                    self.factors.append(fx[:, None] * fy[None, :])
        else:
            self.rs = [
                None if di == 0.0 else tuple(dt * di / h**2 for h in grid.h) for di in d
            ]

    def apply(self, u: np.ndarray, i: int) -> np.ndarray:
        if self.method == "spectral":
            fac = self.factors[i]
            if fac is None:
                return u
            coeff = scipy.fft.dctn(u, type=2, norm="ortho")
            coeff *= fac
            return scipy.fft.idctn(coeff, type=2, norm="ortho")
        rs = self.rs[i]
        if rs is None:
            return u
        if self.grid.dim == 1:
            return backward_euler_tridiagonal(u[None, :], rs[0])[0]
        # alternating-direction sweeps; each factor is an M-matrix solve
        out = backward_euler_tridiagonal(u.T, rs[0]).T  # along axis 0
        return backward_euler_tridiagonal(out, rs[1])  # along axis 1


def diffusion_step(u: np.ndarray, d: float, dt: float, grid: Grid, method: str = "spectral") -> np.ndarray:
    """Advance one species field by pure diffusion over dt.

    d = 0 is the identity.  Both methods conserve the field mean to rounding
    and map positive fields to positive fields; ``spectral`` is exact in time
    for the discrete operator, ``backward-euler`` is first order.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape != grid.shape:
        raise DomainError(f"field shape {u.shape} does not match grid {grid.shape}")
    if d < 0:
        raise DomainError("diffusion coefficient must be non-negative")
    if method not in DIFFUSION_METHODS:
        raise DomainError(f"method must be one of {DIFFUSION_METHODS}")
    if d == 0.0 or dt == 0.0:
        return u.copy()
    op = _DiffusionOperator(grid, (d,), dt, method)
    out = op.apply(u, 0)
    if u.min() > 0 and out.min() <= 0:
        raise PositivityError("diffusion produced a non-positive cell")
    return out


def reaction_substep(a, dt: float, spec: SystemSpec, *, positivity_floor: float = 1e-12,
                     max_substeps: int = 10_000) -> np.ndarray:
    """Advance one cell's composition by the reaction ODE over dt.

    Adaptive step-doubling RK4; a proposed substep is rejected and halved
    when any component falls to the positivity floor or the error estimate
    exceeds tolerance.  Components may start at zero (the reaction pushes
    them positive); negative input is a domain error.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (spec.m,):
        raise DomainError(f"expected {spec.m} components, got shape {a.shape}")
    if np.any(a < 0):
        raise DomainError("concentrations must be non-negative")
    if dt < 0:
        raise DomainError("dt must be non-negative")
    out, fail = reaction_cells(
        a[:, None], float(dt), spec.alpha_array, positivity_floor,
        REACTION_RTOL, REACTION_ATOL, int(max_substeps),
    )
    if fail >= 0:
        raise StiffnessError(
            f"reaction substep budget ({max_substeps}) exhausted; values {a}",
            cell=0, values=a.copy(),
        )
    return out[:, 0]


def _reaction_stage(a2d: np.ndarray, dt: float, spec: SystemSpec, cfg: StepperConfig,
                    t: float, grid: Grid) -> np.ndarray:
    out, fail = reaction_cells(
        a2d, dt, spec.alpha_array, cfg.positivity_floor,
        REACTION_RTOL, REACTION_ATOL, cfg.max_substeps,
    )
    if fail >= 0:
        cell = np.unravel_index(fail, grid.shape)
        raise StiffnessError(
            f"reaction substep budget ({cfg.max_substeps}) exhausted at t={t} "
            f"in cell {cell} with values {a2d[:, fail]}",
            cell=fail, values=a2d[:, fail].copy(),
        )
    return out


def step(state: StateFields, cfg: StepperConfig, spec: SystemSpec, grid: Grid,
         diffusion: "_DiffusionOperator | None" = None) -> StateFields:
    """One Strang step; advances time by cfg.dt, conserving masses and positivity."""
    if diffusion is None:
        diffusion = _DiffusionOperator(grid, spec.d, cfg.dt, _SCHEME_METHOD[cfg.scheme])
    m = spec.m
    a2d = np.ascontiguousarray(state.a.reshape(m, -1))
    half = 0.5 * cfg.dt
    a2d = _reaction_stage(a2d, half, spec, cfg, state.t, grid)
    a = a2d.reshape((m,) + grid.shape)
    for i in range(m):
        if spec.d[i] > 0.0:
            a[i] = diffusion.apply(a[i], i)
    if a.min() <= 0:
        raise PositivityError(f"state lost positivity during diffusion at t={state.t}")
    a2d = np.ascontiguousarray(a.reshape(m, -1))
    a2d = _reaction_stage(a2d, half, spec, cfg, state.t + half, grid)
    return StateFields(t=state.t + cfg.dt, a=a2d.reshape((m,) + grid.shape))


def run(state0: StateFields, spec: SystemSpec, grid: Grid, cfg: StepperConfig,
        t_end: float, sample_every: int, *, equilibrium: EquilibriumState | None = None,
        store_snapshots: bool = False) -> TrajectoryRecord:
    """Advance to t_end, sampling every ``sample_every`` steps (plus endpoints).

    Deterministic: identical inputs give identical records.  The equilibrium
    used for relative quantities defaults to the one determined by the
    discrete initial masses.
    """
    from .functionals import sample_functionals  # deferred; functionals imports model only

    if t_end < 0:
        raise DomainError("t_end must be non-negative")
    if sample_every < 1:
        raise DomainError("sample_every must be >= 1")
    state0.validate(spec, grid)
    masses0 = conserved_masses(state0.a, grid)
    eq = equilibrium or solve_equilibrium(masses0, grid.volume, spec.alpha)
    P = poincare_constant(grid)
    nsteps = int(np.ceil(t_end / cfg.dt - 1e-9)) if t_end > 0 else 0
    diffusion = _DiffusionOperator(grid, spec.d, cfg.dt, _SCHEME_METHOD[cfg.scheme])

    samples = []
    snapshots: list[tuple[float, np.ndarray]] = []
    state = state0.copy()
    min_value = float(state.a.min())
    for k in range(nsteps + 1):
        state.t = k * cfg.dt  # avoid accumulated addition drift
        if k % sample_every == 0 or k == nsteps:
            samples.append(sample_functionals(state, spec, grid, eq, P))
            if store_snapshots:
                snapshots.append((state.t, state.a.copy()))
        if k == nsteps:
            break
        state = step(state, cfg, spec, grid, diffusion=diffusion)
        mv = float(state.a.min())
        if mv < min_value:
            min_value = mv

    rec = TrajectoryRecord(
        t=np.array([s.t for s in samples]),
        E=np.array([s.E for s in samples]),
        E_rel=np.array([s.E_rel for s in samples]),
        D=np.array([s.D for s in samples]),
        D_lower_rhs=np.array([s.D_lower_rhs for s in samples]),
        masses=np.array([s.masses for s in samples]),
        sup=np.array([s.sup for s in samples]),
        l1dist=np.array([s.l1dist for s in samples]),
        delta2=np.array([s.delta2 for s in samples]),
        defect=np.array([s.defect for s in samples]),
        a_inf=eq.a_inf.copy(),
        masses0=masses0,
        alpha=spec.alpha,
        d=spec.d,
        poincare=P,
        volume=grid.volume,
        l1=np.array([s.l1 for s in samples]),
        l2=np.array([s.l2 for s in samples]),
        min_value=min_value,
        snapshots=snapshots,
    )
    return rec


# ---------------------------------------------------------------------------
# initial-data presets: all strictly positive and smooth up to the boundary
# ---------------------------------------------------------------------------

def constant_state(values, grid: Grid) -> StateFields:
    """Spatially constant state from m positive values."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or len(values) < 2:
        raise DomainError("need a vector of at least 2 species values")
    if np.any(values <= 0):
        raise DomainError("constant preset values must be strictly positive")
    a = np.empty((len(values),) + grid.shape)
    for i, v in enumerate(values):
        a[i] = v
    return StateFields(t=0.0, a=a)


def _rebalance(a: np.ndarray, grid: Grid, masses_target: np.ndarray) -> None:
    """Shift reactant constants so discrete masses match the target exactly."""
    current = conserved_masses(a, grid)
    for i in range(len(masses_target)):
        a[i] += (masses_target[i] - current[i]) / grid.volume


def _mode_profile(grid: Grid, modes) -> np.ndarray:
    modes = np.atleast_1d(np.asarray(modes, dtype=np.int64))
    if len(modes) != grid.dim:
        raise DomainError(f"need {grid.dim} mode counts, got {len(modes)}")
    coords = grid.coordinate_fields()
    g = np.ones(grid.shape)
    for ax in range(grid.dim):
        if modes[ax] > 0:
            g = g * np.cos(np.pi * modes[ax] * coords[ax] / grid.lengths[ax])
    return g


def cosine_perturbed_state(spec: SystemSpec, grid: Grid, masses, species: int,
                           amplitude: float, modes=None) -> StateFields:
    """Equilibrium plus a cosine perturbation on one species (0-based index).

    The amplitude is clipped to keep strict positivity, and reactant levels
    are shifted afterwards so the discrete masses equal the target exactly.
    """
    masses = np.asarray(masses, dtype=np.float64)
    eq = solve_equilibrium(masses, grid.volume, spec.alpha)
    if not 0 <= species < spec.m:
        raise DomainError(f"species index {species} out of range for m={spec.m}")
    base = eq.a_inf
    amp = min(abs(amplitude), 0.95 * base[species])
    a = np.empty((spec.m,) + grid.shape)
    for i in range(spec.m):
        a[i] = base[i]
    a[species] += amp * _mode_profile(grid, modes if modes is not None else [1] * grid.dim)
    _rebalance(a, grid, masses)
    if a.min() <= 0:
        raise DomainError("cosine preset lost positivity after rebalancing")
    return StateFields(t=0.0, a=a)


def random_smooth_state(spec: SystemSpec, grid: Grid, masses, amplitude: float,
                        seed: int, max_mode: int = 3) -> StateFields:
    """Equilibrium modulated by seeded low-frequency noise on every species."""
    masses = np.asarray(masses, dtype=np.float64)
    eq = solve_equilibrium(masses, grid.volume, spec.alpha)
    rng = np.random.default_rng(seed)
    rel = min(abs(amplitude), 0.9)
    coords = grid.coordinate_fields()
    a = np.empty((spec.m,) + grid.shape)
    for i in range(spec.m):
        g = np.zeros(grid.shape)
        if grid.dim == 1:
            for k in range(1, max_mode + 1):
                g += rng.normal() * np.cos(np.pi * k * coords[0] / grid.lengths[0])
        else:
            for kx in range(max_mode + 1):
                for ky in range(max_mode + 1):
                    if kx == ky == 0:
                        continue
                    g += (
                        rng.normal()
                        * np.cos(np.pi * kx * coords[0] / grid.lengths[0])
                        * np.cos(np.pi * ky * coords[1] / grid.lengths[1])
                    )
        peak = np.abs(g).max()
        if peak > 0:
            g /= peak
        a[i] = eq.a_inf[i] * (1.0 + rel * g)
    _rebalance(a, grid, masses)
    if a.min() <= 0:
        raise DomainError("random-smooth preset lost positivity; lower the amplitude")
    return StateFields(t=0.0, a=a)
