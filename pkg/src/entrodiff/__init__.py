"""entrodiff: a numerical laboratory for degenerate triangular
reaction-diffusion systems.

Simulates the m-species reversible reaction system with one vanishing
diffusion coefficient and verifies, along computed trajectories, the
quantitative structures the theory provides: mass conservation, entropy
decay and the energy balance dE/dt = -D, Poincare-type dissipation lower
bounds, missing-term constants, sup-norm growth ceilings, and
sub-exponential convergence rates.
"""

from .analysis import (
    CheckOptions,
    CheckReport,
    DecayFit,
    check_dissipation_lower,
    check_energy_balance,
    check_entropy_monotone,
    check_l1_convergence,
    check_mass_conservation,
    check_sup_growth,
    fit_ckp_constant,
    fit_entropy_dissipation_bound_constant,
    fit_missing_term_constant,
    fit_polynomial_growth,
    fit_subexponential_decay,
    run_all_checks,
)
from .errors import (
    ConfigError,
    DomainError,
    EntrodiffError,
    PositivityError,
    StiffnessError,
)
from .functionals import (
    algebraic_inequality_residual,
    ckp_sides,
    dissipation,
    dissipation_lower_bound_rhs,
    entropy,
    fit_gamma_bound_constant,
    gamma,
    gamma_bound_residual,
    relative_entropy,
    sqrt_deviation_norms,
)
from .grid import (
    Grid,
    grad_sq,
    integrate,
    lp_norm,
    mean,
    neumann_laplacian,
    poincare_constant,
    sup_norm,
)
from .integrator import (
    StateFields,
    StepperConfig,
    TrajectoryRecord,
    constant_state,
    cosine_perturbed_state,
    diffusion_step,
    random_smooth_state,
    reaction_substep,
    run,
    step,
)
from .kernels import active_backend
from .model import (
    ClosenessReport,
    EquilibriumState,
    SystemSpec,
    closeness_check,
    conserved_masses,
    equilibrium_f,
    reaction_rates,
    solve_equilibrium,
)

__version__ = "0.1.0"
