"""Trajectory verdicts: invariant checks, fitted constants, decay regression.

Checkers are pure functions of a TrajectoryRecord; re-running one yields an
identical report.  Fitted constants stand in for the inequality constants the
theory leaves implicit, so the reports verify inequality shapes, not specific
values: a fit passes when the constant exists (is positive) and is stable
along the trajectory.  Samples where relative entropy or a fit denominator
falls below 1e-14 are quadrature noise and are excluded from fits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .integrator import TrajectoryRecord

__all__ = [
    "CheckReport",
    "DecayFit",
    "CheckOptions",
    "E_REL_FLOOR",
    "check_mass_conservation",
    "check_entropy_monotone",
    "check_energy_balance",
    "check_dissipation_lower",
    "fit_missing_term_constant",
    "fit_subexponential_decay",
    "fit_polynomial_growth",
    "check_sup_growth",
    "check_l1_convergence",
    "fit_ckp_constant",
    "fit_entropy_dissipation_bound_constant",
    "default_missing_term_weight",
    "default_decay_exponent",
    "default_mu_bound",
    "run_all_checks",
]

E_REL_FLOOR = 1e-14
DENOM_FLOOR = 1e-14


@dataclass
class CheckReport:
    """Outcome of one checker; margin is positive exactly when passed."""

    name: str
    passed: bool
    margin: float
    details: str = ""
    worst_t: float = float("nan")
    worst_value: float = float("nan")
    constants: dict = field(default_factory=dict)


@dataclass
class DecayFit:
    """ln E_rel regressed against -(1+t)^gamma on [t_start, t_end]."""

    gamma_exponent: float
    lambda1: float
    lambda2: float
    r_squared: float
    t_start: float
    t_end: float
    n_samples: int


def check_mass_conservation(traj: TrajectoryRecord, tol: float = 1e-8) -> CheckReport:
    """Max relative drift of every conserved mass from its initial value."""
    m0 = traj.masses[0]
    drift = np.abs(traj.masses - m0) / m0
    worst = float(drift.max())
    k, i = np.unravel_index(int(np.argmax(drift)), drift.shape)
    return CheckReport(
        name="mass", passed=worst < tol, margin=tol - worst,
        details=f"max relative drift {worst:.3e} (species pair {i + 1})",
        worst_t=float(traj.t[k]), worst_value=worst,
    )


def check_entropy_monotone(traj: TrajectoryRecord, slack_coeff: float = 1e-8) -> CheckReport:
    """E non-increasing up to discretization slack slack_coeff*(1+|E|)."""
    if traj.n_samples < 2:
        return CheckReport(name="entropy", passed=True, margin=slack_coeff,
                           details="single sample")
    e = traj.E
    rise = e[1:] - e[:-1] - slack_coeff * (1.0 + np.abs(e[:-1]))
    worst = float(rise.max())
    k = int(np.argmax(rise))
    return CheckReport(
        name="entropy", passed=worst <= 0.0, margin=-worst,
        details=f"max slack-adjusted increase {worst:.3e}",
        worst_t=float(traj.t[k + 1]), worst_value=float(e[k + 1] - e[k]),
    )


def check_energy_balance(traj: TrajectoryRecord, rel_tol: float = 0.05,
                         d_floor: float = 1e-10) -> CheckReport:
    """Centered dE/dt against -D wherever D is above the noise floor."""
    if traj.n_samples < 3:
        return CheckReport(name="energy-balance", passed=True, margin=rel_tol,
                           details="too few samples to difference")
    t, e, dfun = traj.t, traj.E, traj.D
    rate = (e[2:] - e[:-2]) / (t[2:] - t[:-2])
    dmid = dfun[1:-1]
    mask = dmid > d_floor
    if not mask.any():
        return CheckReport(name="energy-balance", passed=True, margin=rel_tol,
                           details="no samples above dissipation floor")
    relerr = np.abs(rate[mask] + dmid[mask]) / dmid[mask]
    worst = float(relerr.max())
    k = int(np.nonzero(mask)[0][int(np.argmax(relerr))]) + 1
    return CheckReport(
        name="energy-balance", passed=worst < rel_tol, margin=rel_tol - worst,
        details=f"max |dE/dt + D|/D = {worst:.3e} over {int(mask.sum())} samples",
        worst_t=float(t[k]), worst_value=worst,
    )


def check_dissipation_lower(traj: TrajectoryRecord, slack: float = 0.05) -> CheckReport:
    """D >= (1 - slack) * Poincare lower bound at every sample."""
    rhs = traj.D_lower_rhs
    mask = rhs > DENOM_FLOOR
    if not mask.any():
        return CheckReport(name="dissipation-lower", passed=True, margin=slack,
                           details="at equilibrium; bound trivial")
    ratio = traj.D[mask] / rhs[mask]
    worst = float(ratio.min())
    k = int(np.nonzero(mask)[0][int(np.argmin(ratio))])
    return CheckReport(
        name="dissipation-lower", passed=worst >= 1.0 - slack,
        margin=worst - (1.0 - slack),
        details=f"min D/rhs = {worst:.4f} over {int(mask.sum())} samples",
        worst_t=float(traj.t[k]), worst_value=worst,
    )


def default_missing_term_weight(traj: TrajectoryRecord) -> float:
    """Time-weight exponent for the missing-term fit.

    A degenerate reactant needs the (1+t)^(1/2) compensation; a degenerate
    product admits a time-independent constant (weight exponent 0).
    """
    d = np.asarray(traj.d)
    zeros = np.nonzero(d == 0.0)[0]
    if zeros.size and zeros[0] < len(d) - 1:
        return 0.5
    return 0.0


def fit_missing_term_constant(traj: TrajectoryRecord,
                              time_weight_exponent: float | None = None) -> CheckReport:
    """Empirical constant in D * (1+t)^w >= C * (sum_i delta2_i + defect).

    The deviation sum runs over all species including the degenerate one;
    that is exactly the term missing from the dissipation itself.  Passes
    when the fitted minimum is positive and stable between trajectory halves.
    """
    w = default_missing_term_weight(traj) if time_weight_exponent is None else time_weight_exponent
    denom = traj.delta2.sum(axis=1) + traj.defect
    mask = denom > DENOM_FLOOR
    name = "missing-term"
    if not mask.any():
        return CheckReport(name=name, passed=True, margin=0.0,
                           details="degenerate: trajectory at equilibrium",
                           constants={"weight_exponent": w})
    ratio = traj.D[mask] * (1.0 + traj.t[mask]) ** w / denom[mask]
    c_hat = float(ratio.min())
    n = len(ratio)
    if n >= 4:
        first = float(ratio[: n // 2].min())
        last = float(ratio[n // 2:].min())
        stable = last >= 0.5 * first
    else:
        first = last = c_hat
        stable = True
    k = int(np.nonzero(mask)[0][int(np.argmin(ratio))])
    # margin positive iff both gates hold: positive constant, stable halves
    margin = min(c_hat, last - 0.5 * first)
    return CheckReport(
        name=name, passed=(c_hat > 0.0) and stable, margin=margin,
        details=f"C_hat = {c_hat:.4e} over {n} samples, halves {first:.3e}/{last:.3e}",
        worst_t=float(traj.t[k]), worst_value=c_hat,
        constants={"C_hat": c_hat, "weight_exponent": w,
                   "first_half_min": first, "last_half_min": last},
    )


def fit_subexponential_decay(traj: TrajectoryRecord, gamma_exponent: float,
                             t_start: float) -> DecayFit:
    """Least squares of ln E_rel against (1+t)^gamma for t >= t_start.

    Returns lambda1 = exp(intercept), lambda2 = -slope, and R^2; thresholds
    are the caller's business.  Samples at or below the relative-entropy
    floor are excluded.
    """
    mask = (traj.t >= t_start) & (traj.E_rel > E_REL_FLOOR)
    if mask.sum() < 2:
        raise DomainError(
            f"fewer than 2 samples with t >= {t_start} and E_rel above floor"
        )
    t = traj.t[mask]
    x = (1.0 + t) ** gamma_exponent
    y = np.log(traj.E_rel[mask])
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 0.0 if ss_tot < 1e-30 else 1.0 - ss_res / ss_tot
    return DecayFit(
        gamma_exponent=gamma_exponent,
        lambda1=float(np.exp(coef[0])),
        lambda2=float(-coef[1]),
        r_squared=r2,
        t_start=float(t[0]),
        t_end=float(t[-1]),
        n_samples=int(mask.sum()),
    )


def fit_polynomial_growth(t: np.ndarray, sup_series: np.ndarray) -> float:
    """Exponent mu from log-log regression of a sup-norm series on (1+t)."""
    t = np.asarray(t, dtype=np.float64)
    sup_series = np.asarray(sup_series, dtype=np.float64)
    if len(t) < 2:
        raise DomainError("need at least 2 samples to fit growth")
    if np.any(sup_series <= 0):
        raise DomainError("sup norms must be positive")
    x = np.log(1.0 + t)
    y = np.log(sup_series)
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(coef[1])


def default_mu_bound(traj: TrajectoryRecord) -> float:
    """Theory ceiling for sup-norm growth: 3 for a degenerate reactant,
    3Q+1 (Q = sum of reactant coefficients) for a degenerate product."""
    d = np.asarray(traj.d)
    zeros = np.nonzero(d == 0.0)[0]
    if zeros.size and zeros[0] == len(d) - 1:
        q = int(np.sum(traj.alpha[:-1]))
        return 3.0 * q + 1.0
    return 3.0


def check_sup_growth(traj: TrajectoryRecord, mu_bound: float | None = None,
                     tol: float = 0.1) -> CheckReport:
    """Fitted growth exponent stays below the theory bound (upper bound:
    small or negative exponents pass)."""
    bound = default_mu_bound(traj) if mu_bound is None else mu_bound
    series = traj.sup.max(axis=1)
    mu_emp = fit_polynomial_growth(traj.t, series)
    return CheckReport(
        name="sup-growth", passed=mu_emp <= bound + tol,
        margin=bound + tol - mu_emp,
        details=f"mu_emp = {mu_emp:.4f} vs bound {bound:g}",
        worst_value=mu_emp,
        constants={"mu_emp": mu_emp, "mu_bound": bound},
    )


def check_l1_convergence(traj: TrajectoryRecord, threshold: float = 1e-3,
                         t_check: float | None = None) -> CheckReport:
    """sum_i ||a_i - a_inf_i||_1 below threshold at the requested time."""
    tc = traj.t[-1] if t_check is None else t_check
    k = int(np.argmin(np.abs(traj.t - tc)))
    total = float(traj.l1dist[k].sum())
    return CheckReport(
        name="l1-convergence", passed=total < threshold, margin=threshold - total,
        details=f"sum_i ||a_i - a_inf||_1 = {total:.3e} at t = {traj.t[k]:g}",
        worst_t=float(traj.t[k]), worst_value=total,
    )


def fit_ckp_constant(traj: TrajectoryRecord) -> CheckReport:
    """Empirical constant in E_rel >= C * sum_i ||a_i - a_inf_i||_1^2."""
    denom = (traj.l1dist ** 2).sum(axis=1)
    mask = (denom > DENOM_FLOOR) & (traj.E_rel > E_REL_FLOOR)
    name = "ckp-constant"
    if not mask.any():
        return CheckReport(name=name, passed=True, margin=0.0,
                           details="degenerate: trajectory at equilibrium")
    ratio = traj.E_rel[mask] / denom[mask]
    c_le = float(ratio.min())
    n = len(ratio)
    if n >= 4:
        first = float(ratio[: n // 2].min())
        last = float(ratio[n // 2:].min())
    else:
        first = last = c_le
    k = int(np.nonzero(mask)[0][int(np.argmin(ratio))])
    return CheckReport(
        name=name, passed=c_le > 0.0, margin=c_le,
        details=f"C_LE = {c_le:.4e} over {n} samples, halves {first:.3e}/{last:.3e}",
        worst_t=float(traj.t[k]), worst_value=c_le,
        constants={"C_LE": c_le, "first_half_min": first, "last_half_min": last},
    )


def fit_entropy_dissipation_bound_constant(traj: TrajectoryRecord) -> CheckReport:
    """Empirical constant bounding the mean-level deviation by deviations.

    lhs_i = |Omega| * (sqrt(mean a_i) - sqrt(a_inf_i))^2 per species; the
    constant is the max of sum_i lhs_i over (sum_i delta2_i + defect).
    Needs the raw per-species L1 norms, so it only runs on in-memory records.
    """
    name = "eb-constant"
    if traj.l1 is None:
        raise DomainError("entropy-dissipation bound fit needs raw norms; "
                          "run on a fresh trajectory, not a CSV reload")
    means = traj.l1 / traj.volume  # integral of a_i / |Omega|
    lhs = (traj.volume * (np.sqrt(means) - np.sqrt(traj.a_inf)[None, :]) ** 2).sum(axis=1)
    denom = traj.delta2.sum(axis=1) + traj.defect
    mask = (denom > DENOM_FLOOR) & (lhs > DENOM_FLOOR)
    if not mask.any():
        return CheckReport(name=name, passed=True, margin=0.0,
                           details="degenerate: deviations below floor")
    ratio = lhs[mask] / denom[mask]
    c_eb = float(ratio.max())
    k = int(np.nonzero(mask)[0][int(np.argmax(ratio))])
    return CheckReport(
        name=name, passed=np.isfinite(c_eb) and c_eb > 0.0, margin=c_eb,
        details=f"C_EB = {c_eb:.4e} over {int(mask.sum())} samples",
        worst_t=float(traj.t[k]), worst_value=c_eb,
        constants={"C_EB": c_eb},
    )


def default_decay_exponent(traj: TrajectoryRecord, dim: int, epsilon: float = 0.1) -> float:
    """Theory decay exponent for the trajectory's degeneracy pattern."""
    d = np.asarray(traj.d)
    zeros = np.nonzero(d == 0.0)[0]
    if zeros.size and zeros[0] == len(d) - 1:
        return 1.0 - epsilon
    if dim <= 3:
        return (1.0 - epsilon) / 2.0
    return (1.0 - epsilon) / (dim - 1)


@dataclass
class CheckOptions:
    """Tunable thresholds for the full checker suite."""

    mass_tol: float = 1e-8
    entropy_slack: float = 1e-8
    energy_rel_tol: float = 0.05
    energy_d_floor: float = 1e-10
    dissipation_slack: float = 0.05
    gamma_exponent: float | None = None  # None: derive from degeneracy + dim
    t_start: float | None = None  # None: 20% of the final time
    decay_r2_min: float = 0.9
    l1_threshold: float = 1e-3
    l1_time: float | None = None
    mu_bound: float | None = None
    missing_term_weight: float | None = None
    dim: int = 1
    select: tuple[str, ...] | None = None  # None: every applicable check

    def selected(self, name: str) -> bool:
        return self.select is None or name in self.select


def run_all_checks(traj: TrajectoryRecord, options: CheckOptions | None = None) -> list[CheckReport]:
    """Run the checker suite on one trajectory and return the reports."""
    opts = options or CheckOptions()
    reports: list[CheckReport] = []
    if opts.selected("mass"):
        reports.append(check_mass_conservation(traj, opts.mass_tol))
    if opts.selected("entropy"):
        reports.append(check_entropy_monotone(traj, opts.entropy_slack))
    if opts.selected("energy-balance"):
        reports.append(check_energy_balance(traj, opts.energy_rel_tol, opts.energy_d_floor))
    if opts.selected("dissipation-lower"):
        reports.append(check_dissipation_lower(traj, opts.dissipation_slack))
    if opts.selected("missing-term"):
        reports.append(fit_missing_term_constant(traj, opts.missing_term_weight))
    if opts.selected("decay"):
        gamma_exp = opts.gamma_exponent
        if gamma_exp is None:
            gamma_exp = default_decay_exponent(traj, opts.dim)
        t_start = 0.2 * traj.t[-1] if opts.t_start is None else opts.t_start
        try:
            fit = fit_subexponential_decay(traj, gamma_exp, t_start)
            passed = fit.lambda2 > 0.0 and fit.r_squared > opts.decay_r2_min
            reports.append(CheckReport(
                name="decay", passed=passed,
                margin=min(fit.lambda2, fit.r_squared - opts.decay_r2_min),
                details=(f"lambda1 = {fit.lambda1:.4e}, lambda2 = {fit.lambda2:.4e}, "
                         f"R2 = {fit.r_squared:.4f}, gamma = {gamma_exp:g}, "
                         f"window [{fit.t_start:g}, {fit.t_end:g}], n = {fit.n_samples}"),
                constants={"lambda1": fit.lambda1, "lambda2": fit.lambda2,
                           "r_squared": fit.r_squared, "gamma": gamma_exp},
            ))
        except DomainError as exc:
            reports.append(CheckReport(name="decay", passed=False, margin=-1.0,
                                       details=str(exc)))
    if opts.selected("sup-growth"):
        reports.append(check_sup_growth(traj, opts.mu_bound))
    if opts.selected("l1-convergence"):
        reports.append(check_l1_convergence(traj, opts.l1_threshold, opts.l1_time))
    if opts.selected("ckp-constant"):
        reports.append(fit_ckp_constant(traj))
    if opts.selected("eb-constant"):
        if traj.l1 is not None:
            reports.append(fit_entropy_dissipation_bound_constant(traj))
        elif opts.select is not None:
            reports.append(CheckReport(
                name="eb-constant", passed=False, margin=-1.0,
                details="not available from a stored CSV (raw norms missing)"))
    return reports
