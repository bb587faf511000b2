"""Command-line entry point: run, check, equilibrium, fit, sweep.

Exit codes: 0 all selected checks passed (or command succeeded), 1 a check
failed, 2 configuration error, 3 numerical failure (stiffness or lost
positivity).  Trajectory CSVs are written once, single-writer, and are
byte-identical across repeated runs of the same configuration and seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis
from .config import ExperimentConfig, parse_config_file, parse_sweep_file, sweep_cases
from .errors import ConfigError, DomainError, EntrodiffError, PositivityError, StiffnessError
from .integrator import TrajectoryRecord, run as run_simulation
from .kernels import active_backend
from .model import closeness_check, equilibrium_f, solve_equilibrium

__all__ = ["main"]

OUT_ENV = "ENTRODIFF_OUT"


# ---------------------------------------------------------------------------
# trajectory CSV: fixed column order, reproducible byte-for-byte
# ---------------------------------------------------------------------------

def csv_columns(m: int) -> list[str]:
    cols = ["t", "E", "E_rel", "D", "D_lower_rhs"]
    cols += [f"M_{i}" for i in range(1, m)]
    cols += [f"sup_{i}" for i in range(1, m + 1)]
    cols += [f"l1dist_{i}" for i in range(1, m + 1)]
    cols += [f"delta2_{i}" for i in range(1, m + 1)]
    cols += ["defect"]
    return cols


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(traj: TrajectoryRecord, path: Path) -> None:
    m = traj.m
    lines = [",".join(csv_columns(m))]
    for k in range(traj.n_samples):
        row = [traj.t[k], traj.E[k], traj.E_rel[k], traj.D[k], traj.D_lower_rhs[k]]
        row += list(traj.masses[k])
        row += list(traj.sup[k])
        row += list(traj.l1dist[k])
        row += list(traj.delta2[k])
        row += [traj.defect[k]]
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path: Path, cfg: ExperimentConfig) -> TrajectoryRecord:
    """Rebuild a record from CSV; metadata comes from the config, raw
    per-species norms are not persisted and stay None."""
    spec = cfg.system()
    grid = cfg.grid()
    m = spec.m
    expected = csv_columns(m)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if header != expected:
        raise ConfigError(
            f"{path}: unexpected CSV columns; expected {','.join(expected)}"
        )
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(expected):
        raise ConfigError(f"{path}: expected {len(expected)} columns")
    col = {name: j for j, name in enumerate(expected)}
    masses = data[:, col["M_1"]: col["M_1"] + m - 1]
    eq = solve_equilibrium(masses[0], grid.volume, spec.alpha)
    from .grid import poincare_constant

    return TrajectoryRecord(
        t=data[:, col["t"]],
        E=data[:, col["E"]],
        E_rel=data[:, col["E_rel"]],
        D=data[:, col["D"]],
        D_lower_rhs=data[:, col["D_lower_rhs"]],
        masses=masses,
        sup=data[:, col["sup_1"]: col["sup_1"] + m],
        l1dist=data[:, col["l1dist_1"]: col["l1dist_1"] + m],
        delta2=data[:, col["delta2_1"]: col["delta2_1"] + m],
        defect=data[:, col["defect"]],
        a_inf=eq.a_inf,
        masses0=masses[0].copy(),
        alpha=spec.alpha,
        d=spec.d,
        poincare=poincare_constant(grid),
        volume=grid.volume,
        l1=None,
        l2=None,
    )


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _summary_lines(cfg: ExperimentConfig, traj: TrajectoryRecord, seed: int | None) -> list[str]:
    lines = [
        f"species: {traj.m}",
        f"alpha: {','.join(str(v) for v in traj.alpha)}",
        f"d: {','.join(_fmt(v) for v in traj.d)}",
        f"grid_n: {','.join(str(v) for v in cfg.grid_n)}",
        f"grid_lengths: {','.join(_fmt(v) for v in cfg.grid_lengths)}",
        f"dt: {_fmt(cfg.stepper_dt)}",
        f"t_end: {_fmt(traj.t[-1])}",
        f"scheme: {cfg.stepper_scheme}",
        f"samples: {traj.n_samples}",
        f"seed: {cfg.initial_seed if seed is None else seed}",
        f"poincare_constant: {_fmt(traj.poincare)}",
    ]
    for i, v in enumerate(traj.masses0, start=1):
        lines.append(f"mass_{i}: {_fmt(v)}")
    for i, v in enumerate(traj.a_inf, start=1):
        lines.append(f"a_inf_{i}: {_fmt(v)}")
    lines += [
        f"E_initial: {_fmt(traj.E[0])}",
        f"E_final: {_fmt(traj.E[-1])}",
        f"E_rel_final: {_fmt(traj.E_rel[-1])}",
        f"D_final: {_fmt(traj.D[-1])}",
        f"min_cell_value: {_fmt(traj.min_value)}",
        f"cells_flagged_below_1e-14: {'yes' if traj.min_value < 1e-14 else 'no'}",
    ]
    return lines


def _report_table(reports: list[analysis.CheckReport]) -> str:
    rows = [("check", "status", "margin", "details")]
    for r in reports:
        rows.append((r.name, "PASS" if r.passed else "FAIL", f"{r.margin:.3e}", r.details))
    widths = [max(len(row[j]) for row in rows) for j in range(3)]
    out = []
    for row in rows:
        out.append(
            f"{row[0]:<{widths[0]}}  {row[1]:<{widths[1]}}  {row[2]:<{widths[2]}}  {row[3]}"
        )
    return "\n".join(out)


def _report_summary_lines(reports: list[analysis.CheckReport]) -> list[str]:
    lines = []
    for r in reports:
        lines.append(f"{r.name}.passed: {'true' if r.passed else 'false'}")
        lines.append(f"{r.name}.margin: {_fmt(r.margin)}")
        for key, val in r.constants.items():
            lines.append(f"{r.name}.{key}: {_fmt(val)}")
    lines.append(f"all_passed: {'true' if all(r.passed for r in reports) else 'false'}")
    return lines


_GNUPLOT_TEMPLATE = """\
# gnuplot script for a trajectory CSV produced by 'entrodiff run'
set datafile separator ','
set key autotitle columnhead
set logscale y
set xlabel 't'
plot '{csv}' using 1:3 with lines title 'relative entropy', \\
     '{csv}' using 1:4 with lines title 'dissipation', \\
     '{csv}' using 1:5 with lines title 'dissipation lower bound'
"""


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _resolve_out(args, cfg: ExperimentConfig | None) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUT_ENV, "entrodiff_out"))


def _simulate(cfg: ExperimentConfig, seed: int | None) -> TrajectoryRecord:
    state0 = cfg.initial_state(seed)
    return run_simulation(
        state0, cfg.system(), cfg.grid(), cfg.stepper(),
        cfg.stepper_t_end, cfg.stepper_sample_every,
    )


def cmd_run(args) -> int:
    cfg = parse_config_file(args.config)
    out = _resolve_out(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    traj = _simulate(cfg, args.seed)
    csv_path = out / "trajectory.csv"
    write_trajectory_csv(traj, csv_path)
    (out / "summary.txt").write_text("\n".join(_summary_lines(cfg, traj, args.seed)) + "\n")
    if args.plot:
        (out / "plots.gp").write_text(_GNUPLOT_TEMPLATE.format(csv=csv_path.name))
    if not args.quiet:
        print(f"wrote {csv_path} ({traj.n_samples} samples, backend {active_backend()})")
        print(f"E_rel: {traj.E_rel[0]:.6e} -> {traj.E_rel[-1]:.6e}")
    return 0


def cmd_check(args) -> int:
    cfg = parse_config_file(args.config)
    out = _resolve_out(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    if args.traj:
        traj = read_trajectory_csv(Path(args.traj), cfg)
    else:
        traj = _simulate(cfg, args.seed)
    reports = analysis.run_all_checks(traj, cfg.check_options())
    if not args.quiet:
        print(_report_table(reports))
    (out / "checks_summary.txt").write_text("\n".join(_report_summary_lines(reports)) + "\n")
    return 0 if all(r.passed for r in reports) else 1


def cmd_equilibrium(args) -> int:
    cfg = parse_config_file(args.config)
    spec = cfg.system()
    grid = cfg.grid()
    if cfg.initial_preset == "constant":
        values = np.asarray(cfg.initial_values)
        masses = np.array([(values[i] + values[-1]) * grid.volume for i in range(spec.m - 1)])
    else:
        masses = np.asarray(cfg.initial_masses, dtype=np.float64)
    eq = solve_equilibrium(masses, grid.volume, spec.alpha)
    residual = equilibrium_f(eq.a_inf[-1], masses, grid.volume, spec.alpha)
    for i, v in enumerate(eq.a_inf, start=1):
        print(f"a_inf_{i} = {_fmt(v)}")
    print(f"f_residual = {_fmt(residual)}")
    if cfg.closeness_c_prc is not None and cfg.closeness_c_sor is not None:
        deg = spec.degenerate_index
        positive = [v for v in spec.d if v > 0]
        if deg is not None and len(positive) >= 2:
            rep = closeness_check(min(positive), spec.d[-1] if spec.d[-1] > 0 else max(positive),
                                  cfg.closeness_c_prc, cfg.closeness_c_sor)
            print(f"closeness_satisfied = {'true' if rep.satisfied else 'false'}")
            print(f"closeness_margin_left = {_fmt(rep.margin_left)}")
            print(f"closeness_margin_right = {_fmt(rep.margin_right)}")
    return 0


def cmd_fit(args) -> int:
    cfg = parse_config_file(args.config)
    traj = read_trajectory_csv(Path(args.traj), cfg)
    gamma_exp = args.gamma
    if gamma_exp is None:
        gamma_exp = cfg.checks_gamma
    if gamma_exp is None:
        gamma_exp = analysis.default_decay_exponent(traj, cfg.grid().dim)
    t_start = cfg.checks_t_start
    if t_start is None:
        t_start = 0.2 * float(traj.t[-1])
    fit = analysis.fit_subexponential_decay(traj, gamma_exp, t_start)
    print(f"gamma = {_fmt(fit.gamma_exponent)}")
    print(f"lambda1 = {_fmt(fit.lambda1)}")
    print(f"lambda2 = {_fmt(fit.lambda2)}")
    print(f"r_squared = {_fmt(fit.r_squared)}")
    print(f"window = [{_fmt(fit.t_start)}, {_fmt(fit.t_end)}]")
    print(f"n_samples = {fit.n_samples}")
    return 0


def _sweep_case(payload):
    """Worker for one sweep member; runs in its own process under --jobs."""
    name, label, cfg, out_dir, seed = payload
    out = Path(out_dir) / name
    out.mkdir(parents=True, exist_ok=True)
    traj = _simulate(cfg, seed)
    write_trajectory_csv(traj, out / "trajectory.csv")
    (out / "summary.txt").write_text("\n".join(_summary_lines(cfg, traj, seed)) + "\n")
    gamma_exp = cfg.checks_gamma
    if gamma_exp is None:
        gamma_exp = analysis.default_decay_exponent(traj, cfg.grid().dim)
    t_start = cfg.checks_t_start
    if t_start is None:
        t_start = 0.2 * float(traj.t[-1])
    try:
        fit = analysis.fit_subexponential_decay(traj, gamma_exp, t_start)
        lam1, lam2, r2 = fit.lambda1, fit.lambda2, fit.r_squared
    except DomainError:
        lam1 = lam2 = r2 = float("nan")
    mu = analysis.check_sup_growth(traj, cfg.checks_mu_bound).constants["mu_emp"]
    return name, label, gamma_exp, lam1, lam2, r2, mu


def cmd_sweep(args) -> int:
    base_text, sweeps = parse_sweep_file(args.config)
    out = _resolve_out(args, None)
    out.mkdir(parents=True, exist_ok=True)
    cases = [(name, label, cfg, str(out), args.seed)
             for name, label, cfg in sweep_cases(base_text, sweeps)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_case, cases))
    else:
        results = [_sweep_case(c) for c in cases]
    results.sort(key=lambda r: r[0])
    header = "case,parameters,gamma,lambda1,lambda2,r_squared,mu_emp"
    lines = [header]
    for name, label, gamma_exp, lam1, lam2, r2, mu in results:
        lines.append(
            f"{name},{label},{_fmt(gamma_exp)},{_fmt(lam1)},{_fmt(lam2)},{_fmt(r2)},{_fmt(mu)}"
        )
    (out / "sweep_results.csv").write_text("\n".join(lines) + "\n")
    if not args.quiet:
        widths = [max(len(row.split(",")[j]) for row in lines) for j in range(2)]
        print(f"{'case':<{widths[0]}}  {'parameters':<{widths[1]}}  "
              f"{'lambda2':>12}  {'R2':>8}  {'mu_emp':>8}")
        for name, label, _, _, lam2, r2, mu in results:
            print(f"{name:<{widths[0]}}  {label:<{widths[1]}}  {lam2:>12.4e}  {r2:>8.4f}  {mu:>8.3f}")
        print(f"wrote {out / 'sweep_results.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entrodiff",
        description="Simulate degenerate triangular reaction-diffusion systems "
                    "and verify entropy-method estimates along trajectories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_traj=False):
        p.add_argument("--config", required=True, help="experiment config (.cfg text or .json)")
        p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./entrodiff_out)")
        p.add_argument("--seed", type=int, default=None, help="override initial.seed")
        p.add_argument("--quiet", action="store_true")
        if needs_traj:
            p.add_argument("--traj", default=None, help="stored trajectory CSV")

    p_run = sub.add_parser("run", help="simulate and write trajectory CSV + summary")
    common(p_run)
    p_run.add_argument("--plot", action="store_true", help="also write a gnuplot script")
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="run the checker suite on a fresh or stored trajectory")
    common(p_check, needs_traj=True)
    p_check.set_defaults(func=cmd_check)

    p_eq = sub.add_parser("equilibrium", help="print the equilibrium state and f-residual")
    common(p_eq)
    p_eq.set_defaults(func=cmd_equilibrium)

    p_fit = sub.add_parser("fit", help="fit the sub-exponential decay rate of a stored trajectory")
    common(p_fit)
    p_fit.add_argument("--traj", required=True, help="stored trajectory CSV")
    p_fit.add_argument("--gamma", type=float, default=None, help="decay exponent gamma")
    p_fit.set_defaults(func=cmd_fit)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep and aggregate fitted exponents")
    common(p_sweep)
    p_sweep.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (StiffnessError, PositivityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except EntrodiffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
