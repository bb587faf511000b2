"""Experiment configuration: a flat dotted-key text format, plus JSON.

The native format is deliberately trivial to parse and emit from any
language: one ``key.path = value`` assignment per line, ``#`` comments,
lists comma-separated.  A JSON file with the same keys (flat or nested)
is accepted interchangeably.  Unknown keys are rejected, every value is
schema-checked before any computation, and diagnostics carry the key path
and line number.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .analysis import CheckOptions
from .errors import ConfigError
from .grid import Grid
from .integrator import (
    SCHEMES,
    StateFields,
    StepperConfig,
    constant_state,
    cosine_perturbed_state,
    random_smooth_state,
)
from .model import SystemSpec

__all__ = ["ExperimentConfig", "parse_config", "parse_config_file", "parse_sweep_file"]

PRESETS = ("constant", "cosine", "random-smooth")

_REQUIRED = object()


def _to_float(raw):
    if isinstance(raw, str):
        return float(raw)
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    raise ValueError(f"expected a number, got {raw!r}")


def _to_int(raw):
    if isinstance(raw, bool):
        raise ValueError(f"expected an integer, got {raw!r}")
    if isinstance(raw, str):
        raw = raw.strip()
        value = float(raw)
    elif isinstance(raw, (int, float)):
        value = float(raw)
    else:
        raise ValueError(f"expected an integer, got {raw!r}")
    if value != int(value):
        raise ValueError(f"expected an integer, got {raw!r}")
    return int(value)


def _split_list(raw):
    if isinstance(raw, str):
        items = [p.strip() for p in raw.split(",") if p.strip() != ""]
        if not items:
            raise ValueError("empty list")
        return items
    if isinstance(raw, (list, tuple)):
        return list(raw)
    return [raw]


def _to_float_list(raw):
    return tuple(_to_float(v) for v in _split_list(raw))


def _to_int_list(raw):
    return tuple(_to_int(v) for v in _split_list(raw))


def _to_str(raw):
    if isinstance(raw, str):
        return raw.strip()
    raise ValueError(f"expected a string, got {raw!r}")


def _to_str_list(raw):
    return tuple(_to_str(v) for v in _split_list(raw))


# key -> (converter, default); _REQUIRED marks mandatory keys
_SCHEMA = {
    "model.m": (_to_int, None),
    "model.alpha": (_to_int_list, _REQUIRED),
    "model.d": (_to_float_list, _REQUIRED),
    "grid.dim": (_to_int, None),
    "grid.lengths": (_to_float_list, _REQUIRED),
    "grid.n": (_to_int_list, _REQUIRED),
    "stepper.dt": (_to_float, _REQUIRED),
    "stepper.t_end": (_to_float, _REQUIRED),
    "stepper.sample_every": (_to_int, 10),
    "stepper.max_substeps": (_to_int, 10_000),
    "stepper.positivity_floor": (_to_float, 1e-12),
    "stepper.scheme": (_to_str, "strang"),
    "initial.preset": (_to_str, "cosine"),
    "initial.masses": (_to_float_list, None),
    "initial.values": (_to_float_list, None),
    "initial.species": (_to_int, 2),
    "initial.amplitude": (_to_float, 0.3),
    "initial.modes": (_to_int_list, None),
    "initial.seed": (_to_int, 0),
    "checks.select": (_to_str_list, None),
    "checks.mass_tol": (_to_float, 1e-8),
    "checks.entropy_slack": (_to_float, 1e-8),
    "checks.energy_rel_tol": (_to_float, 0.05),
    "checks.energy_d_floor": (_to_float, 1e-10),
    "checks.dissipation_slack": (_to_float, 0.05),
    "checks.gamma": (_to_float, None),
    "checks.t_start": (_to_float, None),
    "checks.decay_r2_min": (_to_float, 0.9),
    "checks.l1_threshold": (_to_float, 1e-3),
    "checks.l1_time": (_to_float, None),
    "checks.mu_bound": (_to_float, None),
    "checks.missing_term_weight": (_to_float, None),
    "closeness.c_prc": (_to_float, None),
    "closeness.c_sor": (_to_float, None),
    "output.dir": (_to_str, None),
}

_FIELD_BY_KEY = {key: key.replace(".", "_") for key in _SCHEMA}
_KEY_BY_FIELD = {v: k for k, v in _FIELD_BY_KEY.items()}


@dataclass
class ExperimentConfig:
    model_m: int | None
    model_alpha: tuple[int, ...]
    model_d: tuple[float, ...]
    grid_dim: int | None
    grid_lengths: tuple[float, ...]
    grid_n: tuple[int, ...]
    stepper_dt: float
    stepper_t_end: float
    stepper_sample_every: int
    stepper_max_substeps: int
    stepper_positivity_floor: float
    stepper_scheme: str
    initial_preset: str
    initial_masses: tuple[float, ...] | None
    initial_values: tuple[float, ...] | None
    initial_species: int
    initial_amplitude: float
    initial_modes: tuple[int, ...] | None
    initial_seed: int
    checks_select: tuple[str, ...] | None
    checks_mass_tol: float
    checks_entropy_slack: float
    checks_energy_rel_tol: float
    checks_energy_d_floor: float
    checks_dissipation_slack: float
    checks_gamma: float | None
    checks_t_start: float | None
    checks_decay_r2_min: float
    checks_l1_threshold: float
    checks_l1_time: float | None
    checks_mu_bound: float | None
    checks_missing_term_weight: float | None
    closeness_c_prc: float | None
    closeness_c_sor: float | None
    output_dir: str | None

    def system(self) -> SystemSpec:
        return SystemSpec(alpha=self.model_alpha, d=self.model_d)

    def grid(self) -> Grid:
        return Grid(lengths=self.grid_lengths, n=self.grid_n)

    def stepper(self) -> StepperConfig:
        return StepperConfig(
            dt=self.stepper_dt,
            max_substeps=self.stepper_max_substeps,
            positivity_floor=self.stepper_positivity_floor,
            scheme=self.stepper_scheme,
        )

    def initial_state(self, seed: int | None = None) -> StateFields:
        spec = self.system()
        grid = self.grid()
        preset = self.initial_preset
        if preset == "constant":
            if self.initial_values is None:
                raise ConfigError("initial.values is required for the constant preset")
            return constant_state(self.initial_values, grid)
        if self.initial_masses is None:
            raise ConfigError(f"initial.masses is required for the {preset} preset")
        if preset == "cosine":
            return cosine_perturbed_state(
                spec, grid, self.initial_masses,
                species=self.initial_species - 1,
                amplitude=self.initial_amplitude,
                modes=self.initial_modes,
            )
        return random_smooth_state(
            spec, grid, self.initial_masses,
            amplitude=self.initial_amplitude,
            seed=self.initial_seed if seed is None else seed,
        )

    def check_options(self) -> CheckOptions:
        return CheckOptions(
            mass_tol=self.checks_mass_tol,
            entropy_slack=self.checks_entropy_slack,
            energy_rel_tol=self.checks_energy_rel_tol,
            energy_d_floor=self.checks_energy_d_floor,
            dissipation_slack=self.checks_dissipation_slack,
            gamma_exponent=self.checks_gamma,
            t_start=self.checks_t_start,
            decay_r2_min=self.checks_decay_r2_min,
            l1_threshold=self.checks_l1_threshold,
            l1_time=self.checks_l1_time,
            mu_bound=self.checks_mu_bound,
            missing_term_weight=self.checks_missing_term_weight,
            dim=self.grid().dim,
            select=self.checks_select,
        )

    def to_text(self) -> str:
        """Canonical serialization; parsing it back reproduces this config."""
        lines = []
        for f in fields(self):
            key = _KEY_BY_FIELD[f.name]
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, tuple):
                rendered = ",".join(_render_scalar(v) for v in value)
            else:
                rendered = _render_scalar(value)
            lines.append(f"{key} = {rendered}")
        return "\n".join(lines) + "\n"


def _render_scalar(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _err(message: str, key: str | None = None, line: int | None = None) -> ConfigError:
    loc = ""
    if key is not None:
        loc = f" (key {key}"
        loc += f", line {line})" if line is not None else ")"
    return ConfigError(message + loc)


def _read_assignments(text: str):
    """Raw key -> (value string, line number) from the flat text format."""
    out: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _err(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = line.split("=", 1)
        key = key.strip()
        if key in out:
            raise _err("duplicate key", key, lineno)
        out[key] = (value.strip(), lineno)
    return out


def _flatten_json(obj, prefix="") -> dict:
    out = {}
    if not isinstance(obj, dict):
        raise ConfigError("top-level JSON config must be an object")
    for k, v in obj.items():
        path = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten_json(v, prefix=f"{path}."))
        else:
            out[path] = v
    return out


def _build(assignments: dict) -> ExperimentConfig:
    values = {}
    for key, entry in assignments.items():
        raw, line = entry if isinstance(entry, tuple) else (entry, None)
        if key not in _SCHEMA:
            raise _err("unknown configuration key", key, line)
        conv, _ = _SCHEMA[key]
        try:
            values[_FIELD_BY_KEY[key]] = conv(raw)
        except ValueError as exc:
            raise _err(str(exc), key, line) from exc
    for key, (_, default) in _SCHEMA.items():
        field_name = _FIELD_BY_KEY[key]
        if field_name not in values:
            if default is _REQUIRED:
                raise _err("missing required key", key)
            values[field_name] = default
    cfg = ExperimentConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    try:
        spec = cfg.system()
    except Exception as exc:
        raise _err(f"invalid model: {exc}", "model.alpha / model.d") from exc
    if cfg.model_m is not None and cfg.model_m != spec.m:
        raise _err(f"model.m = {cfg.model_m} but model.d has {spec.m} entries", "model.m")
    try:
        grid = cfg.grid()
    except Exception as exc:
        raise _err(f"invalid grid: {exc}", "grid.lengths / grid.n") from exc
    if cfg.grid_dim is not None and cfg.grid_dim != grid.dim:
        raise _err(f"grid.dim = {cfg.grid_dim} but grid.lengths has {grid.dim} axes", "grid.dim")
    try:
        cfg.stepper()
    except Exception as exc:
        raise _err(f"invalid stepper: {exc}", "stepper.*") from exc
    if cfg.stepper_scheme not in SCHEMES:
        raise _err(f"scheme must be one of {SCHEMES}", "stepper.scheme")
    if cfg.stepper_t_end < 0:
        raise _err("t_end must be non-negative", "stepper.t_end")
    if cfg.stepper_sample_every < 1:
        raise _err("sample_every must be >= 1", "stepper.sample_every")
    if cfg.initial_preset not in PRESETS:
        raise _err(f"preset must be one of {PRESETS}", "initial.preset")
    if cfg.initial_preset == "constant":
        if cfg.initial_values is None:
            raise _err("constant preset needs initial.values", "initial.values")
        if len(cfg.initial_values) != spec.m:
            raise _err(f"need {spec.m} values", "initial.values")
        if any(v <= 0 for v in cfg.initial_values):
            raise _err("values must be strictly positive", "initial.values")
    else:
        if cfg.initial_masses is None:
            raise _err(f"{cfg.initial_preset} preset needs initial.masses", "initial.masses")
        if len(cfg.initial_masses) != spec.m - 1:
            raise _err(f"need {spec.m - 1} masses", "initial.masses")
        if any(v <= 0 for v in cfg.initial_masses):
            raise _err("masses must be positive", "initial.masses")
    if not 1 <= cfg.initial_species <= spec.m:
        raise _err(f"species must be in 1..{spec.m}", "initial.species")
    if cfg.initial_modes is not None and len(cfg.initial_modes) != grid.dim:
        raise _err(f"need {grid.dim} mode counts", "initial.modes")
    for key in ("closeness.c_prc", "closeness.c_sor"):
        v = getattr(cfg, _FIELD_BY_KEY[key])
        if v is not None and v <= 0:
            raise _err("regularity constants must be positive", key)


def parse_config(text: str, fmt: str = "text") -> ExperimentConfig:
    """Parse configuration text in the flat key-path or JSON format."""
    if fmt == "json":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
        return _build(_flatten_json(payload))
    return _build(_read_assignments(text))


def parse_config_file(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    fmt = "json" if path.suffix.lower() == ".json" else "text"
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, fmt=fmt)


def parse_sweep_file(path: str | Path):
    """Split a sweep file into the base config and the swept parameter grid.

    Swept keys are written ``sweep.<key> = v1 | v2 | ...``; every other line
    is ordinary configuration.  Returns (base ExperimentConfig text lines,
    ordered dict key -> list of raw value strings).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read sweep file {path}: {exc}") from exc
    base_lines = []
    sweeps: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped.startswith("sweep."):
            key, _, value = stripped.partition("=")
            key = key.strip()[len("sweep."):]
            if key not in _SCHEMA:
                raise _err("unknown swept key", f"sweep.{key}", lineno)
            options = [v.strip() for v in value.split("|") if v.strip()]
            if not options:
                raise _err("sweep needs at least one value", f"sweep.{key}", lineno)
            sweeps[key] = options
        else:
            base_lines.append(raw)
    if not sweeps:
        raise ConfigError(f"no sweep.<key> entries found in {path}")
    base_text = "\n".join(base_lines) + "\n"
    return base_text, sweeps


def sweep_cases(base_text: str, sweeps: dict[str, list[str]]):
    """Cross product of swept values; yields (name, ExperimentConfig)."""
    keys = sorted(sweeps)
    counts = [len(sweeps[k]) for k in keys]
    total = int(np.prod(counts))
    for index in range(total):
        rem = index
        chosen = {}
        for k, c in zip(keys, counts):
            chosen[k] = sweeps[k][rem % c]
            rem //= c
        assignments = _read_assignments(base_text)
        for k, v in chosen.items():
            assignments[k] = (v, 0)
        cfg = _build(assignments)
        label = ";".join(f"{k}={chosen[k]}" for k in keys)
        yield f"case{index:03d}", label, cfg
