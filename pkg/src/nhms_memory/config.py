"""
Run configuration: a YAML document validated with pydantic.

Only ``scenario`` is required. For a named scenario every omitted section
(target, grid, pulses, inputs, model, decay) is filled from the scenario
builder, whose keyword arguments may be overridden in ``params``. The
``custom`` scenario needs explicit ``target``, ``pulses`` and ``inputs``.
"""

from __future__ import annotations

import hashlib
import inspect
import json
import math
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import experiments
from .model import FE57, GaussianEnvelope, Grid, InputPulse, IsotopeParams, MagneticPulse, PulseTrain, TargetParams
from .polarization import max_transition_shift

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "RunConfig",
    "parse_config",
    "parse_config_text",
    "dump_config",
    "config_hash",
    "config_from_scenario",
    "to_scenario",
]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists ``(field path, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(f"{p}: {m}" for p, m in self.errors))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class IsotopeConfig(_Strict):
    lifetime: float = Field(FE57.lifetime, gt=0)
    transition_energy: float = Field(FE57.transition_energy, gt=0)
    natural_linewidth: float = Field(FE57.natural_linewidth, gt=0)
    mu_g: float = FE57.mu_g
    mu_e: float = FE57.mu_e

    @model_validator(mode="after")
    def _distinct(self):
        if self.mu_g == self.mu_e:
            raise ValueError("mu_g and mu_e must differ")
        return self


class TargetConfig(_Strict):
    resonant_thickness: float = Field(ge=0)
    length: float = Field(1.0, gt=0)


class GridConfig(_Strict):
    n_z: int = Field(200, ge=2)
    dt: float = Field(0.01, gt=0)
    t_end: float = Field(300.0, gt=0)
    dt_out: float = Field(0.1, gt=0)

    @model_validator(mode="after")
    def _sampling(self):
        if self.dt_out < self.dt:
            raise ValueError("dt_out must be >= dt")
        return self


class PulseConfig(_Strict):
    """Magnetic pulse given by its area (rad); the axis must lie in the x-y plane for vector runs."""

    center: float
    fwhm: float = Field(gt=0)
    area: float = math.pi
    axis: Tuple[float, float, float] = (0.0, 1.0, 0.0)

    @field_validator("axis")
    @classmethod
    def _axis(cls, v):
        if not math.hypot(*v) > 0:
            raise ValueError("axis must be non-zero")
        return v


class InputConfig(_Strict):
    center: float
    fwhm: float = Field(gt=0)
    amplitude: float = Field(ge=0, description="peak Rabi frequency in rad/ns")
    phase: float = 0.0
    polarization: Literal["pi", "sigma"] = "pi"


class OutputConfig(_Strict):
    directory: Optional[str] = None
    stride: int = Field(1, ge=1)
    diagnostics: List[Literal["coherences", "analytic"]] = ["coherences", "analytic"]


ParamValue = Union[bool, int, float, str, List[float]]


class RunConfig(_Strict):
    schema_version: int = Field(SCHEMA_VERSION, alias="schema")
    scenario: str
    params: Dict[str, ParamValue] = {}
    model: Literal["reduced", "full", "vector"] = "reduced"
    decay: bool = True
    isotope: IsotopeConfig = IsotopeConfig()
    target: TargetConfig
    grid: GridConfig = GridConfig()
    pulses: List[PulseConfig]
    inputs: List[InputConfig]
    output: OutputConfig = OutputConfig()

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @field_validator("schema_version")
    @classmethod
    def _schema(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {v} (expected {SCHEMA_VERSION})")
        return v

    @model_validator(mode="before")
    @classmethod
    def _fill_from_scenario(cls, data):
        if not isinstance(data, dict):
            return data
        name = data.get("scenario")
        if not isinstance(name, str) or name == "custom":
            return data
        if name not in experiments.SCENARIOS:
            raise ValueError(f"unknown scenario {name!r}; choose from {sorted(experiments.SCENARIOS)} or 'custom'")
        params = data.get("params") or {}
        if not isinstance(params, dict):
            return data
        unknown = sorted(set(params) - _allowed_params(name))
        if unknown:
            raise ValueError(f"unknown params {unknown} for scenario {name!r}")
        scenario = experiments.build_scenario(name, **params)
        filled = _scenario_sections(scenario)
        return {**filled, **data}

    @property
    def params_isotope(self) -> IsotopeParams:
        iso = self.isotope
        return IsotopeParams(lifetime=iso.lifetime, transition_energy=iso.transition_energy,
                             natural_linewidth=iso.natural_linewidth, mu_g=iso.mu_g, mu_e=iso.mu_e)


def _allowed_params(name: str) -> set:
    builder = experiments.SCENARIOS[name][0]
    return set(inspect.signature(builder).parameters) - {"name", "grid"}


def _precheck(data: dict):
    name = data.get("scenario")
    if name is None:
        return [("scenario", "Field required")]
    if not isinstance(name, str):
        return [("scenario", "Input should be a valid string")]
    if name == "custom":
        return []
    if name not in experiments.SCENARIOS:
        return [("scenario", f"unknown scenario {name!r}; choose from {sorted(experiments.SCENARIOS)} or 'custom'")]
    params = data.get("params") or {}
    if not isinstance(params, dict):
        return [("params", "Input should be a valid dictionary")]
    allowed = _allowed_params(name)
    return [(f"params.{k}", f"unknown parameter for scenario {name!r}; allowed: {sorted(allowed)}")
            for k in params if k not in allowed]


def _area(p: MagneticPulse) -> float:
    # undo the rounding of area -> amplitude -> area so builder areas like pi survive
    k = p.area / math.pi
    return math.pi * round(k, 9) if abs(k - round(k, 9)) < 1e-12 else p.area


def _scenario_sections(s: experiments.Scenario) -> dict:
    g = s.grid
    return {
        "model": s.model,
        "decay": s.decay,
        "target": {"resonant_thickness": s.target.resonant_thickness, "length": s.target.length},
        "grid": {"n_z": g.n_z, "dt": g.dt, "t_end": g.t_end, "dt_out": g.dt_out},
        "pulses": [{"center": p.center, "fwhm": p.envelope.fwhm, "area": _area(p), "axis": list(p.axis)}
                   for p in s.train],
        "inputs": [{"center": p.envelope.center, "fwhm": p.envelope.fwhm, "amplitude": p.envelope.amplitude,
                    "phase": p.phase, "polarization": p.polarization} for p in s.inputs],
    }


def _errors(exc: ValidationError):
    out = []
    for err in exc.errors():
        path = ".".join(str(x) for x in err["loc"]) or "<root>"
        if path == "schema_version":
            path = "schema"
        out.append((path, err["msg"]))
    return out


def to_scenario(cfg: RunConfig) -> experiments.Scenario:
    """Build the runnable scenario; invariant violations raise :class:`ConfigError`."""
    iso = cfg.params_isotope
    try:
        target = TargetParams(cfg.target.resonant_thickness, cfg.target.length, iso)
    except ValueError as exc:
        raise ConfigError([("target", str(exc))]) from None
    g = cfg.grid
    try:
        grid = Grid(g.n_z, g.dt, g.t_end, g.dt_out)
    except ValueError as exc:
        raise ConfigError([("grid", str(exc))]) from None
    pulses = []
    for k, p in enumerate(cfg.pulses):
        try:
            pulses.append(MagneticPulse.from_area(p.area, p.center, p.fwhm, p.axis))
        except ValueError as exc:
            raise ConfigError([(f"pulses.{k}", str(exc))]) from None
    inputs = [InputPulse(GaussianEnvelope(p.amplitude, p.center, p.fwhm), p.phase, p.polarization)
              for p in cfg.inputs]
    errors = []
    for k, p in enumerate(inputs):
        if p.envelope.amplitude > 1e-3 * iso.decay_rate * (1 + 1e-12):
            errors.append((f"inputs.{k}.amplitude", f"exceeds the weak-field bound 1e-3 * Gamma = "
                                                   f"{1e-3 * iso.decay_rate:.4e} rad/ns"))
    train = PulseTrain(tuple(pulses))
    scale = max_transition_shift(iso) if cfg.model == "vector" else 1.0
    rate = max(train.peak_splitting * scale, iso.decay_rate)
    if grid.dt * rate > 0.05:
        errors.append(("grid.dt", f"dt={grid.dt} ns does not resolve the splitting (dt * rate = {grid.dt * rate:.3g} > 0.05)"))
    if errors:
        raise ConfigError(errors)
    try:
        return experiments.Scenario(cfg.scenario, target, train, tuple(inputs), grid, cfg.model, cfg.decay)
    except ValueError as exc:
        raise ConfigError([("scenario", str(exc))]) from None


def parse_config_text(text: str) -> RunConfig:
    """Parse and validate a YAML document; raises :class:`ConfigError`."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([("<file>", f"not valid YAML: {exc}")]) from None
    if not isinstance(data, dict):
        raise ConfigError([("<root>", "expected a mapping of keys to values")])
    errors = _precheck(data)
    if errors:
        raise ConfigError(errors)
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_errors(exc)) from None
    to_scenario(cfg)
    return cfg


def parse_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([("<file>", str(exc))]) from None
    return parse_config_text(text)


def config_from_scenario(name: str, **params) -> RunConfig:
    return RunConfig.model_validate({"scenario": name, "params": params})


def _plain(cfg: RunConfig) -> dict:
    return cfg.model_dump(mode="json", by_alias=True)


def dump_config(cfg: RunConfig) -> str:
    """Serialize to YAML; ``parse_config_text(dump_config(c)) == c``."""
    return yaml.safe_dump(_plain(cfg), sort_keys=False)


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical JSON form, ignoring the output section."""
    data = _plain(cfg)
    data.pop("output")
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()
