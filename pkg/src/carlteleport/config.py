"""Scenario configuration: one YAML file, validated strictly (unknown keys are errors)."""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path

import jsonschema
import yaml

from .dynamics import CarlParams, PhysicalParams, interaction_window, physical_to_model
from .fock import FockSpace, StateVector, coherent_state, fock_state, squeezed_vacuum
from .teleport import GridSpec


class ConfigError(ValueError):
    """The configuration file is malformed or inconsistent."""


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a sign or dot (``1e6``, ``1.0e6``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)


_number = {"type": "number"}
_positive_int = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["seed"],
    "properties": {
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "g": {"type": "number", "exclusiveMinimum": 0},
                "ratio": {"type": "number", "exclusiveMinimum": 0},
                "n_atoms": {"type": "number", "minimum": 1},
                "omega_r": {"type": "number", "exclusiveMinimum": 0},
                "delta": _number,
            },
        },
        "physical": {
            "type": "object",
            "additionalProperties": False,
            "required": ["rabi", "detuning20", "pump_frequency", "dipole", "volume", "mass",
                         "k1", "k2", "condensate_size", "wavelength"],
            "properties": {
                **{k: _number for k in ("rabi", "detuning20", "pump_frequency", "dipole", "volume",
                                        "mass", "condensate_size", "wavelength", "n_atoms", "probe_detuning")},
                "k1": {"type": "array", "items": _number, "minItems": 3, "maxItems": 3},
                "k2": {"type": "array", "items": _number, "minItems": 3, "maxItems": 3},
            },
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "minProperties": 1,
            "maxProperties": 1,
            "properties": {"value": {"type": "number", "minimum": 0}, "fraction": {"type": "number", "minimum": 0}},
        },
        "input": {
            "type": "object",
            "additionalProperties": False,
            "minProperties": 1,
            "maxProperties": 1,
            "properties": {
                "vacuum": {"type": "boolean", "const": True},
                "coherent": {"oneOf": [_number, {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}]},
                "squeezed": _number,
                "fock": {"type": "integer", "minimum": 0},
            },
        },
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 4}, "minItems": 3, "maxItems": 3},
        "input_dim": {"type": "integer", "minimum": 4},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "radius": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "n_radial": _positive_int,
                "n_angular": _positive_int,
            },
        },
        "shots": _positive_int,
        "samples": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string"},
        "n_times": {"type": "integer", "minimum": 2},
        "resource_n3": {"type": "number", "minimum": 0},
        "channel_k": {"type": "number", "minimum": 0},
    },
}


@dataclass(frozen=True)
class InputState:
    kind: str
    value: complex | float | int | None = None

    def build(self, dim: int) -> StateVector:
        if self.kind == "vacuum":
            return fock_state(dim, 0)
        if self.kind == "coherent":
            return coherent_state(dim, complex(self.value)).check_truncation()
        if self.kind == "squeezed":
            return squeezed_vacuum(FockSpace((dim,)), 0, float(self.value))
        if self.kind == "fock":
            return fock_state(dim, int(self.value))
        raise ConfigError(f"unknown input state {self.kind!r}")

    def describe(self) -> dict:
        if self.kind == "coherent":
            v = complex(self.value)
            return {"kind": "coherent", "value": [v.real, v.imag]}
        return {"kind": self.kind, "value": None if self.value is None else self.value}


@dataclass(frozen=True)
class ScenarioConfig:
    params: CarlParams
    seed: int
    time: float | None = None
    time_fraction: float | None = 0.9
    input: InputState = InputState("coherent", 0.5)
    dims: tuple[int, int, int] = (48, 6, 48)
    input_dim: int = 25
    grid: GridSpec = GridSpec()
    shots: int = 100_000
    samples: int = 10_000
    output: str = "out"
    n_times: int = 51
    resource_n3: float | None = None
    channel_k: float | None = None

    def __post_init__(self):
        if (self.time is None) == (self.time_fraction is None):
            raise ConfigError("exactly one of time value or window fraction is required")
        if any(d < 4 for d in self.dims) or self.input_dim < 4:
            raise ConfigError("every dimension must be >= 4")

    def resolve_time(self) -> float:
        """Absolute interaction time (may raise EmptyWindowError for window fractions)."""
        if self.time is not None:
            return float(self.time)
        return float(interaction_window(self.params).time_at(self.time_fraction))

    def with_overrides(self, seed: int | None = None, dims=None, output: str | None = None) -> "ScenarioConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if dims is not None:
            changes["dims"] = tuple(int(d) for d in dims)
        if output is not None:
            changes["output"] = str(output)
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "time": self.time,
            "time_fraction": self.time_fraction,
            "input": self.input.describe(),
            "dims": list(self.dims),
            "input_dim": self.input_dim,
            "grid": {"radius": self.grid.radius, "n_radial": self.grid.n_radial, "n_angular": self.grid.n_angular},
            "shots": self.shots,
            "samples": self.samples,
            "seed": self.seed,
            "n_times": self.n_times,
            "resource_n3": self.resource_n3,
            "channel_k": self.channel_k,
        }


def _params(data: dict) -> CarlParams:
    if ("params" in data) == ("physical" in data):
        raise ConfigError("give exactly one of 'params' or 'physical'")
    if "physical" in data:
        phys = dict(data["physical"])
        phys["k1"], phys["k2"] = tuple(phys["k1"]), tuple(phys["k2"])
        return physical_to_model(PhysicalParams(**phys)).params
    p = data["params"]
    omega_r = p.get("omega_r", 1.0)
    n_atoms = p.get("n_atoms", 1e6)
    if ("g" in p) == ("ratio" in p):
        raise ConfigError("params needs exactly one of 'g' or 'ratio'")
    if "ratio" in p:
        return CarlParams.from_ratio(p["ratio"], omega_r, n_atoms, p.get("delta"))
    return CarlParams(p["g"], n_atoms, omega_r, p.get("delta", omega_r))


def _input(data: dict) -> InputState:
    spec = data.get("input", {"coherent": 0.5})
    (kind, value), = spec.items()
    if kind == "coherent" and isinstance(value, list):
        value = complex(value[0], value[1])
    return InputState(kind, None if kind == "vacuum" else value)


def config_from_dict(data) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid configuration at {where}: {exc.message}") from None
    try:
        params = _params(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    time = data.get("time", {"fraction": 0.9})
    grid = data.get("grid", {})
    kwargs = {k: data[k] for k in ("input_dim", "shots", "samples", "output", "n_times", "resource_n3", "channel_k")
              if k in data}
    return ScenarioConfig(
        params=params,
        seed=int(data["seed"]),
        time=time.get("value"),
        time_fraction=time.get("fraction"),
        input=_input(data),
        dims=tuple(data.get("dims", (48, 6, 48))),
        grid=GridSpec(grid.get("radius"), grid.get("n_radial", 64), grid.get("n_angular", 64)),
        **kwargs,
    )


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from None
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from None
    return config_from_dict(data)


def parse_dims(text: str) -> tuple[int, int, int]:
    try:
        dims = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"--dims expects three integers like 48,6,48, got {text!r}") from None
    if len(dims) != 3 or any(d < 4 for d in dims):
        raise ConfigError("--dims needs three dimensions, each >= 4")
    return dims

