"""Run configuration: a validated JSON schema with complete defaults.

Every section is optional; an empty object yields the full default set.
Unknown keys are rejected and errors name the offending field path.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, field_validator

from . import magnetics as mag
from .network.model import NetworkSpec, TrainSettings


class ConfigError(ValueError):
    pass


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class MaterialConfig(_Section):
    Ms: PositiveFloat = 7.0e5
    alpha: PositiveFloat = 0.3
    A_ex: PositiveFloat = 1.0e-11
    Ku2: PositiveFloat = 4.8e5
    D_dmi: float = -1.2e-3
    theta_sh: float = 0.07
    t_fm: PositiveFloat = 0.6e-9
    t_hm: PositiveFloat = 3.0e-9
    rho_hm: PositiveFloat = 200e-9

    def build(self) -> mag.MaterialParams:
        try:
            return mag.MaterialParams(**self.model_dump())
        except mag.MagneticsError as exc:
            raise ConfigError(f"material: {exc}") from exc


class SimulationConfig(_Section):
    dt: PositiveFloat = 50e-15
    relax_time: float = Field(2e-9, ge=0)
    cell: tuple[PositiveFloat, PositiveFloat, PositiveFloat] = (4e-9, 4e-9, 0.6e-9)
    sweep_length: PositiveFloat = 400e-9
    sweep_width: PositiveFloat = 160e-9
    sweep_j: list[float] = [0.0, 0.5e11, 1e11, 1.5e11, 2e11, 3e11, 4e11, 1e12, 2e12, 4e12]
    sweep_duration: PositiveFloat = 0.6e-9
    sweep_transient: PositiveFloat = 0.15e-9

    @field_validator("sweep_j")
    @classmethod
    def _sorted(cls, v):
        if any(j < 0 for j in v) or any(b < a for a, b in zip(v, v[1:])):
            raise ValueError("current densities must be non-negative and ascending")
        return v

    def settings(self) -> mag.RunSettings:
        return mag.RunSettings(dt=self.dt, relax_time=self.relax_time)


class DeviceConfig(_Section):
    neuron_length: PositiveFloat = 50e-9
    neuron_width: PositiveFloat = 20e-9
    synapse_length: PositiveFloat = 170e-9
    synapse_width: PositiveFloat = 200e-9
    r_floor: PositiveFloat = 20e3
    neuron_read_current: PositiveFloat = 80e-9
    t_mgo: PositiveFloat = 2.0e-9


class CircuitConfig(_Section):
    V_max: PositiveFloat = 0.1
    V_div: PositiveFloat = 0.9
    V_src: PositiveFloat = 0.65
    V_t: float = Field(0.226, ge=0)
    R_path: PositiveFloat = 140.0
    G_off: PositiveFloat = 1e-7
    t_write: PositiveFloat = 2e-9
    t_read: PositiveFloat = 2e-9
    I_reset: PositiveFloat = 5e-6
    t_reset: PositiveFloat = 2e-9
    I_out_final: PositiveFloat = 10e-6
    compensate_loading: bool = True


class NetworkConfig(_Section):
    sizes: tuple[PositiveInt, ...] = (256, 20, 26)
    activation: str = "hardware"
    quant_bits_w: PositiveInt = 4
    quant_bits_a: PositiveInt = 2
    w_bound: PositiveFloat = 1.0
    epochs: PositiveInt = 200
    lr: float = Field(0.02, ge=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    batch_size: PositiveInt = 16
    target_high: float = 0.8
    target_low: float = 0.0
    column_budget: PositiveFloat | None = 7.0
    grad_leak: float = Field(0.1, ge=0)
    l1: float = Field(1e-3, ge=0)
    min_fraction: float | None = Field(0.1875, ge=0, lt=1)
    weight_noise: float = Field(0.06, ge=0)

    @field_validator("activation")
    @classmethod
    def _act(cls, v):
        if v not in ("hardware", "ideal"):
            raise ValueError("activation must be 'hardware' or 'ideal'")
        return v

    def train_settings(self, seed: int) -> TrainSettings:
        keys = ("epochs", "lr", "momentum", "batch_size", "target_high", "target_low", "column_budget", "grad_leak", "l1", "min_fraction", "weight_noise")
        return TrainSettings(seed=seed, **{k: getattr(self, k) for k in keys})

    def spec(self, activation) -> NetworkSpec:
        return NetworkSpec(self.sizes, activation=activation, quant_bits_w=self.quant_bits_w, quant_bits_a=self.quant_bits_a, w_bound=self.w_bound)


class DataConfig(_Section):
    train_per_class: PositiveInt = 40
    eval_per_class: PositiveInt = 10
    train_seed: int = 0
    eval_seed: int = 1
    noise: float = Field(0.1, ge=0)
    train_dir: str | None = None
    eval_dir: str | None = None


class VariationConfig(_Section):
    sigma_3: float = Field(0.20, gt=0)
    trials: PositiveInt = 100


class EnergyConfig(_Section):
    write_current: float = Field(17.5e-6, ge=0)
    write_time: float = Field(4e-9, ge=0)
    read_voltage: float = Field(0.9, ge=0)
    read_current: float = Field(80e-9, ge=0)
    read_time: float = Field(2e-9, ge=0)
    V_cmos: PositiveFloat = 0.5


class RunConfig(_Section):
    material: MaterialConfig = MaterialConfig()
    simulation: SimulationConfig = SimulationConfig()
    devices: DeviceConfig = DeviceConfig()
    circuit: CircuitConfig = CircuitConfig()
    network: NetworkConfig = NetworkConfig()
    data: DataConfig = DataConfig()
    variation: VariationConfig = VariationConfig()
    energy: EnergyConfig = EnergyConfig()
    seed: int = 0
    out_dir: str = "out"

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def _format(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{path}: {err['msg']}")
    return "; ".join(parts)


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format(exc)) from None
    cfg.material.build()  # cross-field physical checks
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: config file not found")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(data)


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
