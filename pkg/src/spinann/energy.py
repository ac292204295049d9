"""Per-phase energy bookkeeping for spintronic neurons and synapses.

Write and reset phases dissipate ``I^2 R t`` in the heavy-metal path, the
read phase ``V I t`` in the divider. Logs are additive: reports over
concatenated logs equal the sum of the parts.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_json
from .validation import check_positive

FJ = 1e-15

R_NEURON_PATH = 140.0  # ohm, heavy-metal write/reset path of the neuron
ANALOG_NEURON_J = 700e-15
DIGITAL_NEURON_J = 832.6e-15

NEURON_PHASES = ("write", "read", "reset")


class EnergyLogError(ValueError):
    pass


def hm_resistance(length: float, width: float, t_hm: float, rho_hm: float) -> float:
    """Resistance (ohm) of a heavy-metal strip of the given dimensions."""
    for v, name in ((length, "length"), (width, "width"), (t_hm, "t_hm"), (rho_hm, "rho_hm")):
        check_positive(v, name)
    return rho_hm * length / (width * t_hm)


def _nonneg(*vals):
    for v in vals:
        if np.any(np.asarray(v) < 0):
            raise ValueError("energy inputs must be non-negative")


def write_energy(I, R, t):
    """Joule heating ``I^2 R t`` (J)."""
    _nonneg(R, t)
    return np.square(I) * R * t


def read_energy(V, I, t):
    """Source energy ``V I t`` (J)."""
    _nonneg(V, I, t)
    return V * I * t


def synapse_power_ratio(V_spin: float, V_cmos: float) -> float:
    """Power saving per synapse at equal resistance, ``(V_cmos / V_spin)^2``."""
    check_positive(V_spin, "V_spin")
    check_positive(V_cmos, "V_cmos")
    return (V_cmos / V_spin) ** 2


@dataclass
class EnergyRecord:
    kind: str  # "neuron" or "synapse"
    phase: str
    energy_J: float
    events: int = 1
    device_seconds: float = 0.0


@dataclass
class EnergyLog:
    records: list[EnergyRecord] = field(default_factory=list)
    inferences: int = 0

    def add_joule(self, kind: str, phase: str, I, R, t, events: int | None = None) -> float:
        e = float(np.sum(write_energy(I, R, t)))
        n = int(np.size(I)) if events is None else events
        self.records.append(EnergyRecord(kind, phase, e, n, float(t) * n))
        return e

    def add_vit(self, kind: str, phase: str, V, I, t, events: int | None = None) -> float:
        e = float(np.sum(read_energy(V, I, t)))
        n = int(np.size(I)) if events is None else events
        self.records.append(EnergyRecord(kind, phase, e, n, float(t) * n))
        return e

    def add_synapse_read(self, V, G, t) -> float:
        """Crossbar dissipation ``V^2 G t`` summed over every cell; ``V`` broadcast over ``G``."""
        V = np.asarray(V, dtype=float)
        G = np.asarray(G, dtype=float)
        _nonneg(G, t)
        e = float(np.sum(V[..., :, None] ** 2 * G) * t)
        n = int(np.prod(np.broadcast_shapes(V[..., :, None].shape, G.shape)))
        self.records.append(EnergyRecord("synapse", "read", e, n, float(t) * n))
        return e

    def __add__(self, other: "EnergyLog") -> "EnergyLog":
        return EnergyLog(self.records + other.records, self.inferences + other.inferences)


@dataclass(frozen=True)
class EnergyReport:
    """Totals over a log plus per-neuron and per-synapse averages."""

    neuron_write_J: float = 0.0
    neuron_read_J: float = 0.0
    neuron_reset_J: float = 0.0
    synapse_J: float = 0.0
    synapse_device_seconds: float = 0.0
    neuron_cycles: int = 0
    inferences: int = 0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v < 0:
                raise EnergyLogError(f"{k} is negative")

    def _per_neuron(self, total: float) -> float:
        return total / self.neuron_cycles if self.neuron_cycles else 0.0

    @property
    def write_J(self) -> float:
        return self._per_neuron(self.neuron_write_J)

    @property
    def read_J(self) -> float:
        return self._per_neuron(self.neuron_read_J)

    @property
    def reset_J(self) -> float:
        return self._per_neuron(self.neuron_reset_J)

    @property
    def total_J(self) -> float:
        return self._per_neuron(self.neuron_write_J + self.neuron_read_J + self.neuron_reset_J)

    @property
    def synapse_power_W(self) -> float:
        return self.synapse_J / self.synapse_device_seconds if self.synapse_device_seconds else 0.0

    @property
    def inference_J(self) -> float:
        """Aggregate energy of neurons and synapses per inference."""
        total = self.neuron_write_J + self.neuron_read_J + self.neuron_reset_J + self.synapse_J
        return total / self.inferences if self.inferences else total

    @property
    def ratio_vs_analog(self) -> float:
        return ANALOG_NEURON_J / self.total_J if self.total_J else 0.0

    @property
    def ratio_vs_digital(self) -> float:
        return DIGITAL_NEURON_J / self.total_J if self.total_J else 0.0

    def __add__(self, other: "EnergyReport") -> "EnergyReport":
        a, b = asdict(self), asdict(other)
        return EnergyReport(**{k: a[k] + b[k] for k in a})

    def to_dict(self) -> dict:
        out = asdict(self)
        for k in ("write_J", "read_J", "reset_J", "total_J", "inference_J"):
            v = getattr(self, k)
            out[k] = v
            out[k[:-2] + "_fJ"] = v / FJ
        out["synapse_power_W"] = self.synapse_power_W
        out["ratio_vs_analog"] = self.ratio_vs_analog
        out["ratio_vs_digital"] = self.ratio_vs_digital
        out["baseline_analog_fJ"] = ANALOG_NEURON_J / FJ
        out["baseline_digital_fJ"] = DIGITAL_NEURON_J / FJ
        return out

    def save(self, path) -> Path:
        return atomic_write_json(path, self.to_dict())


def inference_energy_report(log: EnergyLog) -> EnergyReport:
    """Sum a log into a report.

    Every neuron cycle must log write, read and reset; unequal event counts
    across the three phases mean entries are missing.
    """
    sums = {p: 0.0 for p in NEURON_PHASES}
    counts = {p: 0 for p in NEURON_PHASES}
    syn_e = syn_s = 0.0
    for r in log.records:
        if r.kind == "neuron":
            if r.phase not in sums:
                raise EnergyLogError(f"unknown neuron phase {r.phase!r}")
            sums[r.phase] += r.energy_J
            counts[r.phase] += r.events
        elif r.kind == "synapse":
            syn_e += r.energy_J
            syn_s += r.device_seconds
        else:
            raise EnergyLogError(f"unknown device kind {r.kind!r}")
    if len(set(counts.values())) != 1:
        raise EnergyLogError(f"missing log entries: neuron phase counts {counts}")
    return EnergyReport(
        sums["write"], sums["read"], sums["reset"], syn_e, syn_s, counts["write"], log.inferences
    )


def nominal_cycle_log(
    read_time: float = 2e-9,
    write_current: float = 17.5e-6,
    write_time: float = 4e-9,
    read_voltage: float = 0.9,
    read_current: float = 80e-9,
    reset_current: float = 5e-6,
    reset_time: float = 2e-9,
    R_path: float = R_NEURON_PATH,
) -> EnergyLog:
    """One neuron cycle at the nominal averages: 17.5 uA write over 4 ns, 80 nA read at 0.9 V, 5 uA reset for 2 ns."""
    log = EnergyLog(inferences=1)
    log.add_joule("neuron", "write", write_current, R_path, write_time)
    log.add_vit("neuron", "read", read_voltage, read_current, read_time)
    log.add_joule("neuron", "reset", reset_current, R_path, reset_time)
    return log
