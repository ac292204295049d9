"""Domain-wall neuron and its axon circuit.

A neuron cycles through three phases:

* write: the input current through the heavy metal moves the wall by an
  amount proportional to the delivered charge, pinned at the free-layer ends;
* read: a reference MTJ (fixed AP) on top and the neuron MTJ below form a
  divider whose midpoint drives the gate of a p-type output transistor;
* reset: a fixed current pulse returns the wall to the left edge.

As the wall moves right the neuron conductance rises, the gate voltage falls
and the transistor delivers more current, giving a saturating-linear
activation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import magnetics as mag
from ._io import atomic_write_text
from .energy import R_NEURON_PATH, EnergyLog
from .mtj import DwDevice
from .validation import r_squared

PHASES = ("reset", "write", "read")
_NEXT = {"reset": "write", "write": "read", "read": "reset"}


class NeuronError(ValueError):
    pass


class PhaseError(NeuronError):
    pass


@dataclass(frozen=True)
class DisplacementMap:
    """Wall displacement proportional to delivered charge.

    ``I_crit`` moves the wall across ``L_free`` in ``t_write``.
    """

    L_free: float = 50e-9
    I_crit: float = 5e-6
    t_write: float = 2e-9

    def __post_init__(self):
        if not (self.L_free > 0 and self.I_crit > 0 and self.t_write > 0):
            raise NeuronError("displacement map parameters must be positive")

    @property
    def mobility(self) -> float:
        """Metres per coulomb."""
        return self.L_free / (self.I_crit * self.t_write)

    def displacement(self, I, t):
        return self.mobility * np.asarray(I, dtype=float) * t

    def advance(self, x, I, t):
        return np.clip(np.asarray(x, dtype=float) + self.displacement(I, t), 0.0, self.L_free)

    def saturation_current(self, t: float | None = None) -> float:
        """Input current that just reaches the right edge from x=0 in time ``t``."""
        t = self.t_write if t is None else t
        return self.I_crit * self.t_write / t


def calibrate_displacement(
    params: mag.MaterialParams | None = None,
    width: float = 20e-9,
    L_free: float = 50e-9,
    t_write: float = 2e-9,
    currents=(1.25e-6, 2.5e-6, 3.75e-6, 5e-6),
    strip_length: float = 200e-9,
    x0: float = 20e-9,
    settings: mag.RunSettings = mag.RunSettings(),
) -> tuple[DisplacementMap, np.ndarray]:
    """Fit the charge-to-displacement map from micromagnetic runs.

    The runs use a strip of the neuron's width but longer than its free
    layer, so the wall moves through a region free of the pinned-band
    repulsion that dominates a 50 nm layer. Returns the map and the measured
    displacements (m) per current.
    """
    params = params or mag.MaterialParams()
    geom = mag.StripGeometry(free_length=strip_length, width=width, cell=settings_cell(width))
    start = mag.prepare_wall(geom, params, x0, settings)
    disp = []
    for I in currents:
        trace, _ = mag.run_dw_density(start, params, params.current_density(I, width), t_write, settings)
        disp.append(trace.positions[-1] - trace.positions[0])
    disp = np.array(disp)
    q = np.asarray(currents) * t_write
    mobility = float(q @ disp / (q @ q))
    return DisplacementMap(L_free, L_free / (mobility * t_write), t_write), disp


def settings_cell(width: float) -> tuple[float, float, float]:
    """Default 4 nm cells, narrowed in y when the strip is not a multiple of 4 nm."""
    ny = max(1, int(round(width / 4e-9)))
    return (4e-9, width / ny, 0.6e-9)


@dataclass(frozen=True)
class AxonCircuit:
    """Reference-MTJ divider and square-law p-type output transistor.

    ``v_drain`` is the drain potential seen by the transistor (the row line it
    drives), used to select the linear or saturation region.
    """

    R_ref: float
    k_tr: float = 2e-4
    V_t: float = 0.2
    V_div: float = 0.9
    V_src: float = 0.65
    v_drain: float = 0.1

    def __post_init__(self):
        if not self.V_div > self.V_src > 0:
            raise NeuronError("need V_div > V_src > 0")
        if not self.R_ref > 0:
            raise NeuronError("R_ref must be positive")
        if not self.k_tr > 0:
            raise NeuronError("k_tr must be positive")
        if not self.V_t >= 0:
            raise NeuronError("V_t must be non-negative")

    def with_(self, **changes) -> "AxonCircuit":
        return replace(self, **changes)


def divider_voltage(R_n, ax: AxonCircuit):
    R_n = np.asarray(R_n, dtype=float)
    return ax.V_div * R_n / (R_n + ax.R_ref)


def axon_current(V_G, ax: AxonCircuit):
    """Drain current (A) of the output transistor at gate voltage ``V_G``."""
    V_G = np.asarray(V_G, dtype=float)
    v_ov = np.maximum(ax.V_src - V_G - ax.V_t, 0.0)
    v_sd = max(ax.V_src - ax.v_drain, 0.0)
    sat = 0.5 * ax.k_tr * v_ov**2
    lin = ax.k_tr * (v_ov * v_sd - 0.5 * v_sd**2)
    i = np.where(v_sd >= v_ov, sat, lin)
    return i if i.ndim else float(i)


def neuron_output(x, dev: DwDevice, ax: AxonCircuit, R_scale=1.0, R_ref_scale=1.0):
    """Output current for wall position(s) ``x``; the scale factors model resistance variation."""
    R_n = R_scale / dev.conductance(x)
    vg = ax.V_div * R_n / (R_n + ax.R_ref * R_ref_scale)
    return axon_current(vg, ax)


def divider_current(x, dev: DwDevice, ax: AxonCircuit):
    return ax.V_div / (1.0 / dev.conductance(x) + ax.R_ref)


@dataclass
class NeuronState:
    """One neuron, advanced strictly through reset -> write -> read -> reset."""

    dev: DwDevice
    dmap: DisplacementMap = field(default_factory=DisplacementMap)
    phase: str = "reset"
    R_path: float = R_NEURON_PATH

    def __post_init__(self):
        if self.dev.role != "neuron":
            raise NeuronError("device role must be 'neuron'")
        if self.phase not in PHASES:
            raise PhaseError(f"unknown phase {self.phase!r}")

    @property
    def x(self) -> float:
        return self.dev.x

    def _enter(self, phase: str) -> None:
        if _NEXT[self.phase] != phase:
            raise PhaseError(f"illegal transition {self.phase} -> {phase}")
        self.phase = phase


def write_phase(n: NeuronState, I_in, t_write: float, log: EnergyLog | None = None) -> NeuronState:
    """Drive the wall with one or more sequential currents of ``t_write`` each.

    ``I_in`` may be a scalar or a sequence such as ``(I_pos, -I_neg)``. The
    signed charges add, and the net displacement is clipped once at the
    free-layer ends, so the order of the sub-phases does not matter.
    """
    if not t_write >= 0:
        raise NeuronError("write duration must be non-negative")
    n._enter("write")
    x = n.dev.x
    currents = np.atleast_1d(np.asarray(I_in, dtype=float))
    x = float(n.dmap.advance(x, float(currents.sum()), t_write))
    n.dev = n.dev.at(x)
    if log is not None:
        log.add_joule("neuron", "write", math.sqrt(float(np.sum(currents**2))), n.R_path, t_write, events=1)
    return n


def gate_voltage(n: NeuronState, ax: AxonCircuit) -> float:
    if n.phase != "read":
        raise PhaseError("gate voltage is only defined in the read phase")
    return float(divider_voltage(1.0 / n.dev.conductance(), ax))


def read_phase(n: NeuronState, ax: AxonCircuit, t_read: float = 2e-9, log: EnergyLog | None = None) -> float:
    """Enter the read phase and return the axon output current (A)."""
    n._enter("read")
    if log is not None:
        log.add_vit("neuron", "read", ax.V_div, float(divider_current(n.dev.x, n.dev, ax)), t_read)
    return float(axon_current(gate_voltage(n, ax), ax))


def reset_phase(
    n: NeuronState, I_reset: float = 5e-6, t_reset: float = 2e-9, log: EnergyLog | None = None
) -> NeuronState:
    """Return the wall to the left edge. Allowed from any phase except directly after reset."""
    if n.phase == "reset":
        raise PhaseError("illegal transition reset -> reset")
    n.phase = "reset"
    n.dev = n.dev.at(0.0)
    if log is not None:
        log.add_joule("neuron", "reset", I_reset, n.R_path, t_reset)
    return n


@dataclass(frozen=True)
class TransferCurve:
    i_in: np.ndarray
    v_g: np.ndarray
    i_out: np.ndarray
    i_sat: float

    def to_csv(self, path) -> Path:
        lines = ["i_in_A,v_g_V,i_out_A"]
        lines += [f"{a:.9e},{b:.9e},{c:.9e}" for a, b, c in zip(self.i_in, self.v_g, self.i_out)]
        return atomic_write_text(path, "\n".join(lines) + "\n")

    def central_r2(self, frac: float = 0.6) -> float:
        """R^2 of a line through the central ``frac`` of the unsaturated input span."""
        lo, hi = 0.5 * (1 - frac) * self.i_sat, 0.5 * (1 + frac) * self.i_sat
        keep = (self.i_in >= lo) & (self.i_in <= hi)
        return r_squared(self.i_in[keep], self.i_out[keep])


def transfer_function(
    dev: DwDevice,
    ax: AxonCircuit,
    i_max: float = 50e-6,
    samples: int = 1001,
    dmap: DisplacementMap | None = None,
    t_write: float | None = None,
) -> TransferCurve:
    """Sweep the input current through a full write/read/reset cycle per sample."""
    dmap = dmap or DisplacementMap(dev.L_free)
    t_write = dmap.t_write if t_write is None else t_write
    i_in = np.linspace(0.0, i_max, samples)
    v_g = np.empty(samples)
    i_out = np.empty(samples)
    n = NeuronState(dev.at(0.0), dmap)
    for k, I in enumerate(i_in):
        write_phase(n, I, t_write)
        i_out[k] = read_phase(n, ax)
        v_g[k] = gate_voltage(n, ax)
        reset_phase(n)
    return TransferCurve(i_in, v_g, i_out, dmap.saturation_current(t_write))


def size_transistor(dev: DwDevice, ax: AxonCircuit, i_out_max: float) -> AxonCircuit:
    """Scale ``k_tr`` so the fully written neuron delivers ``i_out_max``."""
    ref = float(neuron_output(dev.L_free, dev, ax.with_(k_tr=1.0)))
    if ref <= 0:
        raise NeuronError("transistor is cut off even with the wall at the right edge")
    return ax.with_(k_tr=i_out_max / ref)


def tune_threshold(dev: DwDevice, ax: AxonCircuit, n: int = 201) -> tuple[float, float]:
    """Threshold that maximizes transfer linearity with the x=0 output at cutoff.

    Cutoff at ``x = 0`` requires ``V_t >= V_src - V_G(0)``; any larger value
    only shrinks the output swing, so the search runs over
    ``[V_src - V_G(0), V_src - V_G(L)]`` and returns ``(V_t, R^2)``.
    """
    vg0 = float(divider_voltage(1.0 / dev.conductance(0.0), ax))
    vgl = float(divider_voltage(1.0 / dev.conductance(dev.L_free), ax))
    lo, hi = ax.V_src - vg0, ax.V_src - vgl
    x = np.linspace(0.0, dev.L_free, n)
    best = (lo, -np.inf)
    for vt in np.linspace(lo, hi, 200, endpoint=False):
        i = neuron_output(x, dev, ax.with_(V_t=float(vt)))
        r2 = r_squared(x, i)
        if r2 > best[1]:
            best = (float(vt), r2)
    return best


def default_axon(dev: DwDevice, i_out_max: float = 10e-6) -> AxonCircuit:
    """Axon with ``R_ref`` equal to the neuron's AP resistance at x=0 and the frozen tuned threshold."""
    ax = AxonCircuit(R_ref=1.0 / dev.conductance(0.0), V_t=DEFAULT_V_T)
    return size_transistor(dev, ax, i_out_max)


# Output of scripts/tune_axon.py for the default neuron device; see there.
DEFAULT_V_T = 0.226
