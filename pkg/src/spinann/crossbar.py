"""Signed-weight resistive crossbars.

Rows are inputs driven by ideal voltage sources; columns feed neurons whose
input resistance ``R_j`` loads the column. Each column current is

    I_j = sum_i G_ij V_i / (1 + gamma_j),   gamma_j = R_j sum_i G_ij

Signed weights live in two arrays. The positive array's columns are
connected to the neurons during the first phase and the negative array's
during the second, where the current direction is reversed. Both arrays
and a dummy column hang on the same row wires, so the row load ``G_eq`` is
the same in both phases.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .validation import check_matrix

G_OFF_DEFAULT = 1e-7  # 10 MOhm OFF state


class CrossbarError(ValueError):
    pass


@dataclass(frozen=True)
class RowDrive:
    V: np.ndarray
    duration: float = 2e-9
    V_max: float = 0.1

    def __post_init__(self):
        v = np.asarray(self.V, dtype=float)
        if v.ndim != 1:
            raise CrossbarError("row drive must be a vector")
        if np.any(v < -1e-15) or np.any(v > self.V_max * (1 + 1e-12)):
            raise CrossbarError(f"row voltages must lie in [0, {self.V_max}] V")
        if not self.duration > 0:
            raise CrossbarError("duration must be positive")
        object.__setattr__(self, "V", v)


@dataclass(frozen=True)
class CrossbarPair:
    G_pos: np.ndarray
    G_neg: np.ndarray
    G_off: float = G_OFF_DEFAULT
    R_neuron: np.ndarray | float = 0.0
    dummy: np.ndarray | None = None
    strict: bool = True  # False for variation samples, where OFF cells scatter around G_off

    def __post_init__(self):
        gp = check_matrix(self.G_pos, "G_pos")
        gn = check_matrix(self.G_neg, "G_neg", gp.shape)
        if not self.G_off > 0:
            raise CrossbarError("G_off must be positive")
        floor = self.G_off * (1 - 1e-12) if self.strict else 0.0
        if np.any(gp <= 0) or np.any(gn <= 0) or np.any(gp < floor) or np.any(gn < floor):
            raise CrossbarError("conductances must be >= G_off")
        tol = self.G_off * 1e-9
        if self.strict and np.any((gp > self.G_off + tol) & (gn > self.G_off + tol)):
            raise CrossbarError("sign exclusivity violated: both arrays programmed at the same crosspoint")
        r = np.broadcast_to(np.asarray(self.R_neuron, dtype=float), (gp.shape[1],)).copy()
        if np.any(r < 0):
            raise CrossbarError("neuron resistances must be non-negative")
        d = np.full(gp.shape[0], self.G_off) if self.dummy is None else np.asarray(self.dummy, dtype=float)
        if d.shape != (gp.shape[0],) or np.any(d <= 0) or np.any(d < floor):
            raise CrossbarError("dummy must be one conductance >= G_off per row")
        object.__setattr__(self, "G_pos", gp)
        object.__setattr__(self, "G_neg", gn)
        object.__setattr__(self, "R_neuron", r)
        object.__setattr__(self, "dummy", d)

    @property
    def shape(self) -> tuple[int, int]:
        return self.G_pos.shape

    def array(self, which: str) -> np.ndarray:
        if which == "pos":
            return self.G_pos
        if which == "neg":
            return self.G_neg
        raise CrossbarError(f"array must be 'pos' or 'neg', got {which!r}")

    def row_totals(self) -> np.ndarray:
        """``G_eq`` per row: both arrays plus the dummy column."""
        return self.G_pos.sum(axis=1) + self.G_neg.sum(axis=1) + self.dummy

    def gamma(self, which: str = "pos") -> np.ndarray:
        return self.R_neuron * self.array(which).sum(axis=0)

    def max_gamma(self) -> float:
        return float(max(self.gamma("pos").max(), self.gamma("neg").max()))

    def with_(self, **changes) -> "CrossbarPair":
        return replace(self, **changes)


def _check_drive(xbar: CrossbarPair, drive) -> np.ndarray:
    v = drive.V if isinstance(drive, RowDrive) else np.asarray(drive, dtype=float)
    if v.shape[0] != xbar.shape[0]:
        raise CrossbarError(f"drive has {v.shape[0]} rows, crossbar has {xbar.shape[0]}")
    return v


def column_currents(xbar: CrossbarPair, drive, array: str = "pos") -> np.ndarray:
    """Signed loaded currents (A) of every column; ``drive`` may be ``(rows,)`` or ``(batch, rows)``."""
    v = drive.V if isinstance(drive, RowDrive) else np.asarray(drive, dtype=float)
    if v.shape[-1] != xbar.shape[0]:
        raise CrossbarError(f"drive has {v.shape[-1]} rows, crossbar has {xbar.shape[0]}")
    g = xbar.array(array)
    sign = 1.0 if array == "pos" else -1.0
    return sign * (v @ g) / (1.0 + xbar.gamma(array))


def column_current(xbar: CrossbarPair, drive, j: int, array: str = "pos") -> float:
    v = _check_drive(xbar, drive)
    if not 0 <= j < xbar.shape[1]:
        raise CrossbarError(f"column {j} out of range")
    g = xbar.array(array)[:, j]
    sign = 1.0 if array == "pos" else -1.0
    return sign * float(g @ v) / (1.0 + xbar.R_neuron[j] * float(g.sum()))


def nodal_solve(xbar: CrossbarPair, drive, array: str = "pos") -> np.ndarray:
    """Signed column currents from a full modified-nodal-analysis solve.

    Unknowns are every node voltage (rows, active columns, inactive columns)
    plus the branch currents of the row sources and of each neuron load. The
    neuron is a branch ``V_col = R_j I_j`` so that ``R_j = 0`` needs no
    special case. Inactive-array columns are held at ground by their own
    switches; the dummy column ties each row to ground.
    """
    v = _check_drive(xbar, drive)
    g_act = xbar.array(array)
    g_idle = xbar.array("neg" if array == "pos" else "pos")
    if not np.any(g_act > 0):
        raise CrossbarError("singular network: all conductances zero")
    nr, nc = g_act.shape
    # node order: rows [0, nr), active columns [nr, nr+nc); idle columns are grounded
    n_nodes = nr + nc
    n = n_nodes + nr + nc  # + source branch currents + neuron branch currents
    A = np.zeros((n, n))
    z = np.zeros(n)
    for i in range(nr):
        A[i, i] += g_idle[i].sum() + xbar.dummy[i]
        for j in range(nc):
            g = g_act[i, j]
            c = nr + j
            A[i, i] += g
            A[c, c] += g
            A[i, c] -= g
            A[c, i] -= g
    for i in range(nr):
        k = n_nodes + i  # source current leaving the source into the row node
        A[i, k] -= 1.0
        A[k, i] = 1.0
        z[k] = v[i]
    for j in range(nc):
        c = nr + j
        k = n_nodes + nr + j  # neuron current from column node to ground
        A[c, k] += 1.0
        A[k, c] = 1.0
        A[k, k] = -xbar.R_neuron[j]
    try:
        sol = np.linalg.solve(A, z)
    except np.linalg.LinAlgError as exc:
        raise CrossbarError(f"singular network: {exc}") from exc
    sign = 1.0 if array == "pos" else -1.0
    return sign * sol[n_nodes + nr :]


@dataclass(frozen=True)
class WeightMapping:
    """Proportional weight-to-conductance map with a device floor and an OFF state.

    ``|w| = w_scale`` maps to ``g_max``. Magnitudes whose ideal conductance is
    below ``g_min`` snap to ``g_min`` when at least half of it and to ``G_off``
    otherwise.
    """

    g_max: float = 1.0 / 20e3
    g_min: float = 1.0 / 20e3 / 6.0
    w_scale: float = 1.0
    G_off: float = G_OFF_DEFAULT

    def __post_init__(self):
        if not (self.g_max >= self.g_min > self.G_off > 0 and self.w_scale > 0):
            raise CrossbarError("need g_max >= g_min > G_off > 0 and w_scale > 0")

    @property
    def gain(self) -> float:
        """Siemens per unit weight."""
        return self.g_max / self.w_scale

    def conductance(self, w_abs: np.ndarray) -> np.ndarray:
        w_abs = np.asarray(w_abs, dtype=float)
        if np.any(w_abs > self.w_scale * (1 + 1e-9)):
            raise CrossbarError(f"weight magnitude {w_abs.max():g} exceeds mapped range {self.w_scale:g}")
        g = self.gain * w_abs
        g = np.where(g >= self.g_min, g, np.where(g >= 0.5 * self.g_min, self.g_min, self.G_off))
        return np.minimum(g, self.g_max)


def split_signed(W, mapping: WeightMapping, R_neuron=0.0) -> CrossbarPair:
    """Positive weights to ``G_pos``, negative to ``G_neg``, the other side at ``G_off``."""
    W = check_matrix(W, "W")
    g = mapping.conductance(np.abs(W))
    off = mapping.G_off
    g_pos = np.where(W > 0, g, off)
    g_neg = np.where(W < 0, g, off)
    return CrossbarPair(g_pos, g_neg, off, R_neuron)


def dummy_equalize(xbar: CrossbarPair) -> CrossbarPair:
    """Pad every row with a dummy conductance so all rows share the largest total.

    The row with the largest total keeps a dummy at ``G_off``.
    """
    base = xbar.G_pos.sum(axis=1) + xbar.G_neg.sum(axis=1)
    dummy = (base.max() - base) + xbar.G_off
    return replace(xbar, dummy=dummy)


def save_conductances(G, path) -> Path:
    G = check_matrix(G, "G")
    lines = [",".join(f"{v:.12e}" for v in row) for row in G]
    return atomic_write_text(path, "\n".join(lines) + "\n")


def load_conductances(path) -> np.ndarray:
    G = np.loadtxt(path, delimiter=",", ndmin=2)
    return check_matrix(G, "G")
