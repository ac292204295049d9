"""Analytical MTJ resistance model and domain-wall device conductance.

The junction resistance of one magnetic state is

    R(t, V) = (exp(a0 t + b0) + sum_m (-1)^(m-1) V^(2m) exp(am t + bm))^(-d) * area_ref / area

with ``t`` the MgO thickness and ``V`` the junction bias. The parallel (P)
and antiparallel (AP) states each get their own coefficient set; by default
only the AP state carries voltage terms. Intermediate magnetization angles
interpolate conductance as ``G = cos^2(theta/2) / R_P + sin^2(theta/2) / R_AP``.

A domain-wall device is three junctions in parallel: a P region of length
``x``, an AP region of length ``L - x`` and a wall region of width ``delta_w``
(angle pi/2).
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, least_squares
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from ._io import atomic_write_text

NM = 1e-9


class MtjError(ValueError):
    pass


class OutOfCalibrationError(MtjError):
    pass


class CalibrationError(MtjError):
    pass


@dataclass(frozen=True)
class MtjCalibration:
    """Coefficients of one magnetic state. ``a`` in 1/m, ``b`` dimensionless.

    The voltage terms are taken with ``V`` in volts, so term ``m`` of the sum
    carries units of S^(1/d) / V^(2m) absorbed into ``b_m``.
    """

    a: tuple[float, ...]
    b: tuple[float, ...]
    d_exp: float = 1.0
    area_ref: float = 1e-14

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if len(self.a) != len(self.b) or len(self.a) < 1:
            raise MtjError("a and b must have the same non-zero length")
        if not self.d_exp > 0:
            raise MtjError("d_exp must be positive")
        if not self.area_ref > 0:
            raise MtjError("area_ref must be positive")

    @property
    def c_order(self) -> int:
        return len(self.a) - 1

    def inner(self, t_mgo, v):
        """The bracketed sum; resistance is its ``-d`` power."""
        t_mgo = np.asarray(t_mgo, dtype=float)
        v2 = np.asarray(v, dtype=float) ** 2
        s = np.exp(self.a[0] * t_mgo + self.b[0])
        for m in range(1, len(self.a)):
            s = s + (-1) ** (m - 1) * v2**m * np.exp(self.a[m] * t_mgo + self.b[m])
        return s

    def resistance(self, t_mgo, v, area=None):
        s = self.inner(t_mgo, v)
        if np.any(s <= 0):
            raise OutOfCalibrationError("polynomial voltage expansion is non-positive at these inputs")
        r = s ** (-self.d_exp)
        if area is not None:
            r = r * (self.area_ref / np.asarray(area, dtype=float))
        return r

    def to_dict(self) -> dict:
        return {"a": list(self.a), "b": list(self.b), "d_exp": self.d_exp, "area_ref": self.area_ref}

    @classmethod
    def from_dict(cls, d: dict) -> "MtjCalibration":
        return cls(tuple(d["a"]), tuple(d["b"]), d.get("d_exp", 1.0), d.get("area_ref", 1e-14))


@dataclass(frozen=True)
class MtjModel:
    """P and AP calibrations plus the (thickness, |bias|) box they are valid in."""

    p: MtjCalibration
    ap: MtjCalibration
    t_range: tuple[float, float] = (1.6 * NM, 2.4 * NM)
    v_max: float = 0.5
    p_voltage_dependent: bool = False

    def check_domain(self, t_mgo, v) -> None:
        t = np.asarray(t_mgo, dtype=float)
        vv = np.abs(np.asarray(v, dtype=float))
        lo, hi = self.t_range
        tol = 1e-12
        if np.any(t < lo * (1 - tol)) or np.any(t > hi * (1 + tol)):
            raise OutOfCalibrationError(f"t_mgo outside calibrated range [{lo:g}, {hi:g}] m")
        if np.any(vv > self.v_max * (1 + tol)):
            raise OutOfCalibrationError(f"|V| exceeds calibrated maximum {self.v_max:g} V")

    def branches(self, t_mgo, v, area=None, extrapolate: bool = False):
        """``(R_P, R_AP)`` in ohms."""
        if not extrapolate:
            self.check_domain(t_mgo, v)
        vp = v if self.p_voltage_dependent else np.zeros_like(np.asarray(v, dtype=float))
        return self.p.resistance(t_mgo, vp, area), self.ap.resistance(t_mgo, v, area)

    @property
    def area_ref(self) -> float:
        return self.ap.area_ref

    def to_dict(self) -> dict:
        return {
            "p": self.p.to_dict(),
            "ap": self.ap.to_dict(),
            "t_range_m": list(self.t_range),
            "v_max_V": self.v_max,
            "p_voltage_dependent": self.p_voltage_dependent,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MtjModel":
        return cls(
            MtjCalibration.from_dict(d["p"]),
            MtjCalibration.from_dict(d["ap"]),
            tuple(d.get("t_range_m", (1.6 * NM, 2.4 * NM))),
            d.get("v_max_V", 0.5),
            d.get("p_voltage_dependent", False),
        )


def combine_angle(r_p, r_ap, theta_m):
    """Angular interpolation of conductance between the P and AP resistances."""
    theta_m = np.asarray(theta_m, dtype=float)
    if np.any(theta_m < 0) or np.any(theta_m > math.pi + 1e-12):
        raise MtjError("theta_m must lie in [0, pi]")
    c2 = np.cos(theta_m / 2) ** 2
    s2 = np.sin(theta_m / 2) ** 2
    r_p = np.asarray(r_p, dtype=float)
    r_ap = np.asarray(r_ap, dtype=float)
    # exact endpoints, no round-off through 1/(1/R)
    r = 1.0 / (c2 / r_p + s2 / r_ap)
    r = np.where(theta_m == 0.0, r_p, r)
    r = np.where(theta_m == math.pi, r_ap, r)
    return r if r.ndim else float(r)


def resistance(model: MtjModel, t_mgo, v, theta_m, area=None, extrapolate: bool = False):
    """Junction resistance (ohm) at thickness ``t_mgo`` (m), bias ``v`` (V), angle ``theta_m``."""
    r_p, r_ap = model.branches(t_mgo, v, area, extrapolate)
    return combine_angle(r_p, r_ap, theta_m)


def conductance(model: MtjModel, t_mgo, v, theta_m, area=None, extrapolate: bool = False):
    return 1.0 / resistance(model, t_mgo, v, theta_m, area, extrapolate)


# --- calibration -----------------------------------------------------------


def _unpack(theta: np.ndarray, c_order: int, p_vdep: bool, fit_d: bool, d_fixed: float):
    """Parameter vector -> (a_p, b_p, a_ap, b_ap, d) with ``a`` in 1/nm."""
    n = c_order + 1
    i = 0
    a_ap, b_ap = theta[i : i + n], theta[i + n : i + 2 * n]
    i += 2 * n
    k = n if p_vdep else 1
    a_p, b_p = theta[i : i + k], theta[i + k : i + 2 * k]
    i += 2 * k
    d = theta[i] if fit_d else d_fixed
    return a_p, b_p, a_ap, b_ap, d


def _log_r(a, b, d, t_nm, v):
    s = np.exp(a[0] * t_nm + b[0])
    for m in range(1, len(a)):
        s = s + (-1) ** (m - 1) * v ** (2 * m) * np.exp(a[m] * t_nm + b[m])
    return -d * np.log(np.maximum(s, 1e-300))


class MtjCalibrator(RegressorMixin, BaseEstimator):
    """Least-squares fit of the P/AP resistance model to measured samples.

    ``X`` columns are ``(t_mgo [m], v [V], theta_m [rad])``; ``y`` is the
    resistance in ohms at ``area_ref``. Samples at angles other than 0 and pi
    enter through the angular interpolation. After fitting, ``model_`` holds
    the :class:`MtjModel`.
    """

    def __init__(self, c_order=2, fit_exponent=True, d_exp=1.0, area_ref=1e-14, p_voltage_dependent=False):
        self.c_order = c_order
        self.fit_exponent = fit_exponent
        self.d_exp = d_exp
        self.area_ref = area_ref
        self.p_voltage_dependent = p_voltage_dependent

    def _check_samples(self, X, y):
        c = int(self.c_order)
        if c < 1:
            raise CalibrationError("c_order must be >= 1")
        if np.any(y <= 0):
            raise CalibrationError("resistances must be positive")
        t_nm = X[:, 0] / NM
        if len(y) < 2 * (c + 2):
            raise CalibrationError(f"rank-deficient sample set: need at least {2 * (c + 2)} samples, got {len(y)}")
        if np.unique(np.round(t_nm, 6)).size < 2:
            raise CalibrationError("rank-deficient sample set: samples must span at least two thicknesses")
        near_p = np.isclose(X[:, 2], 0.0)
        near_ap = np.isclose(X[:, 2], math.pi)
        if not near_p.any() or not near_ap.any():
            raise CalibrationError("rank-deficient sample set: need both P (theta=0) and AP (theta=pi) samples")
        if np.unique(np.round(t_nm[near_p], 6)).size < 2 or np.unique(np.round(t_nm[near_ap], 6)).size < 2:
            raise CalibrationError("rank-deficient sample set: each state needs two or more thicknesses")
        if np.unique(np.round(np.abs(X[near_ap, 1]), 9)).size < c + 1:
            raise CalibrationError(f"rank-deficient sample set: AP samples need {c + 1} distinct |V| values")

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=float)
        if X.shape[1] != 3:
            raise CalibrationError("X must have columns (t_mgo, v, theta_m)")
        self._check_samples(X, y)
        c = int(self.c_order)
        n = c + 1
        t_nm, v, th = X[:, 0] / NM, X[:, 1], X[:, 2]
        logy = np.log(y)

        # initial guess: d = 1, zero-bias straight lines in log R vs t, small voltage terms
        p_mask = np.isclose(th, 0.0)
        ap_mask = np.isclose(th, math.pi)
        lowv = np.abs(v) <= np.quantile(np.abs(v[ap_mask]), 0.3) + 1e-12
        sl_p, ic_p = np.polyfit(t_nm[p_mask], -logy[p_mask], 1)
        m_ap = ap_mask & lowv
        if np.unique(t_nm[m_ap]).size < 2:
            m_ap = ap_mask
        sl_ap, ic_ap = np.polyfit(t_nm[m_ap], -logy[m_ap], 1)
        a_ap0 = np.full(n, sl_ap)
        b_ap0 = np.array([ic_ap] + [ic_ap + math.log(1.0 / (m + 1)) for m in range(1, n)])
        k = n if self.p_voltage_dependent else 1
        a_p0 = np.full(k, sl_p)
        b_p0 = np.array([ic_p] + [ic_p - 5.0] * (k - 1))
        theta0 = np.concatenate([a_ap0, b_ap0, a_p0, b_p0] + ([[1.0]] if self.fit_exponent else []))
        d_fixed = float(self.d_exp)
        pv = bool(self.p_voltage_dependent)

        def residual(theta):
            a_p, b_p, a_ap, b_ap, d = _unpack(theta, c, pv, self.fit_exponent, d_fixed)
            lp = _log_r(a_p, b_p, d, t_nm, v if pv else np.zeros_like(v))
            lap = _log_r(a_ap, b_ap, d, t_nm, v)
            c2, s2 = np.cos(th / 2) ** 2, np.sin(th / 2) ** 2
            g = c2 * np.exp(-lp) + s2 * np.exp(-lap)
            return -np.log(g) - logy

        lower = np.full(theta0.size, -np.inf)
        if self.fit_exponent:
            lower[-1] = 1e-3
        sol = least_squares(residual, theta0, bounds=(lower, np.inf), method="trf", x_scale="jac", max_nfev=20000)
        if not sol.success and sol.status <= 0:
            raise CalibrationError(f"least-squares fit did not converge: {sol.message}")
        jac_rank = np.linalg.matrix_rank(sol.jac, tol=1e-10 * np.abs(sol.jac).max())
        if jac_rank < sol.x.size:
            raise CalibrationError(f"rank-deficient sample set: Jacobian rank {jac_rank} < {sol.x.size} parameters")
        a_p, b_p, a_ap, b_ap, d = _unpack(sol.x, c, pv, self.fit_exponent, d_fixed)
        area = float(self.area_ref)
        p_cal = MtjCalibration(tuple(np.asarray(a_p) / NM), tuple(b_p), float(d), area)
        ap_cal = MtjCalibration(tuple(np.asarray(a_ap) / NM), tuple(b_ap), float(d), area)
        t_range = (float(X[:, 0].min()), float(X[:, 0].max()))
        v_max = float(np.abs(v).max())
        self.model_ = MtjModel(p_cal, ap_cal, t_range, v_max, pv)
        self.rms_log_error_ = float(np.sqrt(np.mean(sol.fun**2)))
        check_monotonic(self.model_)
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = validate_data(self, X, dtype=float, reset=False)
        return np.asarray(resistance(self.model_, X[:, 0], X[:, 1], X[:, 2]), dtype=float)


def check_monotonic(model: MtjModel, n: int = 41) -> None:
    """Raise :class:`CalibrationError` unless R rises with t and R_AP falls with |V| on the domain box."""
    t = np.linspace(*model.t_range, n)
    v = np.linspace(0.0, model.v_max, n)
    T, V = np.meshgrid(t, v, indexing="ij")
    try:
        r_p, r_ap = model.branches(T, V)
    except OutOfCalibrationError as exc:
        raise CalibrationError(f"fitted model invalid on the sample hull: {exc}") from exc
    for name, r in (("R_P", r_p), ("R_AP", r_ap)):
        if np.any(np.diff(r, axis=0) <= 0):
            raise CalibrationError(f"fitted {name} is not increasing in oxide thickness")
    if np.any(np.diff(r_ap, axis=1) > 1e-12 * r_ap[:, 1:]):
        raise CalibrationError("fitted R_AP increases with |V|")


def fit_calibration(samples, c_order: int = 2, **kwargs) -> MtjModel:
    """Fit a model to rows of ``(t_mgo [m], v [V], theta_m [rad], R [ohm])``."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise CalibrationError("samples must be rows of (t_mgo, v, theta_m, R)")
    return MtjCalibrator(c_order=c_order, **kwargs).fit(arr[:, :3], arr[:, 3]).model_


def read_calibration_table(path) -> np.ndarray:
    """Load a ``t_mgo_nm, v_mV, theta_rad, r_ohm`` CSV as SI sample rows."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"t_mgo_nm", "v_mV", "theta_rad", "r_ohm"}
        if reader.fieldnames is None or not need <= {f.strip() for f in reader.fieldnames}:
            raise MtjError(f"{path}: expected columns {sorted(need)}")
        for r in reader:
            r = {k.strip(): v for k, v in r.items()}
            rows.append((float(r["t_mgo_nm"]) * NM, float(r["v_mV"]) * 1e-3, float(r["theta_rad"]), float(r["r_ohm"])))
    return np.array(rows)


def write_calibration_table(samples, path) -> Path:
    lines = ["t_mgo_nm,v_mV,theta_rad,r_ohm"]
    for t, v, th, r in np.asarray(samples, dtype=float):
        lines.append(f"{t / NM:.4f},{v * 1e3:.3f},{th:.6f},{r:.6g}")
    return atomic_write_text(path, "\n".join(lines) + "\n")


@functools.lru_cache(maxsize=None)
def default_mtj_model() -> MtjModel:
    """Model fitted to the bundled calibration table (order 2, P branch bias-free)."""
    with resources.as_file(resources.files("spinann.data") / "mtj_calibration.csv") as p:
        samples = read_calibration_table(p)
    return fit_calibration(samples, c_order=2)


def solve_thickness(model: MtjModel, target_r: float, area: float, theta_m: float = math.pi, v: float = 0.01) -> float:
    """Oxide thickness (m) giving resistance ``target_r`` for a junction of ``area``."""
    lo, hi = model.t_range

    def f(t):
        return math.log(resistance(model, t, v, theta_m, area)) - math.log(target_r)

    if f(lo) > 0 or f(hi) < 0:
        raise OutOfCalibrationError(f"target resistance {target_r:g} ohm not reachable within {model.t_range}")
    return brentq(f, lo, hi, xtol=1e-16)


# --- domain-wall device ----------------------------------------------------


@dataclass(frozen=True)
class DwDevice:
    """A domain-wall MTJ: P region of length ``x`` grows as the wall moves right."""

    L_free: float
    width: float
    delta_w: float
    G_p_max: float
    G_ap_max: float
    G_dw: float
    x: float = 0.0
    role: str = "synapse"

    def __post_init__(self):
        if not (self.L_free > 0 and self.width > 0 and self.delta_w >= 0):
            raise MtjError("device dimensions must be positive")
        if not 0.0 <= self.x <= self.L_free:
            raise MtjError(f"wall position {self.x:g} outside [0, {self.L_free:g}]")
        if not (self.G_p_max >= self.G_ap_max > 0):
            raise MtjError("need G_p_max >= G_ap_max > 0")
        if not self.G_dw > 0:
            raise MtjError("G_dw must be positive")
        if self.role not in ("synapse", "neuron"):
            raise MtjError(f"unknown role {self.role!r}")

    def conductance(self, x=None):
        """Three-junction conductance at wall position ``x`` (defaults to the stored one)."""
        x = self.x if x is None else x
        f = np.asarray(x, dtype=float) / self.L_free
        g = self.G_p_max * f + self.G_ap_max * (1.0 - f) + self.G_dw
        return g if g.ndim else float(g)

    def at(self, x: float) -> "DwDevice":
        return replace(self, x=float(x))

    def scaled(self, factor: float) -> "DwDevice":
        """Every junction conductance multiplied by ``factor``."""
        return replace(self, G_p_max=self.G_p_max * factor, G_ap_max=self.G_ap_max * factor, G_dw=self.G_dw * factor)

    @classmethod
    def from_mtj(
        cls,
        model: MtjModel,
        t_mgo: float,
        L_free: float,
        width: float,
        delta_w: float,
        v_read: float = 0.01,
        role: str = "synapse",
    ) -> "DwDevice":
        g_p = 1.0 / resistance(model, t_mgo, v_read, 0.0, L_free * width)
        g_ap = 1.0 / resistance(model, t_mgo, v_read, math.pi, L_free * width)
        g_dw = 1.0 / resistance(model, t_mgo, v_read, math.pi / 2, delta_w * width)
        return cls(L_free, width, delta_w, g_p, g_ap, g_dw, 0.0, role)

    @classmethod
    def from_tmr(
        cls, G_p_max: float, tmr: float, L_free: float, width: float, delta_w: float, role: str = "synapse"
    ) -> "DwDevice":
        """Device with ``R_AP = (1 + tmr) R_P``; the wall junction sits at angle pi/2."""
        if tmr < 0:
            raise MtjError("TMR must be non-negative")
        g_ap = G_p_max / (1.0 + tmr)
        g_dw = (delta_w / L_free) * 0.5 * (G_p_max + g_ap)
        return cls(L_free, width, delta_w, G_p_max, g_ap, g_dw, 0.0, role)


def dw_conductance(dev: DwDevice) -> float:
    return dev.conductance()


def weight_range(dev: DwDevice) -> float:
    """Max-to-min conductance ratio ``G_S(L) / G_S(0)``."""
    return dev.conductance(dev.L_free) / dev.conductance(0.0)


def design_device(
    model: MtjModel,
    L_free: float,
    width: float,
    delta_w: float,
    target_r: float,
    at_x: str = "max",
    v_read: float = 0.01,
    role: str = "synapse",
) -> DwDevice:
    """Pick the oxide thickness so the device resistance at one wall extreme equals ``target_r``.

    ``at_x="max"`` targets ``1/G_S(L)`` (fully P), ``"min"`` targets ``1/G_S(0)``.
    """
    lo, hi = model.t_range

    def err(t):
        dev = DwDevice.from_mtj(model, t, L_free, width, delta_w, v_read, role)
        g = dev.conductance(dev.L_free if at_x == "max" else 0.0)
        return math.log(1.0 / g) - math.log(target_r)

    if err(lo) > 0 or err(hi) < 0:
        raise OutOfCalibrationError(f"target {target_r:g} ohm not reachable within oxide range {model.t_range}")
    t = brentq(err, lo, hi, xtol=1e-16)
    return DwDevice.from_mtj(model, t, L_free, width, delta_w, v_read, role)
