"""Finite-difference micromagnetics for a PMA strip on a heavy-metal underlayer.

The free layer is a 2-D grid of cells (one cell thick). Dynamics follow the
Landau-Lifshitz-Gilbert equation with a damping-like spin-Hall torque, the
local thin-film demagnetization approximation ``Keff = Ku2 - mu0 Ms^2 / 2``,
Heisenberg exchange and interfacial DMI. Free-edge boundary conditions for
exchange and DMI are imposed through ghost cells.

Arrays are laid out as ``m[component, ix, iy]``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import constants as sc
from scipy.optimize import curve_fit

from . import _llg_kernel
from ._io import atomic_write_text

MU0 = sc.mu_0
HBAR = sc.hbar
E_CHARGE = sc.e
MU_B = sc.physical_constants["Bohr magneton"][0]

# Sign of the spin polarization along +y. With this sign a positive current
# along +x pushes the up/down wall of a left-handed (D < 0) film toward +x.
DEFAULT_POLARIZATION = -1.0


class MagneticsError(ValueError):
    pass


class StabilityError(MagneticsError):
    """Raised when a single step rotates some cell by more than the cap."""


class WallDetectionError(MagneticsError):
    pass


@dataclass(frozen=True)
class MaterialParams:
    """Material constants of the FM/HM stack (SI units).

    Defaults are the Ta/Pt/CoFe/MgO values used throughout the package.
    """

    Ms: float = 7.0e5
    alpha: float = 0.3
    A_ex: float = 1.0e-11
    Ku2: float = 4.8e5
    D_dmi: float = -1.2e-3
    theta_sh: float = 0.07
    t_fm: float = 0.6e-9
    t_hm: float = 3.0e-9
    rho_hm: float = 200e-9
    mu0: float = MU0
    hbar: float = HBAR
    e_charge: float = E_CHARGE
    mu_B: float = MU_B

    def __post_init__(self):
        for name in ("Ms", "alpha", "A_ex", "t_fm", "t_hm", "rho_hm"):
            if not getattr(self, name) > 0:
                raise MagneticsError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not self.Keff > 0:
            raise MagneticsError(
                f"effective anisotropy Ku2 - mu0*Ms^2/2 = {self.Keff:.4g} J/m^3 must be positive"
            )

    @property
    def Keff(self) -> float:
        return self.Ku2 - 0.5 * self.mu0 * self.Ms**2

    @property
    def wall_width(self) -> float:
        """Bloch-parameter ``sqrt(A / Keff)`` in metres."""
        return math.sqrt(self.A_ex / self.Keff)

    @property
    def gamma(self) -> float:
        """Gyromagnetic ratio ``2 mu_B mu0 / hbar`` in m/(A s)."""
        return 2.0 * self.mu_B * self.mu0 / self.hbar

    def spin_hall_field(self, J: float) -> float:
        """Damping-like spin-Hall torque amplitude (A/m) for charge density ``J``."""
        return self.hbar * self.theta_sh * J / (2.0 * self.mu0 * self.e_charge * self.t_fm * self.Ms)

    def current_density(self, current: float, width: float) -> float:
        """Charge current density assuming conduction through the FM and HM layers."""
        return current / (width * (self.t_fm + self.t_hm))

    def with_(self, **changes) -> "MaterialParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class StripGeometry:
    """Free layer of ``free_length`` x ``width`` flanked by pinned bands."""

    free_length: float = 120e-9
    width: float = 20e-9
    pinned_length: float = 20e-9
    cell: tuple[float, float, float] = (4e-9, 4e-9, 0.6e-9)

    def __post_init__(self):
        if self.free_length <= 0 or self.width <= 0 or self.pinned_length < 0:
            raise MagneticsError("strip dimensions must be positive")
        if any(c <= 0 for c in self.cell):
            raise MagneticsError("cell dimensions must be positive")

    @property
    def n_pinned(self) -> int:
        return int(round(self.pinned_length / self.cell[0]))

    @property
    def n_free(self) -> int:
        return max(1, int(round(self.free_length / self.cell[0])))

    @property
    def shape(self) -> tuple[int, int]:
        ny = max(1, int(round(self.width / self.cell[1])))
        return self.n_free + 2 * self.n_pinned, ny

    def refined(self, factor: int = 2) -> "StripGeometry":
        dx, dy, dz = self.cell
        return replace(self, cell=(dx / factor, dy / factor, dz))


@dataclass
class MagGrid:
    """Unit magnetization on a strip, with a mask of frozen cells.

    ``origin`` is the x coordinate (from the grid's left boundary) of the
    free-layer left edge; positions reported by :func:`dw_position` are
    measured from there.
    """

    m: np.ndarray
    cell: tuple[float, float, float]
    pinned: np.ndarray
    origin: float = 0.0
    free_length: float | None = None

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        if self.m.ndim != 3 or self.m.shape[0] != 3:
            raise MagneticsError("m must have shape (3, nx, ny)")
        self.pinned = np.asarray(self.pinned, dtype=bool)
        if self.pinned.shape != self.m.shape[1:]:
            raise MagneticsError("pinned mask shape does not match grid")
        if self.free_length is None:
            self.free_length = self.nx * self.cell[0] - 2 * self.origin

    @property
    def nx(self) -> int:
        return self.m.shape[1]

    @property
    def ny(self) -> int:
        return self.m.shape[2]

    @property
    def cell_volume(self) -> float:
        return self.cell[0] * self.cell[1] * self.cell[2]

    def x_centers(self) -> np.ndarray:
        """Cell-centre x coordinates relative to the free-layer left edge."""
        return (np.arange(self.nx) + 0.5) * self.cell[0] - self.origin

    def norm_error(self) -> float:
        return float(np.max(np.abs(np.sqrt(np.sum(self.m**2, axis=0)) - 1.0)))

    def copy(self) -> "MagGrid":
        return MagGrid(self.m.copy(), self.cell, self.pinned.copy(), self.origin, self.free_length)

    @classmethod
    def from_geometry(cls, geometry: StripGeometry) -> "MagGrid":
        nx, ny = geometry.shape
        pinned = np.zeros((nx, ny), dtype=bool)
        npin = geometry.n_pinned
        if npin:
            pinned[:npin] = True
            pinned[-npin:] = True
        m = np.zeros((3, nx, ny))
        m[2] = 1.0
        return cls(
            m,
            geometry.cell,
            pinned,
            origin=npin * geometry.cell[0],
            free_length=geometry.n_free * geometry.cell[0],
        )


@dataclass
class DwTrace:
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        if self.times.shape != self.positions.shape:
            raise MagneticsError("times and positions differ in length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise MagneticsError("trace times must be strictly increasing")
        if self.velocities is None:
            if self.times.size > 1:
                self.velocities = np.gradient(self.positions, self.times)
            else:
                self.velocities = np.zeros_like(self.positions)

    @property
    def displacement(self) -> float:
        return float(self.positions[-1] - self.positions[0])

    def to_csv(self, path: str | Path) -> Path:
        lines = ["t_s,x_m,v_mps"]
        lines += [f"{t:.6e},{x:.6e},{v:.6e}" for t, x, v in zip(self.times, self.positions, self.velocities)]
        return atomic_write_text(path, "\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "DwTrace":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        cols = {k: np.array([float(r[k]) for r in rows]) for k in ("t_s", "x_m", "v_mps")}
        return cls(cols["t_s"], cols["x_m"], cols["v_mps"])


def _normalize(m: np.ndarray) -> np.ndarray:
    return m / np.sqrt(np.sum(m * m, axis=0))


def init_neel_wall(grid: MagGrid, params: MaterialParams, x0: float) -> MagGrid:
    """Place an up/down Neel wall centred at ``x0`` (metres from the free-layer edge).

    The left domain points along +z, the right along -z, pinned bands are set
    to their uniform domain value. The in-plane core follows the DMI sign.
    """
    if not 0.0 <= x0 <= grid.free_length:
        raise MagneticsError(f"x0={x0:g} m outside [0, {grid.free_length:g}]")
    delta = params.wall_width  # also enforces Keff > 0 via MaterialParams
    x = grid.x_centers()[:, None] * np.ones((1, grid.ny))
    u = (x - x0) / delta
    chir = 1.0 if params.D_dmi >= 0 else -1.0
    m = np.empty_like(grid.m)
    m[0] = chir / np.cosh(u)
    m[1] = 0.0
    m[2] = -np.tanh(u)
    left = grid.pinned & (x < grid.free_length / 2)
    right = grid.pinned & ~left
    m[:, left] = np.array([0.0, 0.0, 1.0])[:, None]
    m[:, right] = np.array([0.0, 0.0, -1.0])[:, None]
    out = grid.copy()
    out.m = _normalize(m)
    return out


def _padded(m: np.ndarray, params: MaterialParams, cell) -> np.ndarray:
    """Copy of ``m`` with one ghost layer per side carrying the DMI free-edge condition.

    ``dm/dn = (D / 2A) m x (n x z)`` discretized as ``ghost = edge + h dm/dn``.
    """
    dx, dy, _ = cell
    k = params.D_dmi / (2.0 * params.A_ex)
    _, nx, ny = m.shape
    mp = np.zeros((3, nx + 2, ny + 2))
    mp[:, 1:-1, 1:-1] = m
    e = m[:, 0, :]
    mp[0, 0, 1:-1] = e[0] - dx * k * e[2]
    mp[1, 0, 1:-1] = e[1]
    mp[2, 0, 1:-1] = e[2] + dx * k * e[0]
    e = m[:, -1, :]
    mp[0, -1, 1:-1] = e[0] + dx * k * e[2]
    mp[1, -1, 1:-1] = e[1]
    mp[2, -1, 1:-1] = e[2] - dx * k * e[0]
    e = m[:, :, 0]
    mp[0, 1:-1, 0] = e[0]
    mp[1, 1:-1, 0] = e[1] - dy * k * e[2]
    mp[2, 1:-1, 0] = e[2] + dy * k * e[1]
    e = m[:, :, -1]
    mp[0, 1:-1, -1] = e[0]
    mp[1, 1:-1, -1] = e[1] + dy * k * e[2]
    mp[2, 1:-1, -1] = e[2] - dy * k * e[1]
    return mp


def field_terms(grid: MagGrid, params: MaterialParams, m: np.ndarray | None = None) -> dict[str, np.ndarray]:
    """Exchange, anisotropy and DMI fields (A/m), each shaped like ``m``."""
    m = grid.m if m is None else m
    dx, dy, _ = grid.cell
    mp = _padded(m, params, grid.cell)
    c = mp[:, 1:-1, 1:-1]
    xp, xm = mp[:, 2:, 1:-1], mp[:, :-2, 1:-1]
    yp, ym = mp[:, 1:-1, 2:], mp[:, 1:-1, :-2]

    pref = 1.0 / (params.mu0 * params.Ms)
    h_ex = (2.0 * params.A_ex * pref) * ((xp + xm - 2.0 * c) / dx**2 + (yp + ym - 2.0 * c) / dy**2)

    dmx = (xp - xm) / (2.0 * dx)
    dmy = (yp - ym) / (2.0 * dy)
    h_dmi = np.empty_like(m)
    cd = -2.0 * params.D_dmi * pref
    h_dmi[0] = cd * dmx[2]
    h_dmi[1] = cd * dmy[2]
    h_dmi[2] = -cd * (dmx[0] + dmy[1])

    h_an = np.zeros_like(m)
    h_an[2] = 2.0 * params.Keff * pref * m[2]
    return {"exchange": h_ex, "dmi": h_dmi, "anisotropy": h_an}


def effective_field(grid: MagGrid, params: MaterialParams, h_ext=None, m: np.ndarray | None = None) -> np.ndarray:
    """Total effective field (A/m) per cell; ``h_ext`` is an optional applied field vector."""
    terms = field_terms(grid, params, m)
    h = terms["exchange"] + terms["dmi"] + terms["anisotropy"]
    if h_ext is not None:
        h = h + np.asarray(h_ext, dtype=float).reshape(3, 1, 1)
    return h


def total_energy(grid: MagGrid, params: MaterialParams, h_ext=None) -> float:
    """Micromagnetic energy (J) consistent with :func:`effective_field`.

    Exchange, DMI and anisotropy fields are linear and symmetric in ``m``, so
    the energy is the quadratic form ``-mu0 Ms V / 2 * sum(m . H)``.
    """
    v = grid.cell_volume
    h = effective_field(grid, params)
    e = -0.5 * params.mu0 * params.Ms * v * float(np.sum(grid.m * h))
    if h_ext is not None:
        e -= params.mu0 * params.Ms * v * float(np.sum(grid.m * np.asarray(h_ext).reshape(3, 1, 1)))
    return e


def _cross(a, b):
    return np.stack(
        (
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        )
    )


def llg_rhs(
    grid: MagGrid,
    params: MaterialParams,
    m: np.ndarray,
    J: float = 0.0,
    h_ext=None,
    polarization: float = DEFAULT_POLARIZATION,
    alpha: float | None = None,
) -> np.ndarray:
    """dm/dt of the Gilbert-form equation solved explicitly for the time derivative."""
    alpha = params.alpha if alpha is None else alpha
    gamma = params.gamma
    h = effective_field(grid, params, h_ext, m)
    torque = -gamma * _cross(m, h)
    if J:
        # m x (p x m) = p (m.m) - m (m.p), p = polarization * y
        a_sh = gamma * params.spin_hall_field(J) * polarization
        mm = np.sum(m * m, axis=0)
        sot = -a_sh * m[1] * m
        sot[1] += a_sh * mm
        torque += sot
    rhs = (torque + alpha * _cross(m, torque)) / (1.0 + alpha**2)
    rhs[:, grid.pinned] = 0.0
    return rhs


def _kernel_args(grid: MagGrid, params: MaterialParams, J: float, polarization: float, alpha: float | None):
    pref = 1.0 / (params.mu0 * params.Ms)
    alpha = params.alpha if alpha is None else alpha
    a_sh = params.gamma * params.spin_hall_field(J) * polarization if J else 0.0
    return (
        float(grid.cell[0]),
        float(grid.cell[1]),
        params.D_dmi / (2.0 * params.A_ex),
        2.0 * params.A_ex * pref,
        -2.0 * params.D_dmi * pref,
        2.0 * params.Keff * pref,
        params.gamma,
        float(a_sh),
        float(alpha),
    )


def step_llg(
    grid: MagGrid,
    params: MaterialParams,
    J: float,
    dt: float,
    h_ext=None,
    polarization: float = DEFAULT_POLARIZATION,
    alpha: float | None = None,
    max_angle: float = 0.1,
    use_kernel: bool = True,
) -> MagGrid:
    """One Heun predictor-corrector step; returns a new grid.

    Raises :class:`StabilityError` if any cell moves by more than
    ``max_angle`` (radians, chord length) within the step.
    """
    if not dt > 0:
        raise MagneticsError("dt must be positive")
    m0 = grid.m
    if h_ext is None and use_kernel:
        m1, dm = _llg_kernel.heun_step(
            np.ascontiguousarray(m0), grid.pinned, *_kernel_args(grid, params, J, polarization, alpha), dt
        )
    else:
        k1 = llg_rhs(grid, params, m0, J, h_ext, polarization, alpha)
        mp = _normalize(m0 + dt * k1)
        k2 = llg_rhs(grid, params, mp, J, h_ext, polarization, alpha)
        m1 = _normalize(m0 + 0.5 * dt * (k1 + k2))
        m1[:, grid.pinned] = m0[:, grid.pinned]
        dm = float(np.max(np.sqrt(np.sum((m1 - m0) ** 2, axis=0))))
    if dm > max_angle:
        raise StabilityError(f"step rotated a cell by {dm:.3g} rad > {max_angle} rad; reduce dt={dt:g} s")
    out = grid.copy()
    out.m = m1
    return out


def relax(
    grid: MagGrid,
    params: MaterialParams,
    max_time: float = 0.5e-9,
    dt: float = 50e-15,
    torque_tol: float = 1e6,
    alpha: float = 1.0,
) -> MagGrid:
    """Overdamped zero-current relaxation until max |dm/dt| (1/s) drops below ``torque_tol``."""
    g = grid
    for i in range(int(math.ceil(max_time / dt))):
        g = step_llg(g, params, 0.0, dt, alpha=alpha)
        if i % 50 == 0:
            rate = llg_rhs(g, params, g.m, alpha=alpha)
            if float(np.max(np.abs(rate))) < torque_tol:
                break
    return g


def dw_position(grid: MagGrid) -> float:
    """Wall centre (m from the free-layer left edge) from the row-averaged mz zero crossing."""
    mz = grid.m[2].mean(axis=1)
    s = np.sign(mz)
    cross = np.nonzero(s[:-1] * s[1:] <= 0)[0]
    # a cell sitting exactly at mz == 0 registers on both of its bonds
    cross = cross[~np.isin(cross - 1, cross) | (s[cross] != 0)]
    if cross.size == 0:
        raise WallDetectionError("no wall: row-averaged mz never changes sign")
    if cross.size > 1:
        raise WallDetectionError(f"{cross.size} walls detected, expected exactly one")
    i = int(cross[0])
    x = grid.x_centers()
    if mz[i] == mz[i + 1]:
        pos = x[i]
    else:
        pos = x[i] + grid.cell[0] * mz[i] / (mz[i] - mz[i + 1])
    return float(np.clip(pos, 0.0, grid.free_length))


def fit_wall_width(grid: MagGrid) -> float:
    """Fit ``mz = -tanh((x - x0) / delta)`` to the row-averaged profile of the free cells."""
    free_cols = ~grid.pinned.all(axis=1)
    x = grid.x_centers()[free_cols]
    mz = grid.m[2].mean(axis=1)[free_cols]
    x0 = dw_position(grid)

    def profile(xx, c, d):
        return -np.tanh((xx - c) / d)

    (c, d), _ = curve_fit(profile, x, mz, p0=(x0, 5e-9))
    return abs(float(d))


@dataclass(frozen=True)
class RunSettings:
    """Integrator and sampling settings for :func:`run_dw`."""

    dt: float = 50e-15
    sample_every: float = 10e-12
    relax_time: float = 2e-9
    polarization: float = DEFAULT_POLARIZATION
    max_angle: float = 0.1


def prepare_wall(geometry: StripGeometry, params: MaterialParams, x0: float = 0.0, settings: RunSettings = RunSettings()) -> MagGrid:
    grid = init_neel_wall(MagGrid.from_geometry(geometry), params, x0)
    if settings.relax_time > 0:
        grid = relax(grid, params, settings.relax_time, settings.dt)
    return grid


def run_dw_density(
    grid: MagGrid,
    params: MaterialParams,
    J: float,
    duration: float,
    settings: RunSettings = RunSettings(),
    stop_at: float | None = None,
) -> tuple[DwTrace, MagGrid]:
    """Drive an existing wall state at current density ``J`` for ``duration`` seconds."""
    if not math.isfinite(J):
        raise MagneticsError("current density must be finite")
    if not duration > 0:
        raise MagneticsError("duration must be positive")
    n_steps = int(round(duration / settings.dt))
    every = max(1, int(round(settings.sample_every / settings.dt)))
    times, pos = [0.0], [dw_position(grid)]
    g = grid
    for n in range(1, n_steps + 1):
        g = step_llg(g, params, J, settings.dt, polarization=settings.polarization, max_angle=settings.max_angle)
        if n % every == 0 or n == n_steps:
            times.append(n * settings.dt)
            pos.append(dw_position(g))
            if stop_at is not None and pos[-1] >= stop_at:
                break
    return DwTrace(np.array(times), np.array(pos)), g


def run_dw(
    geometry: StripGeometry,
    params: MaterialParams,
    I_write: float,
    duration: float,
    x0: float = 0.0,
    settings: RunSettings = RunSettings(),
) -> DwTrace:
    """Wall trajectory for a write current ``I_write`` (A) applied for ``duration`` (s).

    The wall is initialized at ``x0`` and relaxed at zero current first; the
    returned trace starts when the current is switched on.
    """
    if not math.isfinite(I_write):
        raise MagneticsError("write current must be finite")
    if not duration > 0:
        raise MagneticsError("duration must be positive")
    grid = prepare_wall(geometry, params, x0, settings)
    J = params.current_density(I_write, geometry.width)
    trace, _ = run_dw_density(grid, params, J, duration, settings)
    return trace


def steady_velocity(trace: DwTrace, transient: float, limit: float | None = None) -> float:
    """Slope of position vs time after ``transient``, ignoring samples beyond ``limit``."""
    keep = trace.times >= transient
    if limit is not None:
        keep &= trace.positions <= limit
    if keep.sum() < 3:
        keep = np.ones_like(trace.times, dtype=bool)
        if limit is not None:
            keep &= trace.positions <= limit
    t, x = trace.times[keep], trace.positions[keep]
    if t.size < 2:
        return 0.0
    return float(np.polyfit(t, x, 1)[0])


def velocity_sweep(
    params: MaterialParams,
    geometry: StripGeometry,
    J_list,
    duration: float = 0.6e-9,
    transient: float = 0.15e-9,
    x0: float = 40e-9,
    settings: RunSettings = RunSettings(),
) -> list[tuple[float, float]]:
    """Steady-state wall velocity for each current density in ``J_list`` (ascending)."""
    J_list = [float(j) for j in J_list]
    if any(b < a for a, b in zip(J_list, J_list[1:])):
        raise MagneticsError("J_list must be sorted ascending")
    start = prepare_wall(geometry, params, x0, settings)
    # stay clear of the far pinned band where the wall decelerates
    limit = geometry.free_length - 4 * params.wall_width
    out = []
    for J in J_list:
        if J == 0.0:
            out.append((J, 0.0))
            continue
        trace, _ = run_dw_density(start, params, J, duration, settings, stop_at=limit)
        out.append((J, steady_velocity(trace, transient, limit)))
    return out


def write_velocity_csv(rows, path: str | Path) -> Path:
    lines = ["j_A_per_m2,v_mps"] + [f"{j:.6e},{v:.6e}" for j, v in rows]
    return atomic_write_text(path, "\n".join(lines) + "\n")
