"""Compiled Heun step for the strip LLG problem.

Same discretization as the array code in :mod:`spinann.magnetics` (ghost
cells for the DMI free edge, central differences), fused into one pass per
stage. Used only when no external field is applied.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _rhs(m, pinned, dx, dy, kd, cex, cdmi, can, gamma, a_sh, alpha, out):
    nx = m.shape[1]
    ny = m.shape[2]
    inv_dx2 = 1.0 / (dx * dx)
    inv_dy2 = 1.0 / (dy * dy)
    norm = 1.0 / (1.0 + alpha * alpha)
    for i in range(nx):
        for j in range(ny):
            if pinned[i, j]:
                out[0, i, j] = 0.0
                out[1, i, j] = 0.0
                out[2, i, j] = 0.0
                continue
            c0 = m[0, i, j]
            c1 = m[1, i, j]
            c2 = m[2, i, j]
            if i + 1 < nx:
                xp0, xp1, xp2 = m[0, i + 1, j], m[1, i + 1, j], m[2, i + 1, j]
            else:
                xp0, xp1, xp2 = c0 + dx * kd * c2, c1, c2 - dx * kd * c0
            if i > 0:
                xm0, xm1, xm2 = m[0, i - 1, j], m[1, i - 1, j], m[2, i - 1, j]
            else:
                xm0, xm1, xm2 = c0 - dx * kd * c2, c1, c2 + dx * kd * c0
            if j + 1 < ny:
                yp0, yp1, yp2 = m[0, i, j + 1], m[1, i, j + 1], m[2, i, j + 1]
            else:
                yp0, yp1, yp2 = c0, c1 + dy * kd * c2, c2 - dy * kd * c1
            if j > 0:
                ym0, ym1, ym2 = m[0, i, j - 1], m[1, i, j - 1], m[2, i, j - 1]
            else:
                ym0, ym1, ym2 = c0, c1 - dy * kd * c2, c2 + dy * kd * c1

            hx = cex * ((xp0 + xm0 - 2.0 * c0) * inv_dx2 + (yp0 + ym0 - 2.0 * c0) * inv_dy2)
            hy = cex * ((xp1 + xm1 - 2.0 * c1) * inv_dx2 + (yp1 + ym1 - 2.0 * c1) * inv_dy2)
            hz = cex * ((xp2 + xm2 - 2.0 * c2) * inv_dx2 + (yp2 + ym2 - 2.0 * c2) * inv_dy2)
            hx += cdmi * (xp2 - xm2) / (2.0 * dx)
            hy += cdmi * (yp2 - ym2) / (2.0 * dy)
            hz -= cdmi * ((xp0 - xm0) / (2.0 * dx) + (yp1 - ym1) / (2.0 * dy))
            hz += can * c2

            t0 = -gamma * (c1 * hz - c2 * hy)
            t1 = -gamma * (c2 * hx - c0 * hz)
            t2 = -gamma * (c0 * hy - c1 * hx)
            if a_sh != 0.0:
                mm = c0 * c0 + c1 * c1 + c2 * c2
                t0 -= a_sh * c1 * c0
                t1 += a_sh * (mm - c1 * c1)
                t2 -= a_sh * c1 * c2
            out[0, i, j] = norm * (t0 + alpha * (c1 * t2 - c2 * t1))
            out[1, i, j] = norm * (t1 + alpha * (c2 * t0 - c0 * t2))
            out[2, i, j] = norm * (t2 + alpha * (c0 * t1 - c1 * t0))


@njit(cache=True)
def _normalize_into(a, out):
    for i in range(a.shape[1]):
        for j in range(a.shape[2]):
            n = np.sqrt(a[0, i, j] ** 2 + a[1, i, j] ** 2 + a[2, i, j] ** 2)
            out[0, i, j] = a[0, i, j] / n
            out[1, i, j] = a[1, i, j] / n
            out[2, i, j] = a[2, i, j] / n


@njit(cache=True)
def heun_step(m, pinned, dx, dy, kd, cex, cdmi, can, gamma, a_sh, alpha, dt):
    """Return (new m, largest per-cell chord moved)."""
    k1 = np.empty_like(m)
    k2 = np.empty_like(m)
    _rhs(m, pinned, dx, dy, kd, cex, cdmi, can, gamma, a_sh, alpha, k1)
    mp = np.empty_like(m)
    _normalize_into(m + dt * k1, mp)
    _rhs(mp, pinned, dx, dy, kd, cex, cdmi, can, gamma, a_sh, alpha, k2)
    m1 = np.empty_like(m)
    _normalize_into(m + 0.5 * dt * (k1 + k2), m1)
    dm = 0.0
    for i in range(m.shape[1]):
        for j in range(m.shape[2]):
            if pinned[i, j]:
                for c in range(3):
                    m1[c, i, j] = m[c, i, j]
                continue
            d = np.sqrt(
                (m1[0, i, j] - m[0, i, j]) ** 2 + (m1[1, i, j] - m[1, i, j]) ** 2 + (m1[2, i, j] - m[2, i, j]) ** 2
            )
            if d > dm:
                dm = d
    return m1, dm


def rhs(m, pinned, dx, dy, kd, cex, cdmi, can, gamma, a_sh, alpha):
    out = np.empty_like(m)
    _rhs(m, pinned, dx, dy, kd, cex, cdmi, can, gamma, a_sh, alpha, out)
    return out
