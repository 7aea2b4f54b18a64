"""Barotropic compressible Navier-Stokes on the mapped channel grid.

Conservative cell-centred finite volumes in the reference coordinates:

    d(h q)/dt + d(h F)/dxh + d(G - zh h' F)/dzh = viscous terms,

with Rusanov (local Lax-Friedrichs) inviscid fluxes, central viscous stresses
evaluated on the faces, and Heun (explicit two-stage) time stepping.  The
bottom wall is no-slip; the rough top wall is impermeable and free of
tangential stress.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import analysis
from .errors import NonPositiveDensity

log = logging.getLogger(__name__)

GHOST = 2


@dataclass(frozen=True)
class FluidParams:
    """Pressure law ``p = a rho**gamma`` and Newtonian viscosities."""

    a: float = 1.0
    gamma: float = 2.0
    mu: float = 0.01
    eta: float = 0.0

    def __post_init__(self):
        if not self.gamma > 1.5:
            raise ValueError(f"gamma must exceed 3/2, got {self.gamma}")
        if not self.a > 0 or not self.mu > 0 or not self.eta >= 0:
            raise ValueError("need a > 0, mu > 0, eta >= 0")

    def pressure(self, rho):
        return self.a * rho**self.gamma

    def sound_speed(self, rho):
        return np.sqrt(self.a * self.gamma * rho ** (self.gamma - 1.0))


def inviscid_params(a=1.0, gamma=2.0):
    """Parameters with zero viscosity, for pure acoustics (bypasses the ``mu > 0`` check)."""
    p = FluidParams(a=a, gamma=gamma, mu=1.0, eta=0.0)
    object.__setattr__(p, "mu", 0.0)
    return p


@dataclass
class State:
    rho: np.ndarray  # (nx, nz)
    mom: np.ndarray  # (3, nx, nz)
    t: float = 0.0

    @property
    def velocity(self):
        return self.mom / self.rho

    def copy(self):
        return State(self.rho.copy(), self.mom.copy(), self.t)


@dataclass(frozen=True)
class UniformRest:
    rho0: float = 1.0


@dataclass(frozen=True)
class Shear:
    """``u1 = U1 min(z, 1) taper``, ``u2 = U2 min(z, 1)``, ``u3 = 0``.

    The taper is 1 below ``z = 1`` and falls linearly to 0 on the rough wall,
    so the initial field is impermeable there.
    """

    rho0: float = 1.0
    U1: float = 1.0
    U2: float = 0.0


def init_state(grid, ic):
    rho0 = ic.rho0
    if not rho0 > 0:
        raise ValueError("rho0 must be positive")
    rho = np.full(grid.shape, float(rho0))
    mom = np.zeros((3,) + grid.shape)
    if isinstance(ic, Shear):
        z = grid.z
        h = grid.h[:, None]
        zc = np.minimum(z, 1.0)
        taper = np.where(z <= 1.0, 1.0, (h - z) / (h - 1.0))
        mom[0] = rho0 * ic.U1 * zc * taper
        mom[1] = rho0 * ic.U2 * zc
    elif not isinstance(ic, UniformRest):
        raise TypeError(f"unknown initial condition {ic!r}")
    return State(rho, mom, 0.0)


def _check_density(rho, t=None):
    rmin = rho.min()
    if not (rmin > 0.0) or not np.isfinite(rmin):
        raise NonPositiveDensity(f"density {rmin!r} at t={t}", t=t)


def top_normals(grid):
    """Unit normals of the top faces as used by the scheme, ``(3, nx)``.

    Built from the discrete slope so the ghost reflection and the face metric
    agree exactly.
    """
    n = np.stack([-grid.dh, np.zeros(grid.nx), np.ones(grid.nx)])
    return n / np.sqrt(1.0 + grid.dh**2)


@dataclass
class Padded:
    """Density and velocity with ``GHOST`` layers on every side."""

    rho: np.ndarray
    u: np.ndarray


def apply_boundary(grid, state):
    """Fill ghost layers: periodic in x, mirrored at both walls.

    Bottom ghosts take the interior velocity with every component flipped
    (no-slip); top ghosts reflect it across the local tangent plane,
    ``u - 2 (u.n) n`` (impermeable, tangential part copied).  Density is
    extended evenly at both walls.
    """
    g = GHOST
    nx, nz = grid.shape
    rho = state.rho
    u = state.mom / rho
    rho_c = np.empty((nx, nz + 2 * g))
    u_c = np.empty((3, nx, nz + 2 * g))
    rho_c[:, g:g + nz] = rho
    u_c[:, :, g:g + nz] = u
    n = top_normals(grid)
    for j in range(g):
        # bottom: ghost row g-1-j mirrors interior row j
        rho_c[:, g - 1 - j] = rho[:, j]
        u_c[:, :, g - 1 - j] = -u[:, :, j]
        # top: ghost row g+nz+j mirrors interior row nz-1-j
        ut = u[:, :, nz - 1 - j]
        un = np.sum(ut * n, axis=0)
        rho_c[:, g + nz + j] = rho[:, nz - 1 - j]
        u_c[:, :, g + nz + j] = ut - 2.0 * un * n
    rho_p = np.concatenate([rho_c[-g:], rho_c, rho_c[:g]], axis=0)
    u_p = np.concatenate([u_c[:, -g:], u_c, u_c[:, :g]], axis=1)
    return Padded(rho_p, u_p)


def _stress_dot(params, dux, duz, n1, n3):
    """``S . (n1, 0, n3)`` from physical velocity gradients ``d u_a / dx`` and ``d u_a / dz``."""
    mu, eta = params.mu, params.eta
    div = dux[0] + duz[2]
    bulk = (eta - 2.0 / 3.0 * mu) * div
    s11 = 2.0 * mu * dux[0] + bulk
    s33 = 2.0 * mu * duz[2] + bulk
    s13 = mu * (dux[2] + duz[0])
    s21 = mu * dux[1]
    s23 = mu * duz[1]
    return (n1 * s11 + n3 * s13, n1 * s21 + n3 * s23, n1 * s13 + n3 * s33)


def rhs(grid, params, state, padded=None):
    """Tendencies ``(d rho/dt, d m/dt)`` of the semi-discrete scheme."""
    _check_density(state.rho, state.t)
    g = GHOST
    nx, nz = grid.shape
    P = apply_boundary(grid, state) if padded is None else padded
    rho_p = P.rho
    u_p = P.u
    p_p = params.pressure(rho_p)
    c_p = params.sound_speed(rho_p)
    m_p = rho_p * u_p

    drho = np.zeros(grid.shape)
    dmom = np.zeros((3,) + grid.shape)
    viscous = params.mu > 0 or params.eta > 0

    # ---- x-faces i+1/2, i = 0..nx-1, rows 0..nz-1
    L = (slice(g, g + nx), slice(g, g + nz))
    R = (slice(g + 1, g + nx + 1), slice(g, g + nz))
    rl, rr = rho_p[L], rho_p[R]
    ul, ur = u_p[(slice(None),) + L], u_p[(slice(None),) + R]
    ml, mr = m_p[(slice(None),) + L], m_p[(slice(None),) + R]
    pl, pr = p_p[L], p_p[R]
    alpha = np.maximum(np.abs(ul[0]) + c_p[L], np.abs(ur[0]) + c_p[R])
    hf = grid.h_face[:, None]
    fx_mass = 0.5 * (ml[0] + mr[0]) - 0.5 * alpha * (rr - rl)
    fx_mom = 0.5 * (ml * ul[0] + mr * ur[0]) - 0.5 * alpha * (mr - ml)
    fx_mom[0] += 0.5 * (pl + pr)
    if viscous:
        du_xh = (ur - ul) / grid.dx
        up = u_p[:, g:g + nx + 1, g + 1:g + nz + 1]
        dn = u_p[:, g:g + nx + 1, g - 1:g + nz - 1]
        cz = up - dn
        du_zh = (cz[:, :-1] + cz[:, 1:]) / (4.0 * grid.dzeta)
        h_c = grid.h
        dh_f = (np.roll(h_c, -1) - h_c) / grid.dx
        metric = grid.zeta[None, :] * (dh_f / grid.h_face)[:, None]
        dux = du_xh - metric * du_zh
        duz = du_zh / hf
        s1, s2, s3 = _stress_dot(params, dux, duz, 1.0, 0.0)
        fx_mom[0] -= s1
        fx_mom[1] -= s2
        fx_mom[2] -= s3
    fx_mass *= hf
    fx_mom *= hf
    drho -= (fx_mass - np.roll(fx_mass, 1, axis=0)) / grid.dx
    dmom -= (fx_mom - np.roll(fx_mom, 1, axis=1)) / grid.dx

    # ---- zeta-faces k+1/2, k = -1..nz-1
    L = (slice(g, g + nx), slice(g - 1, g + nz))
    R = (slice(g, g + nx), slice(g, g + nz + 1))
    n1 = -grid.zeta_face[None, :] * grid.dh[:, None]
    nn = np.sqrt(1.0 + n1**2)
    rl, rr = rho_p[L], rho_p[R]
    ul, ur = u_p[(slice(None),) + L], u_p[(slice(None),) + R]
    ml, mr = m_p[(slice(None),) + L], m_p[(slice(None),) + R]
    pl, pr = p_p[L], p_p[R]
    unl = ul[0] * n1 + ul[2]
    unr = ur[0] * n1 + ur[2]
    alpha = np.maximum(np.abs(unl) + c_p[L] * nn, np.abs(unr) + c_p[R] * nn)
    fz_mass = 0.5 * (rl * unl + rr * unr) - 0.5 * alpha * (rr - rl)
    fz_mom = 0.5 * (ml * unl + mr * unr) - 0.5 * alpha * (mr - ml)
    pf = 0.5 * (pl + pr)
    fz_mom[0] += pf * n1
    fz_mom[2] += pf
    # impermeable walls: the mirrored ghosts cancel the mass flux
    fz_mass[:, 0] = 0.0
    fz_mass[:, -1] = 0.0
    if viscous:
        du_zh = (ur - ul) / grid.dzeta
        rows = slice(g - 1, g + nz + 1)
        east = u_p[:, g + 1:g + nx + 1, rows]
        west = u_p[:, g - 1:g + nx - 1, rows]
        cx = east - west
        du_xh = (cx[:, :, :-1] + cx[:, :, 1:]) / (4.0 * grid.dx)
        metric = grid.zeta_face[None, :] * (grid.dh / grid.h)[:, None]
        dux = du_xh - metric * du_zh
        duz = du_zh / grid.h[:, None]
        s1, s2, s3 = _stress_dot(params, dux, duz, n1, 1.0)
        fz_mom[0] -= s1
        fz_mom[1] -= s2
        fz_mom[2] -= s3
    drho -= (fz_mass[:, 1:] - fz_mass[:, :-1]) / grid.dzeta
    dmom -= (fz_mom[:, :, 1:] - fz_mom[:, :, :-1]) / grid.dzeta

    inv_h = 1.0 / grid.h[:, None]
    return drho * inv_h, dmom * inv_h


def cfl_dt(grid, params, state, cfl):
    """Stable explicit step: ``cfl * min(D/(|u|+c), D**2 rho / (2 (2 mu + eta)))``.

    ``D`` is the smallest distance between opposite faces of the cell, which
    on flat columns is the smaller cell edge.
    """
    _check_density(state.rho, state.t)
    slope = grid.zeta[None, :] * grid.dh[:, None]
    spacing = np.minimum(grid.dx, grid.h[:, None] * grid.dzeta / np.sqrt(1.0 + slope**2))
    speed = np.sqrt(np.sum(state.velocity**2, axis=0)) + params.sound_speed(state.rho)
    dt = np.min(spacing / speed)
    nu = 2.0 * params.mu + params.eta
    if nu > 0:
        dt = min(dt, np.min(0.5 * spacing**2 * state.rho / nu))
    return float(cfl * dt)


def step(grid, params, state, dt):
    """One Heun step; raises :class:`NonPositiveDensity` if the update loses positivity."""
    d1r, d1m = rhs(grid, params, state)
    mid = State(state.rho + dt * d1r, state.mom + dt * d1m, state.t + dt)
    _check_density(mid.rho, mid.t)
    d2r, d2m = rhs(grid, params, mid)
    new = State(
        state.rho + 0.5 * dt * (d1r + d2r),
        state.mom + 0.5 * dt * (d1m + d2m),
        state.t + dt,
    )
    _check_density(new.rho, new.t)
    return new


@dataclass(frozen=True)
class RunConfig:
    params: FluidParams
    grid: object
    ic: object
    t_end: float
    cfl: float = 0.4
    record_dt: float = 0.01
    snapshot_dt: float | None = None

    def __post_init__(self):
        if not 0.0 < self.cfl <= 0.9:
            raise ValueError("cfl must lie in (0, 0.9]")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if not self.record_dt > 0:
            raise ValueError("record_dt must be positive")


@dataclass
class RunResult:
    series: list
    snapshots: list
    final: State
    steps: int = 0


def run(config, initial=None):
    """Integrate to ``t_end``, recording diagnostics every ``record_dt``.

    Dissipation is accumulated every step (trapezoid rule), the remaining
    diagnostics only at record times.  ``t_end = 0`` gives an empty series
    and the initial snapshot only.
    """
    grid, params = config.grid, config.params
    state = init_state(grid, config.ic) if initial is None else initial.copy()
    _check_density(state.rho, state.t)
    snapshots = [state.copy()]
    if config.t_end == 0:
        return RunResult([], snapshots, state, 0)

    d_now = analysis.dissipation_rate(grid, params, state)
    d_cum = 0.0
    dp_cum = 0.0
    series = [analysis.record(grid, params, state, dissipation=d_now, d_cum=0.0, d_frob_cum=0.0)]
    _log_record(series[-1], 0.0)
    next_rec = config.record_dt
    next_snap = config.snapshot_dt
    steps = 0
    eps_t = 1e-12 * max(1.0, config.t_end)
    while state.t < config.t_end - eps_t:
        dt = cfl_dt(grid, params, state, config.cfl)
        dt = min(dt, next_rec - state.t, config.t_end - state.t)
        try:
            state = step(grid, params, state, dt)
        except NonPositiveDensity as exc:
            exc.t = state.t
            raise
        steps += 1
        d_new = analysis.dissipation_rate(grid, params, state)
        d_cum += 0.5 * dt * (d_now[0] + d_new[0])
        dp_cum += 0.5 * dt * (d_now[1] + d_new[1])
        d_now = d_new
        if state.t >= next_rec - eps_t or state.t >= config.t_end - eps_t:
            rec = analysis.record(
                grid, params, state, dissipation=d_now, d_cum=d_cum, d_frob_cum=dp_cum
            )
            series.append(rec)
            _log_record(rec, dt)
            next_rec = min(next_rec + config.record_dt, config.t_end)
            if next_rec <= state.t + eps_t:
                next_rec = config.t_end
        if next_snap is not None and state.t >= next_snap - eps_t:
            snapshots.append(state.copy())
            next_snap += config.snapshot_dt
    if snapshots[-1].t != state.t:
        snapshots.append(state.copy())
    return RunResult(series, snapshots, state, steps)


def _log_record(rec, dt):
    log.info("t=%f dt=%f mass=%f E=%f", rec.t, dt, rec.mass, rec.E)
