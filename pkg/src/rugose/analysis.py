"""Scalar functionals of flow fields: energy, dissipation and inequality ratios."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import WeightDegenerate
from .grid import grad_phys, integrate, trace_line

UNBOUNDED = math.inf
ZERO_GRADIENT = 1e-30


def theta_exponent(gamma):
    """Exponent of the pressure integrability functional, ``2 gamma / 3 - 1``."""
    return 2.0 * gamma / 3.0 - 1.0


def pressure_potential(params, rho):
    """``P(rho) = rho * int_1^rho p(z)/z**2 dz = a (rho**gamma - rho) / (gamma - 1)``."""
    return params.a * (rho**params.gamma - rho) / (params.gamma - 1.0)


def energy(grid, params, state):
    """Kinetic plus potential energy ``int (rho |u|^2 / 2 + P(rho))``."""
    kin = 0.5 * np.sum(state.mom**2, axis=0) / state.rho
    return float(integrate(grid, kin + pressure_potential(params, state.rho)))


def velocity_gradient(grid, u):
    """``(d u_a/dx, d u_a/dz)`` for a ``(3, nx, nz)`` velocity, shape ``(2, 3, nx, nz)``."""
    return grad_phys(grid, u)


def _deviatoric_sq(dux, duz):
    """``|grad u + grad u^T - (2/3) div u I|^2`` with ``d/dx2 = 0``, and ``div u``."""
    div = dux[0] + duz[2]
    d11 = 2.0 * dux[0] - 2.0 / 3.0 * div
    d22 = -2.0 / 3.0 * div
    d33 = 2.0 * duz[2] - 2.0 / 3.0 * div
    d13 = dux[2] + duz[0]
    d12 = dux[1]
    d23 = duz[1]
    sq = d11**2 + d22**2 + d33**2 + 2.0 * (d13**2 + d12**2 + d23**2)
    return sq, div


def dissipation_rate(grid, params, state):
    """Viscous dissipation ``(D, D_frob)``.

    ``D`` uses the stress power ``mu/2 |dev sym|^2 + eta (div u)^2``.
    ``D_frob`` takes the bulk term as the Frobenius square of
    ``eta (div u) I`` instead, i.e. ``3 eta (div u)^2``, and so exceeds
    ``D`` by ``2 eta int (div u)^2``.
    """
    u = state.mom / state.rho
    dux, duz = velocity_gradient(grid, u)
    sq, div = _deviatoric_sq(dux, duz)
    shear = integrate(grid, 0.5 * params.mu * sq)
    bulk = integrate(grid, params.eta * div**2)
    return float(shear + bulk), float(shear + 3.0 * bulk)


def gradient_sq(grid, v):
    """``||grad v||^2`` over all components of ``v`` (last two axes are the grid)."""
    dv = grad_phys(grid, v)
    return float(integrate(grid, np.sum(dv**2, axis=tuple(range(dv.ndim - 2)))))


def component_gradient_sq(grid, v):
    """Per-component ``||grad v_c||^2`` for a ``(ncomp, nx, nz)`` field."""
    dv = grad_phys(grid, v)
    return integrate(grid, np.sum(dv**2, axis=0))


def trace_sq(grid, v):
    """Per-component ``int_{z=1} v_c^2`` for a ``(ncomp, nx, nz)`` field."""
    vals, wts = trace_line(grid, v)
    return np.sum(vals**2 * wts, axis=-1)


def trace_ratio(grid, v, components=(0, 1, 2)):
    """``int_{z=1} |v|^2 / ||grad v||^2`` over the selected components.

    Returns :data:`UNBOUNDED` when the gradient vanishes but the trace does
    not, which is what a slipping flat wall looks like.
    """
    v = np.asarray(v, float)[list(components)]
    tr = float(np.sum(trace_sq(grid, v)))
    gs = gradient_sq(grid, v)
    if gs <= ZERO_GRADIENT:
        return UNBOUNDED if tr > 0.0 else 0.0
    return tr / gs


def slip_field(spec, mode_index, x, zeta, kind="layer"):
    """Analytic impermeable test field sampled at reference points ``(x, zeta)``.

    The field is ``v = (-d psi/dz, 0, d psi/dx)`` for a stream function that
    vanishes on both walls, so ``v . n = 0`` holds exactly there.

    ``kind="layer"`` uses
    ``psi = eps s(x) zh (1 - exp(-h (1 - zh) / eps))`` with
    ``s = sin(2 pi k x)``: an O(1) slip velocity whose adjustment to the rough
    wall is confined to a layer of thickness ``eps``.

    ``kind="mapped"`` uses ``psi = sin(pi zh) s(x)``, which feels the wall
    shape through the mapping over the whole depth.
    """
    from .geometry import eval_height, height_gradient

    if mode_index < 1:
        raise ValueError("mode_index must be >= 1")
    x, zeta = np.broadcast_arrays(np.asarray(x, float), np.asarray(zeta, float))
    eps = spec.epsilon
    h = eval_height(spec, x)
    dh, _ = height_gradient(spec, x)
    k = 2.0 * np.pi * mode_index
    s, ds = np.sin(k * x), k * np.cos(k * x)
    if kind == "layer":
        e = np.exp(-h * (1.0 - zeta) / eps)
        dpsi_dzh = eps * s * (1.0 - e) - s * zeta * h * e
        dpsi_dxh = eps * ds * zeta * (1.0 - e) + s * zeta * e * dh * (1.0 - zeta)
    elif kind == "mapped":
        dpsi_dzh = np.pi * np.cos(np.pi * zeta) * s
        dpsi_dxh = np.sin(np.pi * zeta) * ds
    else:
        raise ValueError(f"unknown slip field kind {kind!r}")
    dpsi_dz = dpsi_dzh / h
    dpsi_dx = dpsi_dxh - zeta * (dh / h) * dpsi_dzh
    return np.stack([-dpsi_dz, np.zeros_like(h), dpsi_dx])


def synthetic_slip_field(grid, mode_index, kind="layer"):
    """:func:`slip_field` at the cell centres of ``grid``, shape ``(3, nx, nz)``."""
    x = grid.x[:, None] * np.ones((1, grid.nz))
    zeta = grid.zeta[None, :] * np.ones((grid.nx, 1))
    return slip_field(grid.spec, mode_index, x, zeta, kind)


def korn_ratio(grid, v, r, m=1e-3, M=1e6, nu=2.0):
    """``||v||^2_{W^{1,2}} / (||dev sym grad v||_{L^2} + int r |v|)^2``.

    The weight must satisfy ``int r >= m`` and ``int r**nu <= M``; otherwise
    :class:`WeightDegenerate` is raised.  A zero field gives 0.
    """
    r = np.asarray(r, float)
    mass = float(integrate(grid, r))
    if not mass >= m:
        raise WeightDegenerate(f"int r = {mass:g} < m = {m:g}")
    if float(integrate(grid, np.abs(r) ** nu)) > M:
        raise WeightDegenerate(f"int r^nu exceeds M = {M:g}")
    v = np.asarray(v, float)
    dux, duz = grad_phys(grid, v)
    dev_sq, _ = _deviatoric_sq(dux, duz)
    w12 = float(integrate(grid, np.sum(v**2, axis=0))) + float(
        integrate(grid, np.sum(dux**2 + duz**2, axis=0))
    )
    denom = math.sqrt(float(integrate(grid, dev_sq))) + float(
        integrate(grid, r * np.sqrt(np.sum(v**2, axis=0)))
    )
    if denom == 0.0:
        return 0.0
    return w12 / denom**2


def pressure_integrand(grid, params, rho):
    """``int p(rho) rho**theta`` at one instant."""
    theta = theta_exponent(params.gamma)
    return float(integrate(grid, params.pressure(rho) * rho**theta))


def pressure_functional(grid, params, states):
    """Trapezoid-in-time integral of :func:`pressure_integrand` over snapshots."""
    states = list(states)
    if len(states) < 2:
        return 0.0
    t = np.array([s.t for s in states])
    vals = np.array([pressure_integrand(grid, params, s.rho) for s in states])
    return float(np.trapezoid(vals, t))


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    E: float
    D: float
    D_cum: float
    D_frob: float
    D_frob_cum: float
    mass: float
    trace_sq_u1: float
    trace_sq_u2: float
    trace_sq_u3: float
    grad_sq: float
    pressure_fn: float
    grad_sq_u1: float = 0.0
    grad_sq_u2: float = 0.0
    grad_sq_u3: float = 0.0

    CSV_HEADER = (
        "t", "E", "D_cum", "D_frob_cum", "mass",
        "trace1", "trace2", "trace3", "grad_sq", "pressure_fn",
    )

    def csv_row(self):
        return (
            self.t, self.E, self.D_cum, self.D_frob_cum, self.mass,
            self.trace_sq_u1, self.trace_sq_u2, self.trace_sq_u3,
            self.grad_sq, self.pressure_fn,
        )


def record(grid, params, state, prev=None, dissipation=None, d_cum=None, d_frob_cum=None):
    """Bundle every diagnostic of ``state``.

    Cumulative dissipation is taken from ``d_cum``/``d_frob_cum`` when the
    caller accumulates it per step; otherwise it is advanced from ``prev`` by
    the trapezoid rule.
    """
    if dissipation is None:
        dissipation = dissipation_rate(grid, params, state)
    d, dp = dissipation
    if d_cum is None:
        if prev is None:
            d_cum, d_frob_cum = 0.0, 0.0
        else:
            dt = state.t - prev.t
            d_cum = prev.D_cum + 0.5 * dt * (prev.D + d)
            d_frob_cum = prev.D_frob_cum + 0.5 * dt * (prev.D_frob + dp)
    u = state.mom / state.rho
    tr = trace_sq(grid, u)
    gc = component_gradient_sq(grid, u)
    return DiagnosticsRecord(
        t=float(state.t),
        E=energy(grid, params, state),
        D=d,
        D_cum=float(d_cum),
        D_frob=dp,
        D_frob_cum=float(d_frob_cum if d_frob_cum is not None else 0.0),
        mass=float(integrate(grid, state.rho)),
        trace_sq_u1=float(tr[0]),
        trace_sq_u2=float(tr[1]),
        trace_sq_u3=float(tr[2]),
        grad_sq=float(np.sum(gc)),
        pressure_fn=pressure_integrand(grid, params, state.rho),
        grad_sq_u1=float(gc[0]),
        grad_sq_u2=float(gc[1]),
        grad_sq_u3=float(gc[2]),
    )
