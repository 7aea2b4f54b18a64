"""Terrain-following grid over the rough channel.

A reference point ``(xh, zh)`` in ``[0, 1) x [0, 1]`` maps to the physical
point ``(x, z) = (xh, zh * h(xh))`` with ``h = 1 + Phi_eps``.  Cells are
cell-centred and uniform in the reference coordinates, so ``zh = 1`` is the
rough wall and ``zh = 0`` the flat bottom.  Fields are arrays whose last two
axes are ``(nx, nz)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnderResolved
from .geometry import Mode, ProfileKind, eval_height

MIN_CELLS_PER_PERIOD = 16
MIN_NZ = 16


@dataclass(frozen=True, eq=False)
class MappedGrid:
    spec: object
    nx: int
    nz: int
    dx: float
    dzeta: float
    x: np.ndarray  # cell-centre abscissae, (nx,)
    x_face: np.ndarray  # x_{i+1/2}, (nx,)
    zeta: np.ndarray  # reference heights of cell centres, (nz,)
    zeta_face: np.ndarray  # reference heights of the nz+1 horizontal faces
    h: np.ndarray  # column height at cell centres
    h_face: np.ndarray  # column height at x_{i+1/2}
    dh: np.ndarray  # (h_face[i] - h_face[i-1]) / dx, cell centred
    w: np.ndarray  # cell volumes h * dx * dzeta, (nx, nz)

    @property
    def shape(self):
        return (self.nx, self.nz)

    @property
    def z(self):
        """Physical height of every cell centre."""
        return self.zeta[None, :] * self.h[:, None]

    @property
    def volume(self):
        return float(self.w.sum())

    def min_spacing(self):
        """Smallest distance between opposite faces of any cell (sheared cells included)."""
        slope = self.zeta[None, :] * self.dh[:, None]
        vert = self.h[:, None] * self.dzeta / np.sqrt(1.0 + slope**2)
        return float(min(self.dx, vert.min()))


def build_grid(spec, nx, nz, check_resolution=True):
    """Build the mapped grid for ``spec``.

    Raises :class:`UnderResolved` unless there are at least 16 cells per
    roughness period and at least 16 vertical cells.  The period rule does
    not apply to flat profiles, which have no roughness to resolve.
    """
    if spec.mode is not Mode.PLANAR25D:
        raise NotImplementedError("structured grids are built for planar (x2-invariant) domains")
    nx, nz = int(nx), int(nz)
    if check_resolution:
        if spec.profile.kind is not ProfileKind.FLAT and nx * spec.epsilon < MIN_CELLS_PER_PERIOD - 1e-9:
            raise UnderResolved(
                f"nx={nx} gives {nx * spec.epsilon:g} cells per roughness period, "
                f"need {MIN_CELLS_PER_PERIOD}"
            )
        if nz < MIN_NZ:
            raise UnderResolved(f"nz={nz} < {MIN_NZ}")
    dx = 1.0 / nx
    dzeta = 1.0 / nz
    x = (np.arange(nx) + 0.5) * dx
    x_face = (np.arange(nx) + 1.0) * dx
    zeta = (np.arange(nz) + 0.5) * dzeta
    zeta_face = np.arange(nz + 1) * dzeta
    h = eval_height(spec, x)
    h_face = eval_height(spec, x_face)
    dh = (h_face - np.roll(h_face, 1)) / dx
    w = h[:, None] * dx * dzeta * np.ones((1, nz))
    return MappedGrid(spec, nx, nz, dx, dzeta, x, x_face, zeta, zeta_face, h, h_face, dh, w)


def integrate(grid, field):
    """Midpoint quadrature of ``field`` over the channel (sums the last two axes)."""
    return np.sum(np.asarray(field) * grid.w, axis=(-2, -1))


def grad_phys(grid, field, periodic=True):
    """Physical gradient ``(d/dx, d/dz)`` stacked on a new leading axis.

    Second-order central differences in the reference coordinates, one-sided
    second-order at the top and bottom rows, then the chain rule
    ``d/dx = d/dxh - zh (h'/h) d/dzh`` and ``d/dz = (1/h) d/dzh``.  The same
    stencil differentiates ``h``, which makes the result exact on affine
    functions of ``(x, z)``.  Pass ``periodic=False`` for fields that do not
    wrap around the torus.
    """
    f = np.asarray(field, dtype=float)
    if periodic:
        df_dxh = (np.roll(f, -1, axis=-2) - np.roll(f, 1, axis=-2)) / (2 * grid.dx)
        dh = (np.roll(grid.h, -1) - np.roll(grid.h, 1)) / (2 * grid.dx)
    else:
        df_dxh = np.gradient(f, grid.dx, axis=-2, edge_order=2)
        dh = np.gradient(grid.h, grid.dx, edge_order=2)
    df_dzh = np.gradient(f, grid.dzeta, axis=-1, edge_order=2)
    h = grid.h[:, None]
    dfdx = df_dxh - grid.zeta[None, :] * (dh[:, None] / h) * df_dzh
    dfdz = df_dzh / h
    return np.stack([dfdx, dfdz])


def div_phys(grid, v1, v3):
    """Finite-volume divergence of a vector field that vanishes on both walls.

    Face values are two-point averages; the wall faces carry zero flux.  The
    cell sum ``integrate(grid, div_phys(...))`` telescopes to zero exactly.
    """
    v1 = np.asarray(v1, float)
    v3 = np.asarray(v3, float)
    # x-faces: flux h_{i+1/2} * v1
    fx = grid.h_face[:, None] * 0.5 * (v1 + np.roll(v1, -1, axis=0))
    # zeta-faces: flux v3 - zh * h' * v1, zero on the walls
    nx, nz = grid.shape
    fz = np.zeros((nx, nz + 1))
    v1f = 0.5 * (v1[:, 1:] + v1[:, :-1])
    v3f = 0.5 * (v3[:, 1:] + v3[:, :-1])
    fz[:, 1:-1] = v3f - grid.zeta_face[None, 1:-1] * grid.dh[:, None] * v1f
    div = (fx - np.roll(fx, 1, axis=0)) / grid.dx + (fz[:, 1:] - fz[:, :-1]) / grid.dzeta
    return div / grid.h[:, None]


def trace_line(grid, field):
    """Values of ``field`` on the physical line ``z = 1`` and their line weights.

    Linear interpolation in ``zh`` between the two cell centres bracketing
    ``zh* = 1 / h`` in every column (extrapolating from the top pair when
    ``zh*`` lies above the last centre).  Returns ``(values, weights)`` with
    ``values`` of shape ``(..., nx)``.
    """
    f = np.asarray(field, dtype=float)
    zs = 1.0 / grid.h
    k = np.clip(np.floor((zs - grid.zeta[0]) / grid.dzeta).astype(int), 0, grid.nz - 2)
    theta = (zs - grid.zeta[k]) / grid.dzeta
    cols = np.arange(grid.nx)
    lo = f[..., cols, k]
    hi = f[..., cols, k + 1]
    return (1.0 - theta) * lo + theta * hi, np.full(grid.nx, grid.dx)
