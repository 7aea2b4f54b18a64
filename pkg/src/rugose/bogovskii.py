"""Discrete right inverse of the divergence with zero boundary values.

For a zero-mean density ``g`` the solver returns the field ``v`` of least
Dirichlet energy ``||grad v||^2`` subject to ``div v = g`` and ``v = 0`` on
both walls.  This is a Stokes-type saddle point; it is solved by Uzawa
conjugate gradients on the pressure Schur complement, with AMG-preconditioned
CG for the inner vector Poisson solves.

Layout is staggered (MAC) on the mapped grid: ``v1`` sits on the x-faces
``(x_{i+1/2}, zh_k)`` and ``v3`` on the horizontal faces ``(x_i, zh_{k+1/2})``.
Wall faces carry ``v3 = 0`` exactly; ``v1`` meets the walls through mirrored
ghost values.  In the planar setting ``v2`` does not enter the divergence and
the minimiser has ``v2 = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pyamg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NoConvergence
from .grid import build_grid, integrate

INNER_RTOL = 1e-13


@dataclass
class BogovskiiProblem:
    """Right-hand side ``g`` (cell centred) on ``grid``; the mean is removed on construction."""

    grid: object
    g: np.ndarray
    tolerance: float = 1e-8
    max_iterations: int = 1000

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        g = np.asarray(self.g, float)
        if g.shape != self.grid.shape:
            raise ValueError(f"g has shape {g.shape}, grid is {self.grid.shape}")
        self.g = g - integrate(self.grid, g) / self.grid.volume


@dataclass
class BogovskiiSolution:
    v1: np.ndarray  # (nx, nz) on x-faces
    v3: np.ndarray  # (nx, nz + 1) on horizontal faces, walls included
    pressure: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True, eq=False)
class MacOperators:
    """Sparse operators on the unknown vector ``[v1.ravel(), v3_interior.ravel()]``."""

    A: sp.csr_matrix  # Dirichlet form, ||grad v||^2 = x^T A x
    B: sp.csr_matrix  # divergence onto cell centres
    mass_v: np.ndarray  # lumped L2 weights of the unknowns
    mass_p: np.ndarray  # cell volumes
    n1: int
    n3: int
    shape: tuple
    extra: dict = field(default_factory=dict)


def _idx(nx, nrows):
    return np.arange(nx * nrows).reshape(nx, nrows)


def _rows_cols(entries, nrow, ncol):
    r, c, v = (np.concatenate(a) for a in zip(*entries))
    return sp.csr_matrix((v, (r, c)), shape=(nrow, ncol))


def _family_form(dxi, dzeta, zeta_p, dh_p, h_p, wts):
    """``Gx^T W Gx + Gz^T W Gz`` for the chain-rule gradient on one point family."""
    metric = sp.diags((zeta_p * dh_p / h_p).ravel())
    gx = dxi - metric @ dzeta
    gz = sp.diags((1.0 / h_p).ravel()) @ dzeta
    W = sp.diags(wts.ravel())
    return gx.T @ W @ gx + gz.T @ W @ gz


def mac_operators(grid):
    """Assemble the Dirichlet form and divergence of the staggered layout."""
    nx, nz = grid.shape
    dx, dz = grid.dx, grid.dzeta
    h, hf, dh = grid.h, grid.h_face, grid.dh
    dhf = (np.roll(h, -1) - h) / dx  # slope at x_{i+1/2}
    zc, zf = grid.zeta, grid.zeta_face
    ip = np.roll(np.arange(nx), -1)
    im = np.roll(np.arange(nx), 1)

    n1 = nx * nz
    n3 = nx * (nz - 1)
    I1 = _idx(nx, nz)
    # full v3 index with walls; -1 marks a wall (fixed zero)
    I3 = -np.ones((nx, nz + 1), dtype=int)
    I3[:, 1:nz] = n1 + _idx(nx, nz - 1)
    N = n1 + n3

    def entries(rows, cols, vals):
        rows, cols, vals = np.broadcast_arrays(rows, cols, vals)
        keep = cols >= 0
        return rows[keep].ravel(), cols[keep].ravel(), vals[keep].ravel().astype(float)

    # ---- v1: padded row index with mirrored ghosts (sign -1) at the walls
    def v1_pad(i, kp):
        """Column and sign for padded v1 row kp in -1..nz."""
        k = np.clip(kp, 0, nz - 1)
        sign = np.where((kp < 0) | (kp > nz - 1), -1.0, 1.0)
        return I1[i, k], sign

    # compact d/dxh of v1 at (cell col i, padded row kp): (v1[i] - v1[i-1]) / dx
    def d1_xi(pt, i, kp, scale):
        ca, sa = v1_pad(i, kp)
        cb, sb = v1_pad(im[i], kp)
        return [entries(pt, ca, scale * sa / dx), entries(pt, cb, -scale * sb / dx)]

    # compact d/dzh of v1 at (face col i, face row k): (v1p[k] - v1p[k-1]) / dz
    def d1_zeta(pt, i, k, scale):
        ca, sa = v1_pad(i, k)
        cb, sb = v1_pad(i, k - 1)
        return [entries(pt, ca, scale * sa / dz), entries(pt, cb, -scale * sb / dz)]

    forms = []
    # v1 family P1: cell centres, compact xi, averaged zeta
    ii, kk = np.meshgrid(np.arange(nx), np.arange(nz), indexing="ij")
    pt = _idx(nx, nz)
    Dxi = _rows_cols(d1_xi(pt, ii, kk, 1.0), nx * nz, N)
    ent = []
    for ci in (ii, im[ii]):
        for kr in (kk, kk + 1):
            ent += d1_zeta(pt, ci, kr, 0.25)
    Dze = _rows_cols(ent, nx * nz, N)
    forms.append(_family_form(Dxi, Dze, zc[None, :] + 0 * ii, dh[:, None] + 0 * kk,
                              h[:, None] + 0 * kk, h[:, None] * dx * dz + 0 * kk))
    # v1 family P2: (x_{i+1/2}, face rows 0..nz), compact zeta, averaged xi
    ii, kk = np.meshgrid(np.arange(nx), np.arange(nz + 1), indexing="ij")
    pt = _idx(nx, nz + 1)
    Dze = _rows_cols(d1_zeta(pt, ii, kk, 1.0), nx * (nz + 1), N)
    ent = []
    for ci in (ii, ip[ii]):
        for kr in (kk - 1, kk):
            ent += d1_xi(pt, ci, kr, 0.25)
    Dxi = _rows_cols(ent, nx * (nz + 1), N)
    half = np.where((kk == 0) | (kk == nz), 0.5, 1.0)
    forms.append(_family_form(Dxi, Dze, zf[None, :] + 0 * ii, dhf[:, None] + 0 * kk,
                              hf[:, None] + 0 * kk, hf[:, None] * dx * dz * half))

    # ---- v3 (wall rows are fixed zeros, dropped by ``entries``)
    def d3_xi(pt, i, j, scale):
        # at (x_{i+1/2}, face row j)
        return [entries(pt, I3[ip[i], j], scale / dx), entries(pt, I3[i, j], -scale / dx)]

    def d3_zeta(pt, i, k, scale):
        # at (x_i, cell row k)
        return [entries(pt, I3[i, k + 1], scale / dz), entries(pt, I3[i, k], -scale / dz)]

    # P1: (x_{i+1/2}, face rows 0..nz), compact xi, zeta averaged over the
    # cells above/below that exist
    ii, jj = np.meshgrid(np.arange(nx), np.arange(nz + 1), indexing="ij")
    pt = _idx(nx, nz + 1)
    Dxi = _rows_cols(d3_xi(pt, ii, jj, 1.0), nx * (nz + 1), N)
    ent = []
    nrow = np.where((jj == 0) | (jj == nz), 1.0, 2.0)
    for ci in (ii, ip[ii]):
        for kr in (jj - 1, jj):
            ok = (kr >= 0) & (kr <= nz - 1)
            krc = np.clip(kr, 0, nz - 1)
            sc = np.where(ok, 0.5 / nrow, 0.0)
            ent += d3_zeta(pt, ci, krc, sc)
    Dze = _rows_cols(ent, nx * (nz + 1), N)
    half = np.where((jj == 0) | (jj == nz), 0.5, 1.0)
    forms.append(_family_form(Dxi, Dze, zf[None, :] + 0 * ii, dhf[:, None] + 0 * jj,
                              hf[:, None] + 0 * jj, hf[:, None] * dx * dz * half))
    # P2: cell centres, compact zeta, averaged xi
    ii, kk = np.meshgrid(np.arange(nx), np.arange(nz), indexing="ij")
    pt = _idx(nx, nz)
    Dze = _rows_cols(d3_zeta(pt, ii, kk, 1.0), nx * nz, N)
    ent = []
    for ci in (ii, im[ii]):
        for jr in (kk, kk + 1):
            ent += d3_xi(pt, ci, jr, 0.25)
    Dxi = _rows_cols(ent, nx * nz, N)
    forms.append(_family_form(Dxi, Dze, zc[None, :] + 0 * ii, dh[:, None] + 0 * kk,
                              h[:, None] + 0 * kk, h[:, None] * dx * dz + 0 * kk))

    A = 0.5 * sum(forms)
    A = sp.csr_matrix(0.5 * (A + A.T))

    # ---- divergence at cell centres
    ii, kk = np.meshgrid(np.arange(nx), np.arange(nz), indexing="ij")
    pt = _idx(nx, nz)
    ent = [
        entries(pt, I1[ii, kk], hf[ii] / dx),
        entries(pt, I1[im[ii], kk], -hf[im[ii]] / dx),
    ]
    # vertical flux through face row j of cell column i: v3 - zh_j h'_i avg4(v1)
    for jr, sgn in ((kk + 1, 1.0), (kk, -1.0)):
        interior = (jr >= 1) & (jr <= nz - 1)
        ent.append(entries(pt, np.where(interior, I3[ii, np.clip(jr, 0, nz)], -1), sgn / dz))
        coef = np.where(interior, -sgn * zf[jr] * dh[ii] * 0.25 / dz, 0.0)
        for ci in (ii, im[ii]):
            for kr in (jr - 1, jr):
                ent.append(entries(pt, np.where(interior, I1[ci, np.clip(kr, 0, nz - 1)], -1), coef))
    B = sp.diags(1.0 / np.repeat(h, nz)) @ _rows_cols(ent, nx * nz, N)

    mass_v = np.concatenate([(hf[:, None] * dx * dz * np.ones((1, nz))).ravel(),
                             (h[:, None] * dx * dz * np.ones((1, nz - 1))).ravel()])
    return MacOperators(sp.csr_matrix(A), sp.csr_matrix(B), mass_v, grid.w.ravel(), n1, n3, (nx, nz))


def _split(ops, x):
    nx, nz = ops.shape
    v1 = x[: ops.n1].reshape(nx, nz)
    v3 = np.zeros((nx, nz + 1))
    v3[:, 1:nz] = x[ops.n1:].reshape(nx, nz - 1)
    return v1, v3


def _pack(ops, v1, v3):
    return np.concatenate([np.asarray(v1).ravel(), np.asarray(v3)[:, 1:-1].ravel()])


class _InnerSolver:
    """Repeated solves with the Dirichlet form, AMG-preconditioned CG."""

    def __init__(self, A):
        self.A = A
        self.ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric", max_coarse=50)
        self.M = self.ml.aspreconditioner(cycle="V")
        self.x0 = None

    def solve(self, b):
        nb = np.linalg.norm(b)
        if nb == 0.0:
            return np.zeros_like(b)
        x, info = spla.cg(self.A, b, M=self.M, rtol=INNER_RTOL, atol=0.0, maxiter=500)
        if info != 0:
            res = np.linalg.norm(b - self.A @ x) / nb
            raise NoConvergence("inner Poisson solve stalled", info, res)
        return x


def _mnorm(r, m):
    return math.sqrt(float(np.sum(m * r * r)))


def bogovskii_solve(problem, ops=None):
    """Least-energy ``v`` with ``div v = g`` and zero wall values.

    Uzawa conjugate gradients on ``S p = -g`` with ``S = B A^{-1} B^T M``,
    which is self-adjoint in the cell-volume inner product ``M``.  The CG
    residual is exactly the constraint defect ``B v - g``; iteration stops
    once its ``L^2`` norm is at most ``problem.tolerance``.
    """
    grid = problem.grid
    ops = mac_operators(grid) if ops is None else ops
    g = problem.g.ravel()
    m = ops.mass_p
    nx, nz = grid.shape
    N = ops.n1 + ops.n3
    if _mnorm(g, m) == 0.0:
        return BogovskiiSolution(np.zeros((nx, nz)), np.zeros((nx, nz + 1)), np.zeros(g.size), 0, 0.0)
    inner = _InnerSolver(ops.A)
    BtM = ops.B.T @ sp.diags(m)

    def velocity(p):
        return -inner.solve(BtM @ p)

    p = np.zeros_like(g)
    v = np.zeros(N)
    r = -g.copy()  # f - S p with f = -g, p = 0; equals B v - g
    d = r.copy()
    rr = float(np.sum(m * r * r))
    res = math.sqrt(rr)
    it = 0
    while res > problem.tolerance:
        if it >= problem.max_iterations:
            raise NoConvergence(
                f"Uzawa-CG did not reach {problem.tolerance:g} in {it} iterations",
                it, res,
            )
        wv = velocity(d)
        Sd = -(ops.B @ wv)
        dSd = float(np.sum(m * d * Sd))
        alpha = rr / dSd
        p += alpha * d
        v += alpha * wv
        r -= alpha * Sd
        # keep the residual in the zero-mean subspace
        r -= np.sum(m * r) / np.sum(m)
        rr_new = float(np.sum(m * r * r))
        d = r + (rr_new / rr) * d
        rr = rr_new
        res = math.sqrt(rr)
        it += 1
    # recompute the defect from the final velocity
    res = _mnorm(ops.B @ v - g, m)
    v1, v3 = _split(ops, v)
    return BogovskiiSolution(v1, v3, p.reshape(nx, nz), it, res)


def dirichlet_energy(ops, sol):
    x = _pack(ops, sol.v1, sol.v3)
    return float(x @ (ops.A @ x))


def w12_norm(ops, sol):
    """``||v||_{W^{1,2}}`` of a staggered field with the lumped mass and the Dirichlet form."""
    x = _pack(ops, sol.v1, sol.v3)
    return math.sqrt(float(np.sum(ops.mass_v * x * x) + x @ (ops.A @ x)))


def divergence(ops, sol):
    """Cell-centred divergence of a staggered field, shape ``(nx, nz)``."""
    return (ops.B @ _pack(ops, sol.v1, sol.v3)).reshape(ops.shape)


def dense_kkt_solve(grid, g, ops=None):
    """Reference solution of the same saddle point by one dense factorisation.

    The pressure is pinned to zero mean by a bordering row, which removes the
    constant null vector of ``B^T``.
    """
    ops = mac_operators(grid) if ops is None else ops
    g = np.asarray(g, float).ravel()
    g = g - np.sum(ops.mass_p * g) / np.sum(ops.mass_p)
    A = ops.A.toarray()
    BM = (sp.diags(ops.mass_p) @ ops.B).toarray()
    N, P = A.shape[0], BM.shape[0]
    K = np.zeros((N + P + 1, N + P + 1))
    K[:N, :N] = A
    K[:N, N:N + P] = BM.T
    K[N:N + P, :N] = BM
    K[N:N + P, N + P] = ops.mass_p
    K[N + P, N:N + P] = ops.mass_p
    rhs = np.zeros(N + P + 1)
    rhs[N:N + P] = ops.mass_p * g
    sol = np.linalg.solve(K, rhs)
    v1, v3 = _split(ops, sol[:N])
    return BogovskiiSolution(v1, v3, sol[N:N + P].reshape(grid.shape), 0,
                             _mnorm(ops.B @ sol[:N] - g, ops.mass_p))


def g_family(grid):
    """Smooth zero-mean test densities as functions of ``(x, zh)``, keyed by id."""
    x = grid.x[:, None] * np.ones((1, grid.nz))
    zh = grid.zeta[None, :] * np.ones((grid.nx, 1))
    fam = {
        "s1s1": np.sin(2 * np.pi * x) * np.sin(np.pi * zh),
        "c1s2": np.cos(2 * np.pi * x) * np.sin(2 * np.pi * zh),
        "s2c1": np.sin(4 * np.pi * x) * np.cos(np.pi * zh),
        "c0c1": np.cos(np.pi * zh),
    }
    return {k: v - integrate(grid, v) / grid.volume for k, v in fam.items()}


@dataclass(frozen=True)
class NormRow:
    epsilon: float
    g_id: str
    norm_ratio: float
    iterations: int
    residual: float


def bogovskii_norm_sweep(profile, epsilon_list, cells_per_period=16, nz=32,
                         tolerance=1e-8, max_iterations=1000, family=g_family):
    """``N(eps) = max_g ||v||_{W^{1,2}} / ||g||_{L^2}`` at matched per-period resolution.

    Returns ``(rows, N)`` where ``rows`` has one :class:`NormRow` per
    ``(eps, g)`` pair and ``N`` maps each ``eps`` to the maximum ratio.
    """
    from .geometry import DomainSpec

    rows, N = [], {}
    for eps in epsilon_list:
        spec = DomainSpec(eps, profile)
        grid = build_grid(spec, int(round(cells_per_period / spec.epsilon)), nz)
        ops = mac_operators(grid)
        best = 0.0
        for gid, g in family(grid).items():
            prob = BogovskiiProblem(grid, g, tolerance, max_iterations)
            sol = bogovskii_solve(prob, ops)
            ratio = w12_norm(ops, sol) / math.sqrt(float(integrate(grid, prob.g**2)))
            rows.append(NormRow(spec.epsilon, gid, ratio, sol.iterations, sol.residual))
            best = max(best, ratio)
        N[spec.epsilon] = best
    return rows, N
