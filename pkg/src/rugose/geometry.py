"""Rough-boundary profiles and the oscillating channel geometry.

The channel is ``0 < x3 < 1 + eps * Phi(x1/eps, x2/eps)`` over the unit torus,
where ``Phi`` is positive and 1-periodic in both tangential variables.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import NonPositiveProfile

TWO_PI = 2.0 * np.pi

# eigenvalues below RANK_TOL * trace count as zero in the gradient moment matrix
RANK_TOL = 1e-8
FD_STEP = 1e-6
# analytic profiles may touch zero at isolated points (c0 = |c1| + |c2|)
CONTACT_TOL = 1e-12


class ProfileKind(enum.Enum):
    FLAT = "flat"
    RIBLET = "riblet"
    EGGCARTON = "eggcarton"
    TABULATED = "tabulated"


class Mode(enum.Enum):
    PLANAR25D = "planar25d"
    FULL3D = "full3d"


class Status(enum.Enum):
    NON_DEGENERATE = "NonDegenerate"
    DEGENERATE_DIRECTION = "DegenerateDirection"
    CONSTANT = "Constant"


@dataclass(frozen=True, eq=False)
class RoughProfile:
    """Periodic unit-cell shape ``Phi``.

    Use :func:`make_profile` to build one; it checks positivity and fills in
    the sampled Lipschitz constant.
    """

    kind: ProfileKind
    c0: float
    c1: float = 0.0
    c2: float = 0.0
    table: np.ndarray | None = None
    lipschitz: float = float("nan")
    _coeffs: np.ndarray | None = field(default=None, repr=False)

    def phi(self, y1, y2=0.0):
        y1, y2 = np.broadcast_arrays(np.asarray(y1, float), np.asarray(y2, float))
        if self.kind is ProfileKind.TABULATED:
            return self._interp(y1, y2)
        out = np.full(y1.shape, self.c0, dtype=float)
        if self.kind in (ProfileKind.RIBLET, ProfileKind.EGGCARTON):
            out = out + self.c1 * np.sin(TWO_PI * y1)
        if self.kind is ProfileKind.EGGCARTON:
            out = out + self.c2 * np.sin(TWO_PI * y2)
        return out

    def grad(self, y1, y2=0.0):
        """Return ``(dPhi/dy1, dPhi/dy2)`` as two arrays."""
        y1, y2 = np.broadcast_arrays(np.asarray(y1, float), np.asarray(y2, float))
        if self.kind is ProfileKind.TABULATED:
            d = FD_STEP
            g1 = (self._interp(y1 + d, y2) - self._interp(y1 - d, y2)) / (2 * d)
            g2 = (self._interp(y1, y2 + d) - self._interp(y1, y2 - d)) / (2 * d)
            return g1, g2
        g1 = np.zeros(y1.shape)
        g2 = np.zeros(y1.shape)
        if self.kind in (ProfileKind.RIBLET, ProfileKind.EGGCARTON):
            g1 = TWO_PI * self.c1 * np.cos(TWO_PI * y1)
        if self.kind is ProfileKind.EGGCARTON:
            g2 = TWO_PI * self.c2 * np.cos(TWO_PI * y2)
        return g1, g2

    def _interp(self, y1, y2):
        n1, n2 = self._coeffs.shape
        coords = np.stack([np.mod(y1, 1.0).ravel() * n1, np.mod(y2, 1.0).ravel() * n2])
        vals = ndimage.map_coordinates(
            self._coeffs, coords, order=3, mode="grid-wrap", prefilter=False
        )
        return vals.reshape(y1.shape)


def _sample_cell(n):
    y = np.arange(n) / n
    return np.meshgrid(y, y, indexing="ij")


def make_profile(kind, c0=1.0, c1=0.0, c2=0.0, table=None, n_check=256):
    """Build a :class:`RoughProfile` and verify it is positive.

    Analytic kinds are ``c0`` (flat), ``c0 + c1 sin(2 pi y1)`` (riblet) and
    ``c0 + c1 sin(2 pi y1) + c2 sin(2 pi y2)`` (egg carton).  A tabulated
    profile takes samples on the nodes ``j/n`` of the unit cell (a 1-D table
    is treated as invariant in ``y2``) and is interpolated by periodic cubic
    splines.

    Analytic kinds need ``c0 >= |c1| + |c2|``.  The equality case, e.g. the
    egg carton ``(1, 0.5, 0.5)``, touches zero only at isolated points, where
    the channel height still equals 1; the planar ``y2 = 0`` slice stays
    strictly positive.  Tabulated profiles must be strictly positive.
    """
    kind = ProfileKind(kind) if not isinstance(kind, ProfileKind) else kind
    coeffs = None
    if kind is ProfileKind.TABULATED:
        if table is None:
            raise ValueError("tabulated profile needs a table")
        table = np.array(table, dtype=float)
        if table.ndim == 1:
            table = table[:, None]
        coeffs = ndimage.spline_filter(table, order=3, mode="grid-wrap")
        c0 = float(table.mean())
        c1 = c2 = 0.0
    else:
        c0, c1, c2 = float(c0), float(c1), float(c2)
        if kind is ProfileKind.FLAT:
            c1 = c2 = 0.0
        elif kind is ProfileKind.RIBLET:
            c2 = 0.0
        if not c0 > 0.0 or c0 < abs(c1) + abs(c2):
            raise NonPositiveProfile(
                f"need c0 >= |c1| + |c2| and c0 > 0, got {c0}, {c1}, {c2}"
            )
    prof = RoughProfile(kind, c0, c1, c2, table=table, _coeffs=coeffs)
    y1, y2 = _sample_cell(n_check)
    if kind is ProfileKind.TABULATED and prof.phi(y1 + 0.5 / n_check, y2 + 0.5 / n_check).min() <= 0:
        raise NonPositiveProfile("tabulated profile is not strictly positive")
    if prof.phi(y1, y2).min() < -CONTACT_TOL:
        raise NonPositiveProfile("profile takes negative values")
    g1, g2 = prof.grad(y1, y2)
    lip = float(np.sqrt(g1**2 + g2**2).max())
    object.__setattr__(prof, "lipschitz", lip)
    return prof


def profile_from_dict(d):
    """Build a profile from its JSON form, e.g. ``{"kind": "riblet", "c0": 1, "c1": 0.5}``."""
    d = dict(d)
    kind = d.pop("kind")
    return make_profile(kind, **d)


@dataclass(frozen=True, eq=False)
class DomainSpec:
    epsilon: float
    profile: RoughProfile
    mode: Mode = Mode.PLANAR25D

    def __post_init__(self):
        eps = float(self.epsilon)
        if not 0.0 < eps <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {eps}")
        k = 1.0 / eps
        if abs(k - round(k)) > 1e-9 * k:
            raise ValueError(f"epsilon must be the reciprocal of an integer, got {eps}")
        object.__setattr__(self, "epsilon", 1.0 / round(k))
        if not isinstance(self.mode, Mode):
            object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def periods(self):
        """Number of roughness periods across the unit cell."""
        return int(round(1.0 / self.epsilon))

    def _tangential(self, x1, x2):
        if self.mode is Mode.PLANAR25D:
            x2 = 0.0
        return np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))


def eval_height(spec, x1, x2=0.0):
    """Channel height ``1 + Phi_eps(x)``; in planar mode the ``x2 = 0`` slice is used."""
    x1, x2 = spec._tangential(x1, x2)
    eps = spec.epsilon
    return 1.0 + eps * spec.profile.phi(x1 / eps, x2 / eps)


def height_gradient(spec, x1, x2=0.0):
    """Tangential gradient of ``Phi_eps``; independent of eps by the chain rule."""
    x1, x2 = spec._tangential(x1, x2)
    eps = spec.epsilon
    g1, g2 = spec.profile.grad(x1 / eps, x2 / eps)
    if spec.mode is Mode.PLANAR25D:
        g2 = np.zeros_like(g1)
    return g1, g2


def boundary_normal(spec, x1, x2=0.0):
    """Unit outer normal on the rough top, stacked along the last axis."""
    g1, g2 = height_gradient(spec, x1, x2)
    n = np.stack([-g1, -g2, np.ones_like(g1)], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


@dataclass(frozen=True)
class RugosityMoments:
    mean_gradient: np.ndarray
    second_moment: np.ndarray
    rank: int


def _moment_rank(m2):
    tr = float(np.trace(m2))
    if tr <= 0.0:
        return 0, np.linalg.eigh(m2)
    w, v = np.linalg.eigh(m2)
    return int(np.sum(w > RANK_TOL * tr)), (w, v)


def _moments_on_cell(grad_fn, n_samples):
    y1, y2 = _sample_cell(n_samples)
    g1, g2 = grad_fn(y1, y2)
    g = np.stack([g1.ravel(), g2.ravel()])
    mean = g.mean(axis=1)
    m2 = g @ g.T / g.shape[1]
    rank, _ = _moment_rank(m2)
    return RugosityMoments(mean, m2, rank)


def rugosity_moments(spec, n_samples=128):
    """Empirical first and second moments of the boundary-gradient distribution.

    One roughness period of ``Phi`` is sampled on a uniform ``n_samples``
    square lattice; for ``eps = 1/k`` this is the same distribution as
    ``grad Phi_eps`` over the whole torus.  In planar mode the gradient of the
    ``x2 = 0`` slice is used, since that is the boundary the fields see.
    """
    if n_samples < 64:
        raise ValueError("need at least 64 samples per period")
    prof = spec.profile

    def grad_fn(y1, y2):
        if spec.mode is Mode.PLANAR25D:
            g1, _ = prof.grad(y1, np.zeros_like(y2))
            return g1, np.zeros_like(g1)
        return prof.grad(y1, y2)

    return _moments_on_cell(grad_fn, n_samples)


@dataclass(frozen=True)
class Nondegeneracy:
    status: Status
    direction: tuple | None = None


def nondegeneracy_check(profile, n_samples=128):
    """Classify a profile by the rank of its gradient second-moment matrix.

    Rank 2 means the boundary varies in every direction; rank 1 means it is
    invariant along ``direction`` (a riblet); rank 0 means constant.
    """
    mom = _moments_on_cell(profile.grad, n_samples)
    if mom.rank == 2:
        return Nondegeneracy(Status.NON_DEGENERATE)
    if mom.rank == 0:
        return Nondegeneracy(Status.CONSTANT)
    w, v = np.linalg.eigh(mom.second_moment)
    d = v[:, 0]
    if d[np.argmax(np.abs(d))] < 0:
        d = -d
    d = np.where(np.abs(d) < 1e-12, 0.0, d)
    return Nondegeneracy(Status.DEGENERATE_DIRECTION, (float(d[0]), float(d[1])))


def normals_moment_rank(profile, n_samples=64):
    """Rank of the averaged ``n n^T`` over one period of the 2-D profile."""
    y1, y2 = _sample_cell(n_samples)
    g1, g2 = profile.grad(y1, y2)
    n = np.stack([-g1.ravel(), -g2.ravel(), np.ones(g1.size)])
    n /= np.linalg.norm(n, axis=0)
    m = n @ n.T / n.shape[1]
    w = np.linalg.eigvalsh(m)
    return int(np.sum(w > RANK_TOL * w.sum()))
