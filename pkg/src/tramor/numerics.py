"""Grids, discrete inner products, finite differences and shift operators.

Grid functions are plain ndarrays whose last axis runs over the grid nodes.
A vector-valued field with ``c`` components has shape ``(c, n)``; a stack of
``r`` modes has shape ``(r, c, n)``.
"""

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
import scipy.sparse as sp

from . import kernels

PERIODIC = "periodic"
BOUNDED = "bounded"

# central stencils, coefficients for offsets -3..3 (scaled by 1/dxi^k)
D1_6TH = np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60])
D2_6TH = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
D1_2ND = np.array([-0.5, 0.0, 0.5])
D2_2ND = np.array([1.0, -2.0, 1.0])

_STENCILS = {"D1_6th": (D1_6TH, 1), "D2_6th": (D2_6TH, 2), "D1_2nd": (D1_2ND, 1), "D2_2nd": (D2_2ND, 2)}

# lattice snapping: shifts closer than this (in cells) to an integer are exact rolls
_LATTICE_TOL = 1e-9


class DimensionError(ValueError):
    pass


class DomainExceededError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Equidistant 1-D grid.

    Periodic grids hold ``n`` nodes ``xi0 + k*length/n`` and exclude the
    duplicated right endpoint; bounded grids include both endpoints.
    """

    n: int
    xi0: float = 0.0
    length: float = 1.0
    topology: str = PERIODIC

    def __post_init__(self):
        if self.topology not in (PERIODIC, BOUNDED):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.n < 8:
            raise ValueError(f"grid needs at least 8 nodes, got {self.n}")
        if not self.length > 0:
            raise ValueError("grid length must be positive")

    @property
    def periodic(self):
        return self.topology == PERIODIC

    @property
    def dxi(self):
        return self.length / self.n if self.periodic else self.length / (self.n - 1)

    @cached_property
    def nodes(self):
        return self.xi0 + self.dxi * np.arange(self.n)

    @cached_property
    def weights(self):
        """Quadrature weights: dxi everywhere, halved at bounded endpoints."""
        w = np.full(self.n, self.dxi)
        if not self.periodic:
            w[0] *= 0.5
            w[-1] *= 0.5
        return w


def _check_same(u, v, grid):
    if u.shape != v.shape:
        raise DimensionError(f"shape mismatch {u.shape} vs {v.shape}")
    if u.shape[-1] != grid.n:
        raise DimensionError(f"field has {u.shape[-1]} nodes, grid has {grid.n}")


def inner_product(u, v, grid):
    """Discrete L2 inner product summed over all components."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_same(u, v, grid)
    return float(np.sum(u * v * grid.weights))


def norm(u, grid):
    return math.sqrt(max(inner_product(u, u, grid), 0.0))


def gram(a, b, grid):
    """Matrix of inner products ``<a_i, b_j>`` for stacks ``a`` (r, ...) and ``b`` (s, ...)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[1:] != b.shape[1:] or a.shape[-1] != grid.n:
        raise DimensionError(f"cannot pair stacks of shape {a.shape} and {b.shape}")
    aw = (a * grid.weights).reshape(a.shape[0], -1)
    return aw @ b.reshape(b.shape[0], -1).T


def project(a, f, grid):
    """Vector ``<a_i, f>`` for a stack ``a`` and a single field ``f``."""
    return gram(a, f[None], grid)[:, 0]


@dataclass(frozen=True)
class DiffOp:
    """Finite-difference derivative on a grid.

    ``order`` is one of ``D1_6th``, ``D2_6th``, ``D1_2nd``, ``D2_2nd``.
    Periodic grids use the circulant stencil; bounded grids use one-sided
    second-order closures and only support the second-order operators.
    """

    order: str
    grid: Grid

    def __post_init__(self):
        if self.order not in _STENCILS:
            raise ValueError(f"unknown difference operator {self.order!r}")
        if not self.grid.periodic and not self.order.endswith("2nd"):
            raise ValueError("bounded grids support only second-order operators")

    @property
    def derivative(self):
        return _STENCILS[self.order][1]

    @cached_property
    def coeffs(self):
        stencil, k = _STENCILS[self.order]
        return np.ascontiguousarray(stencil / self.grid.dxi**k)

    @cached_property
    def matrix(self):
        """Sparse CSR matrix of the operator (scalar field)."""
        n = self.grid.n
        c = self.coeffs
        half = len(c) // 2
        if self.grid.periodic:
            rows, cols, vals = [], [], []
            for d, a in enumerate(c):
                if a == 0.0:
                    continue
                idx = np.arange(n)
                rows.append(idx)
                cols.append((idx + d - half) % n)
                vals.append(np.full(n, a))
            return sp.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
            )
        h = self.grid.dxi
        m = sp.lil_matrix((n, n))
        for j in range(1, n - 1):
            for d, a in enumerate(c):
                if a != 0.0:
                    m[j, j + d - half] = a
        if self.derivative == 1:
            m[0, :3] = np.array([-3.0, 4.0, -1.0]) / (2 * h)
            m[n - 1, n - 3 :] = np.array([1.0, -4.0, 3.0]) / (2 * h)
        else:
            m[0, :4] = np.array([2.0, -5.0, 4.0, -1.0]) / h**2
            m[n - 1, n - 4 :] = np.array([-1.0, 4.0, -5.0, 2.0]) / h**2
        return m.tocsr()

    def __call__(self, u):
        return apply_diff(self, u)


def apply_diff(op, u):
    """Apply ``op`` componentwise along the last axis of ``u``."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != op.grid.n:
        raise DimensionError(f"field has {u.shape[-1]} nodes, operator expects {op.grid.n}")
    flat = u.reshape(-1, op.grid.n)
    if op.grid.periodic:
        out = kernels.periodic_stencil(flat, op.coeffs)
    else:
        out = (op.matrix @ flat.T).T
    return out.reshape(u.shape)


def _snap(s):
    r = round(s)
    return float(r) if abs(s - r) < _LATTICE_TOL else s


IDENTITY = "identity"
PERIODIC_SHIFT = "periodic_shift"
VIRTUAL_SHIFT = "virtual_shift"


@dataclass(frozen=True, eq=False)
class TransformFamily:
    """Parametrized family of shift operators acting on grid functions.

    ``periodic_shift`` samples ``phi(xi - eta)`` with periodic wrapping.
    ``virtual_shift`` stores modes on ``virtual_grid`` (same mesh width,
    larger hull) and restricts the shifted mode to ``grid``.
    ``identity`` ignores the parameter.
    Off-lattice values come from cubic Lagrange interpolation on the two
    nodes on either side of the evaluation point.
    """

    kind: str
    grid: Grid
    virtual_grid: Grid | None = None
    diff_order: str = "D1_6th"
    param_dim: int = field(default=1)

    def __post_init__(self):
        if self.kind not in (IDENTITY, PERIODIC_SHIFT, VIRTUAL_SHIFT):
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.kind == PERIODIC_SHIFT and not self.grid.periodic:
            raise ValueError("periodic shift needs a periodic grid")
        if self.kind == VIRTUAL_SHIFT:
            vg = self.virtual_grid
            if vg is None:
                raise ValueError("virtual shift needs a virtual grid")
            if not math.isclose(vg.dxi, self.grid.dxi, rel_tol=1e-12):
                raise ValueError("virtual grid must share the physical mesh width")
            off = (self.grid.xi0 - vg.xi0) / vg.dxi
            if abs(off - round(off)) > 1e-8:
                raise ValueError("virtual grid nodes must align with the physical grid")
        if self.kind == IDENTITY:
            object.__setattr__(self, "param_dim", 0)

    @property
    def isometric(self):
        return self.kind in (IDENTITY, PERIODIC_SHIFT)

    @property
    def mode_grid(self):
        """Grid on which the modes of this family are stored."""
        return self.virtual_grid if self.kind == VIRTUAL_SHIFT else self.grid

    @cached_property
    def dop(self):
        order = self.diff_order
        if not self.mode_grid.periodic and order.endswith("6th"):
            order = "D1_2nd"
        return DiffOp(order, self.mode_grid)

    @cached_property
    def _offset(self):
        if self.kind != VIRTUAL_SHIFT:
            return 0
        return int(round((self.grid.xi0 - self.virtual_grid.xi0) / self.grid.dxi))

    def apply(self, eta, phi):
        eta = float(np.ravel(eta)[0]) if np.ndim(eta) else float(eta)
        phi = np.asarray(phi, dtype=float)
        if self.kind == IDENTITY:
            return phi.copy()
        mg = self.mode_grid
        if phi.shape[-1] != mg.n:
            raise DimensionError(f"mode has {phi.shape[-1]} nodes, family expects {mg.n}")
        lead = phi.shape[:-1]
        flat = phi.reshape(-1, mg.n)
        s = _snap(eta / mg.dxi)
        if self.kind == PERIODIC_SHIFT:
            if s == 0.0:
                return phi.copy()
            if s == math.floor(s):
                out = np.roll(flat, int(s), axis=-1)
            else:
                k = math.floor(s)
                out = kernels.periodic_shift(flat, -k - 2, kernels.lagrange_weights(2.0 - (s - k)))
            return out.reshape(phi.shape)
        pos = self._offset + np.arange(self.grid.n) - s
        lo, hi = pos[0], pos[-1]
        if lo < -1e-12 or hi > mg.n - 1 + 1e-12:
            raise DomainExceededError(
                f"shift eta={eta:.6g} evaluates outside the virtual domain "
                f"[{mg.xi0:.6g}, {mg.xi0 + (mg.n - 1) * mg.dxi:.6g}]"
            )
        if s == math.floor(s):
            idx = self._offset + np.arange(self.grid.n) - int(s)
            out = flat[:, idx]
        else:
            out = kernels.interp_positions(flat, pos)
        return out.reshape(lead + (self.grid.n,))

    def derivative(self, eta, phi):
        """Derivative of ``eta -> T(eta) phi``, i.e. ``-d/dxi phi(. - eta)``."""
        phi = np.asarray(phi, dtype=float)
        if self.kind == IDENTITY:
            return np.zeros_like(phi)
        if self.kind == PERIODIC_SHIFT:
            return -apply_diff(self.dop, self.apply(eta, phi))
        return -self.apply(eta, apply_diff(self.dop, phi))


def transform(fam, eta, phi):
    return fam.apply(eta, phi)


def transform_derivative(fam, eta, phi):
    return fam.derivative(eta, phi)


def virtual_grid_for(grid, path, margin=3):
    """Bounded grid with the mesh width of ``grid`` covering ``{xi - p(t)}`` plus a stencil margin."""
    path = np.asarray(path, dtype=float)
    h = grid.dxi
    left = math.ceil(max(path.max(), 0.0) / h - 1e-9) + margin
    right = math.ceil(max(-path.min(), 0.0) / h - 1e-9) + margin
    n = grid.n + left + right
    return Grid(n=n, xi0=grid.xi0 - left * h, length=(n - 1) * h, topology=BOUNDED)
