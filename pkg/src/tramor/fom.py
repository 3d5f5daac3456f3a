"""Full-order finite-difference models, snapshot sets and error measures."""

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
import scipy.sparse as sp

from . import integrators as itg
from .numerics import (
    BOUNDED,
    PERIODIC,
    PERIODIC_SHIFT,
    DimensionError,
    DiffOp,
    Grid,
    TransformFamily,
    apply_diff,
    inner_product,
)

ADVECTION = "advection"
ADVECTION_DIFFUSION = "advection_diffusion"
ADVECTION_DIFFUSION_DN = "advection_diffusion_dirichlet_neumann"
LINEAR_WAVE = "linear_wave"
BURGERS = "burgers"
MODEL_KINDS = (ADVECTION, ADVECTION_DIFFUSION, ADVECTION_DIFFUSION_DN, LINEAR_WAVE, BURGERS)

# models whose right-hand side commutes with the periodic shift
EQUIVARIANT_KINDS = (ADVECTION, ADVECTION_DIFFUSION, BURGERS)


def gaussian(xi, center=0.5, width=0.1, amplitude=1.0, sign=-1.0):
    """``amplitude * exp(sign * ((xi - center) / width)^2)``."""
    return amplitude * np.exp(sign * ((np.asarray(xi) - center) / width) ** 2)


def inflow_pulse(t):
    """Dirichlet data ``0.5 exp(-((t - 0.2)/0.03)^2)`` at the left boundary."""
    return 0.5 * math.exp(-(((t - 0.2) / 0.03) ** 2))


def inflow_pulse_dt(t):
    s = (t - 0.2) / 0.03
    return -0.5 * math.exp(-(s**2)) * 2.0 * s / 0.03


@dataclass(frozen=True, eq=False)
class FomModel:
    """Semi-discrete transport model ``dz/dt = F(t, z)``.

    ``initial_condition`` has shape ``(components, n)``. The Dirichlet-Neumann
    model needs ``boundary_data`` (and its time derivative) for the inflow.
    """

    kind: str
    grid: Grid
    initial_condition: np.ndarray
    c: float = 1.0
    mu: float = 0.0
    boundary_data: object = None
    boundary_data_dt: object = None
    tag: str = ""

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        ic = np.atleast_2d(np.asarray(self.initial_condition, dtype=float))
        object.__setattr__(self, "initial_condition", ic)
        if ic.shape != (self.components, self.grid.n):
            raise DimensionError(
                f"initial condition has shape {ic.shape}, expected {(self.components, self.grid.n)}"
            )
        if self.kind == ADVECTION_DIFFUSION_DN:
            if self.grid.periodic:
                raise ValueError("Dirichlet-Neumann model needs a bounded grid")
            if self.boundary_data is None:
                object.__setattr__(self, "boundary_data", inflow_pulse)
                object.__setattr__(self, "boundary_data_dt", inflow_pulse_dt)
        elif not self.grid.periodic:
            raise ValueError(f"{self.kind} needs a periodic grid")
        if self.kind == ADVECTION and self.mu != 0.0:
            raise ValueError("pure advection has mu = 0")
        if not self.tag:
            object.__setattr__(self, "tag", self.kind)

    @property
    def components(self):
        return 2 if self.kind == LINEAR_WAVE else 1

    @property
    def dim(self):
        return self.components * self.grid.n

    @property
    def equivariant(self):
        return self.kind in EQUIVARIANT_KINDS

    @property
    def linear(self):
        return self.kind != BURGERS

    @cached_property
    def d1(self):
        return DiffOp("D1_6th", self.grid) if self.grid.periodic else None

    @cached_property
    def d2(self):
        return DiffOp("D2_6th", self.grid) if self.grid.periodic else None

    @cached_property
    def _bounded_ops(self):
        """Advection and diffusion matrices of the Dirichlet-Neumann model.

        Row 0 is zero (the boundary node follows the inflow data); the last
        row mirrors a ghost node so the Neumann condition holds.
        """
        n, h = self.grid.n, self.grid.dxi
        main = np.zeros(n)
        up = np.zeros(n - 1)
        lo = np.zeros(n - 1)
        up[1:] = 0.5 / h
        lo[:-1] = -0.5 / h
        adv = sp.diags([lo, main, up], [-1, 0, 1], format="lil")
        adv[n - 1, n - 2] = 0.0
        dmain = np.full(n, -2.0 / h**2)
        dmain[0] = 0.0
        dup = np.full(n - 1, 1.0 / h**2)
        dup[0] = 0.0
        dlo = np.full(n - 1, 1.0 / h**2)
        dlo[-1] = 2.0 / h**2
        dif = sp.diags([dlo, dmain, dup], [-1, 0, 1], format="csr")
        return adv.tocsr(), dif

    @cached_property
    def separable_parts(self):
        """Sparse matrices ``(A, B)`` with linear part ``-c A + mu B`` (scalar field)."""
        if self.kind == ADVECTION_DIFFUSION_DN:
            return self._bounded_ops
        return self.d1.matrix, self.d2.matrix

    @cached_property
    def linear_matrix(self):
        """Sparse Jacobian of the linear models."""
        if self.kind == LINEAR_WAVE:
            d1 = self.d1.matrix
            return sp.bmat([[None, -d1], [-d1, None]], format="csr")
        a, b = self.separable_parts
        return (-self.c * a + self.mu * b).tocsr()

    def rhs(self, t, z):
        """Right-hand side on a grid function of shape ``(components, n)``."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.components, self.grid.n):
            raise DimensionError(f"state has shape {z.shape}, expected {(self.components, self.grid.n)}")
        if self.kind == LINEAR_WAVE:
            dz = apply_diff(self.d1, z)
            return -dz[::-1]
        if self.kind == ADVECTION_DIFFUSION_DN:
            out = (self.linear_matrix @ z[0])[None]
            out[0, 0] = self.boundary_data_dt(t)
            return out
        dz = apply_diff(self.d1, z)
        if self.kind == BURGERS:
            return self.mu * apply_diff(self.d2, z) - z * dz
        out = -self.c * dz
        if self.mu:
            out = out + self.mu * apply_diff(self.d2, z)
        return out

    def rhs_flat(self, t, y):
        return self.rhs(t, y.reshape(self.components, self.grid.n)).ravel()

    def jacobian(self, t, y):
        if self.linear:
            return self.linear_matrix
        d1 = self.d1.matrix
        dz = d1 @ y
        return (self.mu * self.d2.matrix - sp.diags(dz) - sp.diags(y) @ d1).tocsc()

    def post_step(self, t, y):
        if self.kind != ADVECTION_DIFFUSION_DN:
            return y
        y = y.copy()
        y[0] = self.boundary_data(t)
        return y

    def with_params(self, c=None, mu=None):
        return FomModel(
            self.kind,
            self.grid,
            self.initial_condition,
            c=self.c if c is None else c,
            mu=self.mu if mu is None else mu,
            boundary_data=self.boundary_data,
            boundary_data_dt=self.boundary_data_dt,
            tag=self.tag,
        )


def eval_rhs(model, t, z):
    return model.rhs(t, z)


@dataclass
class SnapshotSet:
    """Sampled trajectory; ``data`` has shape ``(components, n, m)``."""

    grid: Grid
    times: np.ndarray
    data: np.ndarray
    model_tag: str = ""
    n_steps: int | None = None
    n_rejected: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim == 2:
            self.data = self.data[None]
        if self.data.shape[1] != self.grid.n or self.data.shape[2] != self.times.size:
            raise DimensionError(f"data shape {self.data.shape} does not match grid/times")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")

    @property
    def components(self):
        return self.data.shape[0]

    @property
    def m(self):
        return self.times.size

    @property
    def tau(self):
        return float(self.times[1] - self.times[0]) if self.m > 1 else 0.0

    def state(self, k):
        """Grid function at ``times[k]``, shape ``(components, n)``."""
        return self.data[:, :, k]

    @property
    def states(self):
        """View with shape ``(m, components, n)``."""
        return np.moveaxis(self.data, 2, 0)

    @classmethod
    def from_states(cls, grid, times, states, model_tag="", **kw):
        states = np.asarray(states, dtype=float)
        if states.ndim == 2:
            states = states[:, None, :]
        return cls(grid, times, np.ascontiguousarray(np.moveaxis(states, 0, 2)), model_tag, **kw)


def integrate_fom(model, spec, t_end, t0=0.0, times=None):
    """Simulate ``model`` from its initial condition.

    Fixed-step runs sample every ``tau``; adaptive runs use dense output at
    ``times`` (default: the ``tau`` grid) and record accepted step counts.
    """
    if times is None:
        n_out = int(round((t_end - t0) / spec.tau))
        times = t0 + spec.tau * np.arange(n_out + 1)
    y0 = model.initial_condition.ravel()
    jac = model.linear_matrix if model.linear else model.jacobian
    sol = itg.integrate(
        model.rhs_flat, y0, t0, t_end, spec, jac=jac, t_eval=times, post_step=model.post_step
    )
    return SnapshotSet.from_states(
        model.grid,
        sol.times,
        sol.ys.reshape(-1, model.components, model.grid.n),
        model.tag,
        n_steps=sol.n_accepted,
        n_rejected=sol.n_rejected,
    )


def analytic_wave_snapshots(rho0, grid, times):
    """``[rho; v](t) = [1; 1] q(xi - t) + [1; -1] q(xi + t)`` with ``q = rho0 / 2``."""
    rho0 = np.asarray(rho0, dtype=float).reshape(grid.n)
    fam = TransformFamily(PERIODIC_SHIFT, grid)
    q = 0.5 * rho0
    states = np.empty((len(times), 2, grid.n))
    for k, t in enumerate(times):
        right = fam.apply(t, q)
        left = fam.apply(-t, q)
        states[k, 0] = right + left
        states[k, 1] = right - left
    return SnapshotSet.from_states(grid, times, states, LINEAR_WAVE)


def _time_trapezoid(values, times):
    if len(times) == 1:
        return float(values[0])
    return float(np.trapezoid(values, times) if hasattr(np, "trapezoid") else np.trapz(values, times))


def l2_norm_time(snap):
    w = snap.grid.weights
    sq = np.einsum("cnm,n->m", snap.data**2, w)
    return math.sqrt(max(_time_trapezoid(sq, snap.times), 0.0))


def relative_error(truth, approx):
    """``||truth - approx|| / ||truth||`` in the discrete L2(0, T; X) norm."""
    if truth.data.shape != approx.data.shape or not np.allclose(truth.times, approx.times, rtol=0, atol=1e-12):
        raise DimensionError("snapshot sets are sampled differently")
    diff = SnapshotSet(truth.grid, truth.times, truth.data - approx.data)
    den = l2_norm_time(truth)
    if den == 0.0:
        raise ZeroDivisionError("truth trajectory has zero norm")
    return l2_norm_time(diff) / den


def relative_error_curve(truth, approx):
    """Pointwise-in-time relative error ``||e(t)|| / ||z(t)||``."""
    w = truth.grid.weights
    num = np.einsum("cnm,n->m", (truth.data - approx.data) ** 2, w)
    den = np.einsum("cnm,n->m", truth.data**2, w)
    return np.sqrt(num / np.where(den > 0, den, 1.0))


# model factories -----------------------------------------------------------------


def periodic_grid(n=200):
    return Grid(n=n, topology=PERIODIC)


def advection_diffusion(c=1.0, mu=0.002, n=200, center=0.5, width=0.1):
    grid = periodic_grid(n)
    ic = gaussian(grid.nodes, center, width)[None]
    kind = ADVECTION if mu == 0.0 else ADVECTION_DIFFUSION
    return FomModel(kind, grid, ic, c=c, mu=mu)


def burgers(mu=2e-3, n=200, center=0.5, width=0.1, sign=-1.0):
    grid = periodic_grid(n)
    return FomModel(BURGERS, grid, gaussian(grid.nodes, center, width, sign=sign)[None], mu=mu)


def linear_wave(n=200, center=0.5, width=0.1):
    grid = periodic_grid(n)
    ic = np.vstack([gaussian(grid.nodes, center, width), np.zeros(n)])
    return FomModel(LINEAR_WAVE, grid, ic)


def advection_diffusion_dn(dxi=1.25e-3, c=1.0, mu=1e-3, length=1.0):
    n = int(round(length / dxi)) + 1
    grid = Grid(n=n, xi0=0.0, length=length, topology=BOUNDED)
    ic = gaussian(grid.nodes, 0.5, 0.02, amplitude=0.5)[None]
    ic[0, 0] = inflow_pulse(0.0)
    return FomModel(ADVECTION_DIFFUSION_DN, grid, ic, c=c, mu=mu)
