"""Reduced-order models with transformed modes.

The reduced state is ``(alpha, p)``: mode coefficients and one path value
per transformed frame. The approximation is
``z ~ sum_i alpha_i T_{f(i)}(p_{f(i)}) phi_i``. Velocities minimize the
full-space residual; the path rows of the normal equations are scaled by
``D(alpha)`` so that several modes can share one path.
"""

from dataclasses import dataclass, field
import logging
import math

import numpy as np
import scipy.linalg as sla

from . import integrators as itg
from .fom import ADVECTION, ADVECTION_DIFFUSION, BURGERS, SnapshotSet
from .numerics import IDENTITY, PERIODIC_SHIFT, DimensionError, apply_diff, gram, inner_product, norm, project

logger = logging.getLogger(__name__)

RESIDUAL = "residual"
FREEZE = "freeze"
FREEZE_REDUCED = "freeze_reduced"
PHASES = (RESIDUAL, FREEZE, FREEZE_REDUCED)

_SINGULAR_RATIO = 1e-12
_PERSISTENT_DEGENERACY = 50


class DegenerateMassError(RuntimeError):
    """The scaled mass matrix is singular (e.g. a coefficient crossed zero)."""

    def __init__(self, p, smin, persistent=False):
        msg = f"degenerate reduced mass matrix at p={np.array2string(np.asarray(p), precision=6)} (smallest singular value {smin:.3e})"
        if persistent:
            msg += "; the degeneracy persists, restart the computation with a new decomposition or enable regularization"
        else:
            msg += "; consider a positive regularization"
        super().__init__(msg)
        self.p = np.asarray(p)
        self.smin = smin


class UnsupportedConfigurationError(ValueError):
    pass


@dataclass
class RomFrame:
    transform: object
    modes: np.ndarray  # (r_f, components, n_mode)

    @property
    def rank(self):
        return self.modes.shape[0]

    @property
    def q(self):
        return self.transform.param_dim


@dataclass
class RomState:
    t: float
    alpha: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float).ravel()
        self.p = np.asarray(self.p, dtype=float).ravel()
        if not (np.all(np.isfinite(self.alpha)) and np.all(np.isfinite(self.p))):
            raise ValueError("reduced state must be finite")


@dataclass
class MassBlocks:
    """Mode-wise blocks of the mass matrix.

    ``M_alpha[i, j] = <T phi_i, T phi_j>``, ``N[i, j] = <T phi_i, T' phi_j>``
    and ``M_p[i, j] = <T' phi_i, T' phi_j>``; all ``r x r``. The path
    columns are formed by ``D(alpha)``.
    """

    M_alpha: np.ndarray
    N: np.ndarray
    M_p: np.ndarray

    def full(self):
        return np.block([[self.M_alpha, self.N], [self.N.T, self.M_p]])


@dataclass
class PrecomputedOperators:
    """Path-independent reduced operators of a single isometric frame.

    Inner products are taken in the co-moving frame; ``d`` denotes the
    discrete first derivative and ``dd`` the discrete second derivative of
    the model.
    """

    gram_modes: np.ndarray  # <phi_i, phi_j>
    gram_mode_dmode: np.ndarray  # <phi_i, d phi_j>
    gram_dmodes: np.ndarray  # <d phi_i, d phi_j>
    gram_mode_ddmode: np.ndarray  # <phi_i, dd phi_j>
    gram_dmode_ddmode: np.ndarray  # <d phi_i, dd phi_j>
    quadratic: np.ndarray | None = None  # <phi_i, phi_j d phi_k>
    quadratic_d: np.ndarray | None = None  # <d phi_i, phi_j d phi_k>
    linear_generic: np.ndarray | None = None  # <phi_i, L phi_j> for linear models without (c, mu) structure
    linear_generic_d: np.ndarray | None = None

    def linear_reduced(self, c, mu):
        """``<phi_i, (-c d + mu dd) phi_j>``; parameters enter separably."""
        return -c * self.gram_mode_dmode + mu * self.gram_mode_ddmode

    def linear_reduced_d(self, c, mu):
        """``<-d phi_i, (-c d + mu dd) phi_j>``."""
        return c * self.gram_dmodes - mu * self.gram_dmode_ddmode


def _shortcut_kind(model, frames):
    if len(frames) != 1:
        return None
    fam = frames[0].transform
    if fam.kind == IDENTITY:
        if model.kind in (ADVECTION, ADVECTION_DIFFUSION, BURGERS):
            return "separable"
        return "linear" if model.linear else None
    if fam.kind == PERIODIC_SHIFT and model.equivariant:
        return "separable"
    return None


def precompute_operators(model, frame):
    """Contract the model with the modes of a single frame."""
    grid = model.grid
    phi = frame.modes
    kind = _shortcut_kind(model, [frame])
    if kind is None:
        raise UnsupportedConfigurationError("no path-independent reduction for this model/frame")
    if kind == "linear":
        lphi = np.stack([model.rhs(0.0, f) for f in phi])
        zeros = np.zeros((phi.shape[0],) * 2)
        return PrecomputedOperators(gram(phi, phi, grid), zeros, zeros, zeros, zeros, linear_generic=gram(phi, lphi, grid))
    d1 = apply_diff(model.d1, phi)
    d2 = apply_diff(model.d2, phi)
    ops = PrecomputedOperators(
        gram_modes=gram(phi, phi, grid),
        gram_mode_dmode=gram(phi, d1, grid),
        gram_dmodes=gram(d1, d1, grid),
        gram_mode_ddmode=gram(phi, d2, grid),
        gram_dmode_ddmode=gram(d1, d2, grid),
    )
    if model.kind == BURGERS:
        w = grid.weights
        prod = phi[:, None, :, :] * d1[None, :, :, :]  # (j, k, c, n): phi_j d phi_k
        ops.quadratic = np.einsum("icn,jkcn,n->ijk", phi, prod, w)
        ops.quadratic_d = np.einsum("icn,jkcn,n->ijk", d1, prod, w)
    return ops


class RomSystem:
    """Assembled reduced model.

    ``frames`` is a list of :class:`RomFrame` (or offline frames, whose
    modes are taken). ``use_shortcuts`` selects path-independent operators
    when the configuration allows them (``"auto"``), always (``True``) or
    never (``False``).
    """

    def __init__(self, model, frames, phase=RESIDUAL, regularization=0.0, use_shortcuts="auto"):
        if phase not in PHASES:
            raise ValueError(f"unknown phase condition {phase!r}")
        if regularization < 0:
            raise ValueError("regularization must be non-negative")
        self.model = model
        self.frames = [RomFrame(f.transform, np.asarray(f.modes, dtype=float)) for f in frames]
        self.phase = phase
        self.regularization = float(regularization)
        for f in self.frames:
            if f.transform.grid.n != model.grid.n:
                raise DimensionError("frame grid does not match the model grid")
            if f.modes.shape[1] != model.components:
                raise DimensionError("mode components do not match the model")
        self.mode_frame = np.concatenate([np.full(f.rank, k) for k, f in enumerate(self.frames)]).astype(int)
        cols = []
        q = 0
        for f in self.frames:
            cols.append(q if f.q else -1)
            q += f.q
        self.path_col = np.array(cols, dtype=int)
        self.r = int(self.mode_frame.size)
        self.q = q
        self.mode_col = self.path_col[self.mode_frame]
        kind = _shortcut_kind(model, self.frames)
        if use_shortcuts is True and kind is None:
            raise UnsupportedConfigurationError("shortcuts need a single isometric frame and a shift-equivariant model")
        self.shortcuts = precompute_operators(model, self.frames[0]) if (use_shortcuts and kind) else None
        self._shortcut_kind = kind if self.shortcuts is not None else None
        self.degeneracy_flag = False
        self._degenerate_count = 0

    @property
    def dim(self):
        return self.r + self.q

    def with_params(self, c=None, mu=None):
        """Same reduced model for other model parameters (operators are reused)."""
        new = object.__new__(RomSystem)
        new.__dict__.update(self.__dict__)
        new.model = self.model.with_params(c=c, mu=mu)
        new.degeneracy_flag = False
        new._degenerate_count = 0
        return new

    # -- geometry ----------------------------------------------------------------

    def _frame_params(self, p):
        return [p[c] if c >= 0 else 0.0 for c in self.path_col]

    def transformed_modes(self, p):
        """``T(p) phi_i`` and ``T'(p) phi_i`` for all modes, each ``(r, c, n)``."""
        p = np.asarray(p, dtype=float).ravel()
        if p.size != self.q:
            raise DimensionError(f"expected {self.q} path values, got {p.size}")
        tp, dtp = [], []
        for f, eta in zip(self.frames, self._frame_params(p)):
            tp.append(f.transform.apply(eta, f.modes))
            dtp.append(f.transform.derivative(eta, f.modes))
        return np.concatenate(tp), np.concatenate(dtp)

    def D(self, alpha):
        """``r x q`` matrix with ``D[i, col(i)] = alpha_i``."""
        d = np.zeros((self.r, self.q))
        idx = np.nonzero(self.mode_col >= 0)[0]
        d[idx, self.mode_col[idx]] = np.asarray(alpha)[idx]
        return d

    def reconstruct_state(self, alpha, p):
        tp, _ = self.transformed_modes(p)
        return np.tensordot(alpha, tp, axes=1)


def assemble_mass_blocks(sys, p, direct=False):
    if sys.shortcuts is not None and not direct:
        s = sys.shortcuts
        if sys._shortcut_kind == "linear" or sys.q == 0:
            z = np.zeros_like(s.gram_modes)
            return MassBlocks(s.gram_modes.copy(), z, z.copy())
        return MassBlocks(s.gram_modes.copy(), -s.gram_mode_dmode, s.gram_dmodes.copy())
    tp, dtp = sys.transformed_modes(p)
    g = sys.model.grid
    return MassBlocks(gram(tp, tp, g), gram(tp, dtp, g), gram(dtp, dtp, g))


def assemble_rhs(sys, state, direct=False):
    """``F_alpha[i] = <T phi_i, F(z)>`` and ``F_p[i] = <T' phi_i, F(z)>`` (mode-wise)."""
    if sys.shortcuts is not None and not direct:
        return _rhs_shortcut(sys, state.alpha)
    tp, dtp = sys.transformed_modes(state.p)
    z = np.tensordot(state.alpha, tp, axes=1)
    f = sys.model.rhs(state.t, z)
    g = sys.model.grid
    return project(tp, f, g), project(dtp, f, g)


def _rhs_shortcut(sys, alpha):
    s = sys.shortcuts
    m = sys.model
    if sys._shortcut_kind == "linear":
        return s.linear_generic @ alpha, np.zeros(sys.r)
    if m.kind == BURGERS:
        aa = np.outer(alpha, alpha)
        fa = m.mu * s.gram_mode_ddmode @ alpha - np.einsum("ijk,jk->i", s.quadratic, aa)
        fp = -m.mu * s.gram_dmode_ddmode @ alpha + np.einsum("ijk,jk->i", s.quadratic_d, aa)
    else:
        fa = s.linear_reduced(m.c, m.mu) @ alpha
        fp = s.linear_reduced_d(m.c, m.mu) @ alpha
    if sys.q == 0:
        fp = np.zeros(sys.r)
    return fa, fp


def _check_degenerate(sys, mat, p):
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size and sv[-1] < _SINGULAR_RATIO * sv[0]:
        return True, float(sv[-1])
    return False, float(sv[-1]) if sv.size else 0.0


def _regularize(sys, mat, blocks, p, smin):
    if sys.regularization == 0.0:
        raise DegenerateMassError(p, smin)
    sys.degeneracy_flag = True
    sys._degenerate_count += 1
    if sys._degenerate_count > _PERSISTENT_DEGENERACY:
        raise DegenerateMassError(p, smin, persistent=True)
    mat = mat.copy()
    k = mat.shape[0] - sys.q
    mat[k:, k:] += sys.regularization * np.eye(sys.q)
    return mat


def default_regularization(sys, p):
    """Opt-in regularization ``1e-10 trace(M_p) / q``."""
    blocks = assemble_mass_blocks(sys, p)
    return 1e-10 * np.trace(blocks.M_p) / max(sys.q, 1)


def rom_velocity(sys, state, phase=None, direct=False):
    """Velocities ``(alpha_dot, p_dot)`` of the reduced model."""
    phase = sys.phase if phase is None else phase
    blocks = assemble_mass_blocks(sys, state.p, direct)
    fa, fp = assemble_rhs(sys, state, direct)
    r, q = sys.r, sys.q
    if q == 0:
        return sla.solve(blocks.M_alpha, fa, assume_a="sym"), np.zeros(0)
    d = sys.D(state.alpha)
    nd = blocks.N @ d
    if phase == RESIDUAL:
        mat = np.block([[blocks.M_alpha, nd], [nd.T, d.T @ blocks.M_p @ d]])
        rhs = np.concatenate([fa, d.T @ fp])
        deg, smin = _check_degenerate(sys, mat, state.p)
        if deg:
            mat = _regularize(sys, mat, blocks, state.p, smin)
        else:
            sys._degenerate_count = 0
        try:
            x = sla.solve(mat, rhs, assume_a="sym")
        except (sla.LinAlgError, ValueError):
            raise DegenerateMassError(state.p, smin) from None
        return x[:r], x[r:]
    if phase == FREEZE:
        pm = d.T @ blocks.M_p @ d
        prhs = d.T @ fp
    else:
        # minimize |alpha_dot|^2 with alpha_dot = M^-1 (F_alpha - N D p_dot)
        b = np.linalg.solve(blocks.M_alpha, nd)
        pm = b.T @ b
        prhs = b.T @ np.linalg.solve(blocks.M_alpha, fa)
    deg, smin = _check_degenerate(sys, pm, state.p)
    if deg:
        pm = _regularize(sys, np.block([[np.eye(r), np.zeros((r, q))], [np.zeros((q, r)), pm]]), blocks, state.p, smin)[r:, r:]
    else:
        sys._degenerate_count = 0
    pdot = np.linalg.solve(pm, prhs)
    adot = np.linalg.solve(blocks.M_alpha, fa - nd @ pdot)
    return adot, pdot


def residual_vector(sys, state, alpha_dot, p_dot):
    tp, dtp = sys.transformed_modes(state.p)
    z = np.tensordot(state.alpha, tp, axes=1)
    lhs = np.tensordot(alpha_dot, tp, axes=1)
    if sys.q:
        coef = state.alpha * np.where(sys.mode_col >= 0, np.asarray(p_dot)[np.maximum(sys.mode_col, 0)], 0.0)
        lhs = lhs + np.tensordot(coef, dtp, axes=1)
    return lhs - sys.model.rhs(state.t, z)


def residual_norm(sys, state, alpha_dot, p_dot):
    """Full-space norm of ``sum adot_i T phi_i + sum alpha_i pdot_f(i) T' phi_i - F(z)``."""
    return norm(residual_vector(sys, state, alpha_dot, p_dot), sys.model.grid)


@dataclass
class InitialProjection:
    state: RomState
    j_iv: float


def project_initial_condition(sys, z0, p0, t0=0.0, refine_path=False, max_iter=20):
    """Best approximation of ``z0`` at path ``p0``: ``M_alpha(p0) alpha0 = b_z(p0)``."""
    z0 = np.asarray(z0, dtype=float).reshape(sys.model.components, sys.model.grid.n)
    p = np.asarray(p0, dtype=float).ravel().copy()
    g = sys.model.grid

    def solve(p):
        tp, dtp = sys.transformed_modes(p)
        m = gram(tp, tp, g)
        sv = np.linalg.svd(m, compute_uv=False)
        if sv[-1] < _SINGULAR_RATIO * sv[0]:
            raise DegenerateMassError(p, float(sv[-1]))
        alpha = np.linalg.solve(m, project(tp, z0, g))
        return alpha, tp, dtp

    alpha, tp, dtp = solve(p)
    if refine_path and sys.q:
        # damped Gauss-Newton on J(p) = |z0 - sum alpha_i(p) T(p) phi_i|^2
        for _ in range(max_iter):
            res = z0 - np.tensordot(alpha, tp, axes=1)
            jac = np.stack([np.tensordot(alpha * (sys.mode_col == c), dtp, axes=1) for c in range(sys.q)])
            step = np.linalg.lstsq(gram(jac, jac, g), project(jac, res, g), rcond=None)[0]
            j_old = norm(res, g)
            lam = 1.0
            while lam > 1e-4:
                try:
                    a_new, tp_new, dtp_new = solve(p + lam * step)
                except DegenerateMassError:
                    lam *= 0.5
                    continue
                if norm(z0 - np.tensordot(a_new, tp_new, axes=1), g) < j_old:
                    p, alpha, tp, dtp = p + lam * step, a_new, tp_new, dtp_new
                    break
                lam *= 0.5
            else:
                break
            if np.max(np.abs(lam * step)) < 1e-12:
                break
    j_iv = norm(z0 - np.tensordot(alpha, tp, axes=1), g)
    return InitialProjection(RomState(t0, alpha, p), j_iv)


@dataclass
class RomTrajectory:
    times: np.ndarray
    alphas: np.ndarray  # (r, m)
    paths: np.ndarray  # (q, m)
    residual_norms: np.ndarray
    step_count: int
    n_rejected: int = 0
    degenerate: bool = False
    meta: dict = field(default_factory=dict)

    def state(self, k):
        return RomState(self.times[k], self.alphas[:, k], self.paths[:, k])


class AffinePath:
    """``p(t) = p0 + v t`` with exact derivative."""

    def __init__(self, p0, v):
        self.p0 = np.atleast_1d(np.asarray(p0, dtype=float))
        self.v = np.atleast_1d(np.asarray(v, dtype=float))

    def __call__(self, t):
        return self.p0 + self.v * t

    def derivative(self, t):
        return self.v.copy()


class SampledPath:
    """Linear interpolation of sampled values; derivative by central differences."""

    def __init__(self, times, values):
        self.times = np.asarray(times, dtype=float)
        self.values = np.atleast_2d(np.asarray(values, dtype=float))
        self._slope = np.gradient(self.values, self.times, axis=1)

    def __call__(self, t):
        return np.array([np.interp(t, self.times, v) for v in self.values])

    def derivative(self, t):
        return np.array([np.interp(t, self.times, v) for v in self._slope])


def _split(sys, y):
    return y[: sys.r], y[sys.r :]


def _rom_rhs(sys, path=None, direct=False):
    def f(t, y):
        a, p = _split(sys, y)
        if path is not None:
            p = path(t)
            pdot = path.derivative(t)
            st = RomState(t, a, p)
            blocks = assemble_mass_blocks(sys, p, direct)
            fa, _ = assemble_rhs(sys, st, direct)
            adot = np.linalg.solve(blocks.M_alpha, fa - blocks.N @ sys.D(a) @ pdot)
            return np.concatenate([adot, pdot])
        adot, pdot = rom_velocity(sys, RomState(t, a, p), direct=direct)
        return np.concatenate([adot, pdot])

    return f


def _trajectory(sys, sol, residual_fn):
    ys = sol.ys
    alphas = ys[:, : sys.r].T.copy()
    paths = ys[:, sys.r :].T.copy()
    res = np.array([residual_fn(t, y) for t, y in zip(sol.times, ys)])
    return RomTrajectory(sol.times.copy(), alphas, paths, res, sol.n_accepted, sol.n_rejected, sys.degeneracy_flag)


def integrate_rom(sys, state0, spec, t_end, times=None, path=None, direct=False):
    """Advance ``(alpha, p)`` from ``state0`` to ``t_end``.

    With ``path`` given (an object with ``__call__`` and ``derivative``),
    the path is prescribed and only the coefficient rows are integrated.
    Residual norms are evaluated at the output times.
    """
    sys.degeneracy_flag = False
    sys._degenerate_count = 0
    f = _rom_rhs(sys, path, direct)
    y0 = np.concatenate([state0.alpha, state0.p if path is None else path(state0.t)])
    if times is None and not spec.adaptive:
        n = int(round((t_end - state0.t) / spec.tau))
        times = state0.t + spec.tau * np.arange(n + 1)
    elif times is None:
        times = np.array([state0.t, t_end])
    sol = itg.integrate(f, y0, state0.t, t_end, spec, t_eval=times)

    def resid(t, y):
        a, p = _split(sys, y)
        v = f(t, y)
        return residual_norm(sys, RomState(t, a, p), v[: sys.r], v[sys.r :])

    traj = _trajectory(sys, sol, resid)
    if path is not None:
        traj.paths = np.stack([path(t) for t in traj.times], axis=1)
    return traj


def phase_condition_values(sys, state, alpha_dot=None, p_dot=None):
    """Defects of the three phase conditions for one frame.

    ``psi_res = D^T N^T adot + D^T M_p D pdot - D^T F_p``,
    ``psi_freeze = D^T M_p D pdot - D^T F_p`` and
    ``psi_freeze_reduced = D^T N^T N D pdot - D^T N^T F_alpha``.
    When ``alpha_dot`` is omitted it is taken from the coefficient rows
    ``M_alpha adot = F_alpha - N D pdot``.
    """
    if len(sys.frames) != 1 or sys.q != 1:
        raise UnsupportedConfigurationError("phase conditions are compared for a single transformed frame")
    blocks = assemble_mass_blocks(sys, state.p)
    fa, fp = assemble_rhs(sys, state)
    d = sys.D(state.alpha)
    p_dot = np.atleast_1d(np.asarray(p_dot, dtype=float))
    nd = blocks.N @ d
    if alpha_dot is None:
        alpha_dot = np.linalg.solve(blocks.M_alpha, fa - nd @ p_dot)
    psi_freeze = d.T @ blocks.M_p @ d @ p_dot - d.T @ fp
    psi_hat = nd.T @ nd @ p_dot - nd.T @ fa
    psi_res = nd.T @ alpha_dot + d.T @ blocks.M_p @ d @ p_dot - d.T @ fp
    return {"psi_res": psi_res, "psi_freeze": psi_freeze, "psi_freeze_reduced": psi_hat, "alpha_dot": alpha_dot}


def integrate_frozen_rom(sys, state0, path, spec, t_end, times=None):
    """Reference-frame ROM ``adot = F_alpha - N D(alpha) pdot`` along a prescribed path.

    Uses the path-independent operators of a single isometric frame with
    orthonormal modes.
    """
    if len(sys.frames) != 1 or not sys.frames[0].transform.isometric:
        raise UnsupportedConfigurationError("the frozen ROM needs a single isometric frame")
    ops = sys.shortcuts if sys.shortcuts is not None else precompute_operators(sys.model, sys.frames[0])
    if not np.allclose(ops.gram_modes, np.eye(sys.r), atol=1e-10):
        raise ValueError("the frozen ROM needs orthonormal modes")
    frozen = RomSystem(sys.model, sys.frames, sys.phase, sys.regularization, use_shortcuts=True)
    n_mat = -ops.gram_mode_dmode if sys.q else np.zeros((sys.r, sys.r))

    def f(t, a):
        fa, _ = _rhs_shortcut(frozen, a)
        pdot = path.derivative(t)
        return fa - n_mat @ frozen.D(a) @ pdot

    if times is None and not spec.adaptive:
        n = int(round((t_end - state0.t) / spec.tau))
        times = state0.t + spec.tau * np.arange(n + 1)
    elif times is None:
        times = np.array([state0.t, t_end])
    sol = itg.integrate(f, state0.alpha.copy(), state0.t, t_end, spec, t_eval=times)
    paths = np.stack([path(t) for t in sol.times], axis=1)

    def resid(t, a):
        st = RomState(t, a, path(t))
        return residual_norm(frozen, st, f(t, a), path.derivative(t))

    res = np.array([resid(t, a) for t, a in zip(sol.times, sol.ys)])
    return RomTrajectory(sol.times.copy(), sol.ys.T.copy(), paths, res, sol.n_accepted, sol.n_rejected)


def reconstruct_trajectory(sys, traj, times=None, model_tag="rom"):
    """Full-space fields ``sum alpha_i T(p) phi_i`` (linear interpolation in time)."""
    if times is None:
        times = traj.times
    times = np.asarray(times, dtype=float)
    if times.min() < traj.times[0] - 1e-12 or times.max() > traj.times[-1] + 1e-12:
        raise ValueError("requested times outside the trajectory range")
    out = np.empty((times.size, sys.model.components, sys.model.grid.n))
    for k, t in enumerate(times):
        a = np.array([np.interp(t, traj.times, row) for row in traj.alphas])
        p = np.array([np.interp(t, traj.times, row) for row in traj.paths]) if sys.q else np.zeros(0)
        out[k] = sys.reconstruct_state(a, p)
    return SnapshotSet.from_states(sys.model.grid, times, out, model_tag)


def rom_from_decomposition(model, dec, phase=RESIDUAL, regularization=0.0, use_shortcuts="auto"):
    return RomSystem(model, dec.frames, phase, regularization, use_shortcuts)


def initial_state(sys, dec, z0=None, t0=0.0, refine_path=False):
    """Project the initial condition at the decomposition's initial path."""
    p0 = np.array([f.path[0] for f in dec.frames if f.transform.param_dim])
    z0 = sys.model.initial_condition if z0 is None else z0
    return project_initial_condition(sys, z0, p0, t0, refine_path)
