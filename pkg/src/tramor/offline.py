"""Offline identification of modes and paths.

A decomposition approximates snapshots as ``z(t_k) ~ sum_f sum_i a_fi(t_k) T_f(p_f(t_k)) phi_fi``.
"""

from dataclasses import dataclass, field
import logging
import math
import warnings

import numpy as np

from .fom import SnapshotSet, relative_error
from .numerics import IDENTITY, VIRTUAL_SHIFT, PERIODIC_SHIFT, DimensionError, TransformFamily, apply_diff

logger = logging.getLogger(__name__)


class RankDeficiencyError(ValueError):
    def __init__(self, requested, attainable):
        super().__init__(f"requested rank {requested} exceeds attainable rank {attainable}")
        self.requested = requested
        self.attainable = attainable


class FlatCorrelationWarning(UserWarning):
    pass


@dataclass
class Frame:
    """Modes sharing one transformation family and one sampled path.

    ``modes`` has shape ``(r, components, n_mode)`` where ``n_mode`` is the
    size of the family's mode grid; ``coefficients`` has shape ``(r, m)``.
    """

    transform: TransformFamily
    path: np.ndarray
    modes: np.ndarray
    coefficients: np.ndarray
    singular_values: np.ndarray | None = None

    def __post_init__(self):
        self.path = np.asarray(self.path, dtype=float).ravel()
        self.modes = np.asarray(self.modes, dtype=float)
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.modes.ndim == 2:
            self.modes = self.modes[:, None, :]
        if self.coefficients.shape != (self.modes.shape[0], self.path.size):
            raise DimensionError(
                f"coefficients {self.coefficients.shape} do not match r={self.modes.shape[0]}, m={self.path.size}"
            )

    @property
    def rank(self):
        return self.modes.shape[0]

    def field(self, k):
        """Contribution of this frame at sample ``k``."""
        return self.at(self.coefficients[:, k], self.path[k])

    def at(self, alpha, p):
        return self.transform.apply(p, np.tensordot(alpha, self.modes, axes=1))

    def reconstruct(self):
        m = self.path.size
        c = self.modes.shape[1]
        out = np.empty((m, c, self.transform.grid.n))
        for k in range(m):
            out[k] = self.field(k)
        return out


@dataclass
class Decomposition:
    frames: list
    grid: object
    times: np.ndarray
    offline_error: float = float("nan")
    error_history: list = field(default_factory=list)

    @property
    def rank(self):
        return sum(f.rank for f in self.frames)

    def reconstruct_states(self):
        out = None
        for f in self.frames:
            part = f.reconstruct()
            out = part if out is None else out + part
        return out

    def reconstruct(self, model_tag="reconstruction"):
        return SnapshotSet.from_states(self.grid, self.times, self.reconstruct_states(), model_tag)

    def diagnostics(self):
        """Bounds relevant for the admissible set: max |alpha| and max ||d/dxi phi||."""
        out = []
        for f in self.frames:
            g = f.transform.mode_grid
            dnorm = 0.0
            if f.transform.kind != IDENTITY:
                d = apply_diff(f.transform.dop, f.modes)
                dnorm = float(np.sqrt(np.max(np.einsum("rcn,n->r", d**2, g.weights))))
            out.append({"max_abs_coefficient": float(np.max(np.abs(f.coefficients))), "max_dmode_norm": dnorm})
        return out


def _sign_fix(modes, coeffs):
    flat = modes.reshape(modes.shape[0], -1)
    idx = np.argmax(np.abs(flat), axis=1)
    s = np.sign(flat[np.arange(flat.shape[0]), idx])
    s[s == 0] = 1.0
    return modes * s[:, None, None], coeffs * s[:, None]


def _weighted_svd(states, weights):
    """SVD of the weighted snapshot matrix; states ``(m, c, n)``.

    Returns modes ``(k, c, n)`` orthonormal in the weighted product, singular
    values and right singular vectors.
    """
    m, c, n = states.shape
    sw = np.sqrt(weights)
    x = (states * sw).reshape(m, c * n).T
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    modes = (u.T.reshape(-1, c, n)) / sw
    return modes, s, vt


def _numerical_rank(s, shape):
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > max(shape) * np.finfo(float).eps * s[0]))


def _pod_states(states, weights, r):
    m, c, n = states.shape
    if r < 1:
        raise ValueError("rank must be positive")
    if r > min(c * n, m):
        raise RankDeficiencyError(r, min(c * n, m))
    modes, s, vt = _weighted_svd(states, weights)
    attainable = _numerical_rank(s, (c * n, m))
    if r > attainable:
        raise RankDeficiencyError(r, attainable)
    modes = modes[:r]
    coeffs = s[:r, None] * vt[:r]
    modes, coeffs = _sign_fix(modes, coeffs)
    return modes, coeffs, s


def compute_pod(snapshots, r):
    """Classical POD: a single identity frame holding the leading ``r`` modes."""
    modes, coeffs, s = _pod_states(snapshots.states, snapshots.grid.weights, r)
    fam = TransformFamily(IDENTITY, snapshots.grid)
    frame = Frame(fam, np.zeros(snapshots.m), modes, coeffs, s)
    dec = Decomposition([frame], snapshots.grid, snapshots.times.copy())
    dec.offline_error = relative_error(snapshots, dec.reconstruct())
    dec.error_history = [dec.offline_error]
    return dec


def back_transform(snapshots, path, fam):
    """Snapshots moved into the co-moving frame, ``T(-p_k) z(t_k)``."""
    if not fam.isometric:
        raise ValueError("back transformation requires an isometric family")
    states = snapshots.states
    out = np.empty_like(states)
    for k in range(snapshots.m):
        out[k] = fam.apply(-path[k], states[k])
    return SnapshotSet.from_states(snapshots.grid, snapshots.times, out, snapshots.model_tag + ":comoving")


def _virtual_samples(states, path, fam):
    """Data pulled back onto the virtual grid with a validity mask.

    Entry ``(k, :, i)`` holds ``z(t_k)`` evaluated at ``x_i + p_k`` where that
    point lies in the physical domain.
    """
    g, vg = fam.grid, fam.virtual_grid
    m, c, _ = states.shape
    y = np.zeros((m, c, vg.n))
    mask = np.zeros((m, vg.n), dtype=bool)
    from .kernels import interp_positions

    for k in range(m):
        pos = (vg.nodes + path[k] - g.xi0) / g.dxi
        r = np.round(pos)
        pos = np.where(np.abs(pos - r) < 1e-9, r, pos)
        valid = (pos >= -1e-12) & (pos <= g.n - 1 + 1e-12)
        mask[k] = valid
        pv = np.clip(pos[valid], 0.0, g.n - 1)
        if np.all(pv == np.round(pv)):
            y[k][:, valid] = states[k][:, pv.astype(int)]
        else:
            y[k][:, valid] = interp_positions(states[k], pv)
    return y, mask


def _fill_hidden(y, mask):
    """Copy each virtual node's first/last observation into the times it is hidden."""
    yf = y.copy()
    for i in range(mask.shape[1]):
        ks = np.flatnonzero(mask[:, i])
        if ks.size == 0:
            continue
        yf[: ks[0], :, i] = y[ks[0], :, i]
        yf[ks[-1] + 1 :, :, i] = y[ks[-1], :, i]
    return yf


def _weighted_low_rank(y, mask, r, weights, hidden_weight=1e-4, max_iter=300, tol=1e-10):
    """Weighted low-rank fit ``y[k, :, i] ~ sum_l a[l, k] psi[l, :, i]``.

    Observed entries carry weight 1. Hidden entries are filled with the
    node's nearest observation in time and carry ``hidden_weight``; with a
    pure mask the fit is free in hidden directions and the coefficients
    wander, which a Galerkin model cannot follow. Alternating least squares
    from the SVD of the filled data, then rotated so the modes are
    orthonormal in the ``weights`` product.
    """
    m, c, nv = y.shape
    # rows are (component, node) pairs, columns are snapshots
    w_row = np.tile(weights, c)
    omega = np.where(mask, 1.0, hidden_weight)
    obs = np.tile(omega.T, (c, 1))
    ymat = _fill_hidden(y, mask).transpose(1, 2, 0).reshape(c * nv, m)
    u, s, vt = np.linalg.svd(ymat * np.sqrt(w_row)[:, None], full_matrices=False)
    psi = u[:, :r] / np.sqrt(w_row)[:, None]
    a = s[:r, None] * vt[:r]
    wobs = obs * w_row[:, None]
    yobs = ymat * obs
    eye = np.eye(r)
    prev = np.inf
    for it in range(max_iter):
        # coefficients: one r x r system per snapshot
        outer = (psi[:, :, None] * psi[:, None, :]).reshape(-1, r * r)
        g = (wobs.T @ outer).reshape(m, r, r)
        rhs = (yobs * w_row[:, None]).T @ psi
        g += eye * (1e-13 * np.trace(g, axis1=1, axis2=2) / r + 1e-300)[:, None, None]
        a = np.linalg.solve(g, rhs[..., None])[..., 0].T
        # modes: one r x r system per (component, node) row
        outer = (a.T[:, :, None] * a.T[:, None, :]).reshape(m, r * r)
        h = (obs @ outer).reshape(-1, r, r)
        b = yobs @ a.T
        h += eye * (1e-13 * np.trace(h, axis1=1, axis2=2) / r + 1e-300)[:, None, None]
        psi = np.linalg.solve(h, b[..., None])[..., 0]
        err = float(np.sum(wobs * (psi @ a - ymat) ** 2))
        logger.debug("als iteration %d: %.6e", it, err)
        if np.isfinite(prev) and prev - err <= tol * prev:
            break
        prev = err
    # orthonormalize in the weighted product and diagonalize
    sw = np.sqrt(w_row)[:, None]
    q, rr = np.linalg.qr(psi * sw)
    u, s, vt = np.linalg.svd(rr @ a, full_matrices=False)
    modes = ((q @ u) / sw).T.reshape(r, c, nv)
    coeffs = s[:, None] * vt
    return modes, coeffs, s


def _fit_frame(states, path, fam, r, weights):
    if fam.kind == VIRTUAL_SHIFT:
        y, mask = _virtual_samples(states, path, fam)
        return _weighted_low_rank(y, mask, r, fam.mode_grid.weights)
    moved = np.empty_like(states)
    for k in range(states.shape[0]):
        moved[k] = fam.apply(-path[k], states[k])
    return _pod_states(moved, weights, r)


def compute_spod_single_frame(snapshots, path, fam, r, hidden_weight=1e-4):
    """Shifted POD with one transformation: POD of the back-transformed data.

    Isometric families reduce exactly to :func:`compute_pod` of
    ``T(-p) z``. The virtual-domain shift is not isometric; its modes come
    from a weighted least-squares fit on the virtual grid.
    """
    path = np.asarray(path, dtype=float).ravel()
    if path.size != snapshots.m:
        raise DimensionError(f"path has {path.size} samples, snapshots have {snapshots.m}")
    if fam.kind == VIRTUAL_SHIFT:
        y, mask = _virtual_samples(snapshots.states, path, fam)
        modes, coeffs, s = _weighted_low_rank(y, mask, r, fam.mode_grid.weights, hidden_weight)
        modes, coeffs = _sign_fix(modes, coeffs)
        frame = Frame(fam, path, modes, coeffs, s)
        dec = Decomposition([frame], snapshots.grid, snapshots.times.copy())
    else:
        pod = compute_pod(back_transform(snapshots, path, fam), r)
        f0 = pod.frames[0]
        frame = Frame(fam, path, f0.modes, f0.coefficients, f0.singular_values)
        dec = Decomposition([frame], snapshots.grid, snapshots.times.copy())
    dec.offline_error = relative_error(snapshots, dec.reconstruct())
    dec.error_history = [dec.offline_error]
    return dec


def compute_spod_multi_frame(snapshots, frames_init, sweeps=10, stop_tol=1e-10):
    """Block-coordinate shifted POD for several frames.

    ``frames_init`` lists ``(family, path, rank)`` triples. Frames start
    empty; each sweep refits every frame, in declaration order, to the data
    minus the other frames' current contributions.
    """
    if sweeps < 1:
        raise ValueError("sweeps must be at least 1")
    states = snapshots.states
    m = snapshots.m
    parts = [np.zeros_like(states) for _ in frames_init]
    frames = [None] * len(frames_init)
    history = []
    for sweep in range(sweeps):
        for f, (fam, path, r) in enumerate(frames_init):
            path = np.asarray(path, dtype=float).ravel()
            resid = states - sum(p for g, p in enumerate(parts) if g != f)
            modes, coeffs, s = _fit_frame(resid, path, fam, r, snapshots.grid.weights)
            modes, coeffs = _sign_fix(modes, coeffs)
            frames[f] = Frame(fam, path, modes, coeffs, s)
            parts[f] = frames[f].reconstruct()
        approx = SnapshotSet.from_states(snapshots.grid, snapshots.times, sum(parts))
        err = relative_error(snapshots, approx)
        history.append(err)
        logger.debug("sweep %d: offline error %.3e", sweep + 1, err)
        if sweep > 0 and history[-2] - err < stop_tol:
            break
    dec = Decomposition(frames, snapshots.grid, snapshots.times.copy(), err, history)
    assert m == dec.times.size
    return dec


def estimate_path(snapshots):
    """Shift path from maximal circular cross-correlation of consecutive snapshots.

    Increments are searched on the lattice and refined by a parabola through
    the peak and its two neighbours. ``p(t_0) = 0``.
    """
    if snapshots.components != 1:
        raise DimensionError("path estimation needs single-component snapshots")
    if not snapshots.grid.periodic:
        raise ValueError("path estimation needs a periodic grid")
    n = snapshots.grid.n
    h = snapshots.grid.dxi
    z = snapshots.data[0].T  # (m, n)
    fz = np.fft.rfft(z, axis=1)
    path = np.zeros(snapshots.m)
    flat = False
    for k in range(snapshots.m - 1):
        # corr[d] = sum_j z_{k+1}[j] z_k[j - d]
        corr = np.fft.irfft(fz[k + 1] * np.conj(fz[k]), n=n)
        if np.ptp(corr) <= 1e-12 * max(np.max(np.abs(corr)), 1e-300):
            flat = True
            path[k + 1] = path[k]
            continue
        d = int(np.argmax(corr))
        cm, c0, cp = corr[(d - 1) % n], corr[d], corr[(d + 1) % n]
        den = cm - 2.0 * c0 + cp
        frac = 0.5 * (cm - cp) / den if den < 0 else 0.0
        if d > n // 2:
            d -= n
        path[k + 1] = path[k] + (d + frac) * h
    if flat:
        warnings.warn("flat cross-correlation: zero path increments used", FlatCorrelationWarning, stacklevel=2)
    return path


def reconstruct(dec):
    return dec.reconstruct()
