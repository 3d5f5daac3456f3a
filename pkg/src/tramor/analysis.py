"""Reconstruction, error reports, the residual-based bound and comparison studies."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import time as _time

import numpy as np

from . import rom as _rom
from .fom import SnapshotSet, integrate_fom, relative_error, relative_error_curve
from .integrators import RK23, RK45, IntegratorSpec
from .numerics import norm
from .offline import Decomposition


@dataclass
class ErrorReport:
    offline_error: float
    online_error: float
    residual_sup: float
    bound_curve: np.ndarray
    times: np.ndarray
    bound_params: dict = field(default_factory=lambda: {"C_tilde": 1.0, "omega": 0.0})
    pointwise_error: np.ndarray = None
    error_curve: np.ndarray = None

    def __post_init__(self):
        if self.offline_error < 0 or self.online_error < 0:
            raise ValueError("errors must be non-negative")
        if len(self.bound_curve) != len(self.times):
            raise ValueError("bound curve and times differ in length")

    def summary(self):
        return {
            "offline_error": self.offline_error,
            "online_error": self.online_error,
            "residual_sup": self.residual_sup,
            "bound_final": float(self.bound_curve[-1]) if len(self.bound_curve) else 0.0,
            **self.bound_params,
        }


def _interp_rows(times, values, t):
    return np.array([np.interp(t, times, row) for row in values]).reshape(len(values), -1)


def _check_range(t, lo, hi):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    slack = 1e-12 * max(1.0, abs(hi))
    if t.min() < lo - slack or t.max() > hi + slack:
        raise ValueError(f"times [{t.min()}, {t.max()}] outside stored range [{lo}, {hi}]")
    return np.clip(t, lo, hi)


def reconstruct(obj, times=None, sys=None):
    """Evaluate ``sum_i alpha_i(t) T_i(p_i(t)) phi_i`` on the grid.

    ``obj`` is a :class:`Decomposition` or a :class:`RomTrajectory` (the
    latter needs ``sys``). Coefficients and paths are linearly
    interpolated between stored samples; extrapolation raises ValueError.
    """
    if isinstance(obj, _rom.RomTrajectory):
        if sys is None:
            raise ValueError("a trajectory needs its RomSystem to be reconstructed")
        return _rom.reconstruct_trajectory(sys, obj, times)
    if not isinstance(obj, Decomposition):
        raise TypeError(f"cannot reconstruct {type(obj).__name__}")
    if times is None:
        return obj.reconstruct()
    t = _check_range(times, obj.times[0], obj.times[-1])
    c = obj.frames[0].modes.shape[1]
    out = np.zeros((t.size, c, obj.grid.n))
    for fr in obj.frames:
        a = _interp_rows(obj.times, fr.coefficients, t)
        p = np.interp(t, obj.times, fr.path)
        for k in range(t.size):
            out[k] += fr.at(a[:, k], p[k])
    return SnapshotSet.from_states(obj.grid, t, out, model_tag="reconstruction")


def error_bound(j_iv, residual_norms, times, C_tilde=1.0, omega=0.0):
    """Envelope ``C e^{omega t} (J_IV + t sup_{s<=t} ||R(s)||)`` at every sample.

    ``times`` are measured from the start of the trajectory.
    """
    if C_tilde < 1.0 or omega < 0.0:
        raise ValueError("need C_tilde >= 1 and omega >= 0")
    t = np.asarray(times, dtype=float)
    t = t - t[0]
    sup = np.maximum.accumulate(np.abs(np.asarray(residual_norms, dtype=float)))
    return C_tilde * np.exp(omega * t) * (j_iv + t * sup)


def absolute_error_curve(truth, approx):
    """Pointwise-in-time ``||z(t) - z_r(t)||`` in the grid norm."""
    d = truth.states - approx.states
    return np.array([norm(d[k], truth.grid) for k in range(truth.m)])


def error_report(truth, dec, sys, traj, j_iv, C_tilde=1.0, omega=0.0, keep_pointwise=False):
    """Offline and online errors plus the residual bound for one ROM run."""
    rec = _rom.reconstruct_trajectory(sys, traj, truth.times)
    online = relative_error(truth, rec)
    offline = dec.offline_error if dec is not None and dec.offline_error is not None else 0.0
    bound = error_bound(j_iv, traj.residual_norms, traj.times, C_tilde, omega)
    return ErrorReport(
        offline_error=float(offline),
        online_error=float(online),
        residual_sup=float(np.max(traj.residual_norms)) if traj.residual_norms.size else 0.0,
        bound_curve=bound,
        times=traj.times.copy(),
        bound_params={"C_tilde": float(C_tilde), "omega": float(omega)},
        pointwise_error=(truth.data - rec.data) if keep_pointwise else None,
        error_curve=relative_error_curve(truth, rec),
    )


# step counts ----------------------------------------------------------------------


def step_count_study(model, roms, schemes=(RK45, RK23), rel_tol=1e-3, abs_tol=1e-6, t_end=1.0):
    """Accepted adaptive steps for the FOM and each ROM under identical settings.

    ``roms`` maps a label to ``(RomSystem, RomState)``. Returns one row per
    scheme with the raw counts and each ROM's ratio to the FOM count.
    """
    rows = []
    for scheme in schemes:
        spec = IntegratorSpec(scheme=scheme, rel_tol=rel_tol, abs_tol=abs_tol)
        if not spec.adaptive:
            raise ValueError(f"{scheme} is not adaptive")
        full = integrate_fom(model, spec, t_end, times=np.array([0.0, t_end]))
        row = {"scheme": scheme, "fom": int(full.n_steps)}
        for label, (sys, state0) in roms.items():
            traj = _rom.integrate_rom(sys, state0, spec, t_end, times=np.array([state0.t, t_end]))
            row[label] = int(traj.step_count)
            row[f"{label}_ratio"] = traj.step_count / full.n_steps
        rows.append(row)
    return rows


# parameter sweep ------------------------------------------------------------------


def run_rom_error(sys, dec, truth, spec, t_end):
    """Integrate the ROM from the projected initial value and return (error, seconds)."""
    start = _time.perf_counter()
    st = _rom.initial_state(sys, dec).state
    traj = _rom.integrate_rom(sys, st, spec, t_end, times=truth.times)
    elapsed = _time.perf_counter() - start
    rec = _rom.reconstruct_trajectory(sys, traj, truth.times)
    return relative_error(truth, rec), elapsed


def _sweep_entry(args):
    c, model, systems, spec, t_end, times = args
    m = model.with_params(c=c)
    start = _time.perf_counter()
    truth = integrate_fom(m, spec, t_end, times=times)
    row = {"c": float(c), "fom_time": _time.perf_counter() - start}
    for label, (sys, dec) in systems.items():
        err, secs = run_rom_error(sys.with_params(c=c), dec, truth, spec, t_end)
        row[f"{label}_error"] = float(err)
        row[f"{label}_time"] = secs
    return row


def parameter_sweep(model, systems, c_values, spec, t_end=1.0, times=None, jobs=1):
    """Evaluate ROMs built once at the base parameter over a grid of velocities.

    ``systems`` maps a label to ``(RomSystem, Decomposition)``; each system
    is re-parametrized through its separable reduced operators. Returns
    one row per velocity, in the order given.
    """
    times = np.linspace(0.0, t_end, 201) if times is None else np.asarray(times, dtype=float)
    tasks = [(float(c), model, systems, spec, t_end, times) for c in c_values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_sweep_entry, tasks))
    return [_sweep_entry(t) for t in tasks]
