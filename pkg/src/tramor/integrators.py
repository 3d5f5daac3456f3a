"""Time integrators shared by the full and the reduced models.

* :func:`trapezoid` -- implicit trapezoidal rule with constant step and a
  (simplified) Newton iteration on the step equation.
* :func:`rk_adaptive` -- embedded explicit Runge-Kutta pairs (Dormand-Prince
  5(4) and Bogacki-Shampine 3(2)) with PI step-size control and dense output.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

logger = logging.getLogger(__name__)

IMPLICIT_TRAPEZOID = "implicit_trapezoid"
RK45 = "rk45"
RK23 = "rk23"
SCHEMES = (IMPLICIT_TRAPEZOID, RK45, RK23)


class StepFailure(RuntimeError):
    """Newton iteration of an implicit step did not converge."""

    def __init__(self, t, residual):
        super().__init__(f"Newton iteration failed at t={t:.6g} (residual {residual:.3e})")
        self.t = t
        self.residual = residual


@dataclass(frozen=True)
class NewtonSettings:
    max_iter: int = 25
    tol: float = 1e-10


@dataclass(frozen=True)
class IntegratorSpec:
    """Integrator choice and its parameters."""

    scheme: str = IMPLICIT_TRAPEZOID
    tau: float = 5e-3
    rel_tol: float = 1e-3
    abs_tol: float = 1e-6
    newton: NewtonSettings = field(default_factory=NewtonSettings)
    first_step: float = 1e-4

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown integrator scheme {self.scheme!r}")
        if not (self.tau > 0 and self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("step size and tolerances must be positive")

    @property
    def adaptive(self):
        return self.scheme != IMPLICIT_TRAPEZOID


@dataclass
class Solution:
    times: np.ndarray
    ys: np.ndarray  # (len(times), dim)
    n_accepted: int
    n_rejected: int = 0
    step_times: np.ndarray | None = None


def fd_jacobian(f, t, y, fy=None):
    """Forward-difference Jacobian with steps ``1e-7 * (1 + |y_i|)``."""
    if fy is None:
        fy = f(t, y)
    n = y.size
    jac = np.empty((fy.size, n))
    for i in range(n):
        h = 1e-7 * (1.0 + abs(y[i]))
        yp = y.copy()
        yp[i] += h
        jac[:, i] = (f(t, yp) - fy) / h
    return jac


class _StepSolver:
    """Factorization of ``I - tau/2 * J`` for dense or sparse Jacobians."""

    def __init__(self, jac, tau):
        n = jac.shape[0]
        if sp.issparse(jac):
            self.lu = spla.splu((sp.identity(n, format="csc") - 0.5 * tau * jac).tocsc())
            self.solve = self.lu.solve
        else:
            lu = sla.lu_factor(np.eye(n) - 0.5 * tau * np.asarray(jac))
            self.solve = lambda b: sla.lu_solve(lu, b)


def trapezoid(f, y0, t0, tau, n_steps, jac=None, newton=NewtonSettings(), post_step=None, on_step=None):
    """Implicit trapezoidal rule ``y1 = y0 + tau/2 (f(t0, y0) + f(t1, y1))``.

    ``jac`` may be a fixed matrix (linear right-hand side, factored once), a
    callable ``jac(t, y)`` or ``None`` for forward-difference Jacobians.
    ``post_step(t, y)`` may return a corrected state (e.g. Dirichlet data).
    """
    y = np.array(y0, dtype=float)
    times = t0 + tau * np.arange(n_steps + 1)
    ys = np.empty((n_steps + 1, y.size))
    ys[0] = y
    fixed = None
    if jac is not None and not callable(jac):
        fixed = _StepSolver(jac, tau)
    fy = f(t0, y)
    if on_step is not None:
        on_step(t0, y, fy)
    for k in range(n_steps):
        t1 = times[k + 1]
        base = y + 0.5 * tau * fy
        z = y + tau * fy
        solver = fixed
        fz = f(t1, z)
        g = z - base - 0.5 * tau * fz
        res = np.max(np.abs(g))
        it = 0
        prev = np.inf
        while res > newton.tol:
            if it >= newton.max_iter:
                raise StepFailure(t1, res)
            if solver is None or (fixed is None and res > 0.5 * prev):
                jz = jac(t1, z) if callable(jac) else fd_jacobian(f, t1, z, fz)
                solver = _StepSolver(jz, tau)
            z = z - solver.solve(g)
            fz = f(t1, z)
            g = z - base - 0.5 * tau * fz
            prev, res = res, np.max(np.abs(g))
            it += 1
        if post_step is not None:
            z = post_step(t1, z)
            fz = f(t1, z)
        y, fy = z, fz
        ys[k + 1] = y
        if on_step is not None:
            on_step(t1, y, fy)
    return Solution(times, ys, n_accepted=n_steps)


class _Tableau:
    def __init__(self, c, a, b, e, p, order, err_order):
        self.c, self.a, self.b, self.e, self.p = c, a, b, e, p
        self.order, self.err_order = order, err_order
        self.n_stages = len(b)


DOPRI5 = _Tableau(
    c=np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1]),
    a=np.array(
        [
            [0, 0, 0, 0, 0],
            [1 / 5, 0, 0, 0, 0],
            [3 / 40, 9 / 40, 0, 0, 0],
            [44 / 45, -56 / 15, 32 / 9, 0, 0],
            [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0],
            [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
        ]
    ),
    b=np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
    e=np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40]),
    # continuous extension (Shampine's optimal c6 variant)
    p=np.array(
        [
            [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
            [0, 0, 0, 0],
            [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
            [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
            [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
            [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
            [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
        ]
    ),
    order=5,
    err_order=4,
)

BS23 = _Tableau(
    c=np.array([0, 1 / 2, 3 / 4]),
    a=np.array([[0, 0], [1 / 2, 0], [0, 3 / 4]]),
    b=np.array([2 / 9, 1 / 3, 4 / 9]),
    e=np.array([5 / 72, -1 / 12, -1 / 9, 1 / 8]),
    # cubic Hermite dense output
    p=np.array([[1, -4 / 3, 5 / 9], [0, 1, -2 / 3], [0, 4 / 3, -8 / 9], [0, -1, 1]]),
    order=3,
    err_order=2,
)

TABLEAUS = {RK45: DOPRI5, RK23: BS23}


def _rk_step(tab, f, t, y, fy, h):
    k = np.empty((tab.n_stages + 1, y.size))
    k[0] = fy
    for s in range(1, tab.n_stages):
        dy = h * (tab.a[s, :s] @ k[:s])
        k[s] = f(t + tab.c[s] * h, y + dy)
    y_new = y + h * (tab.b @ k[:-1])
    k[-1] = f(t + h, y_new)
    err = h * (tab.e @ k)
    return y_new, k, err


def rk_adaptive(
    f,
    y0,
    t0,
    t_end,
    scheme=RK45,
    rtol=1e-3,
    atol=1e-6,
    first_step=1e-4,
    t_eval=None,
    safety=0.9,
    fac_min=0.2,
    fac_max=5.0,
    max_steps=1_000_000,
    on_step=None,
):
    """Embedded Runge-Kutta integration with PI step-size control.

    The error of a step is measured in the maximum norm relative to
    ``max(atol, rtol * max(|y|, |y_new|))``. Accepted steps use the
    controller ``h * safety * err^(-0.7/k) * err_prev^(0.4/k)`` with
    ``k = err_order + 1`` and the factor clamped to ``[fac_min, fac_max]``.
    Outputs at ``t_eval`` come from the scheme's dense output.
    """
    tab = TABLEAUS[scheme]
    y = np.array(y0, dtype=float)
    t = float(t0)
    t_eval = np.array([t0, t_end] if t_eval is None else t_eval, dtype=float)
    out = np.empty((t_eval.size, y.size))
    i_out = 0
    while i_out < t_eval.size and t_eval[i_out] <= t + 1e-14:
        out[i_out] = y
        i_out += 1
    kexp = tab.err_order + 1
    alpha, beta = 0.7 / kexp, 0.4 / kexp
    h = min(first_step, t_end - t0)
    fy = f(t, y)
    if on_step is not None:
        on_step(t, y, fy)
    err_prev = 1.0
    n_acc = n_rej = 0
    step_times = [t]
    rejected = False
    while t < t_end - 1e-14 * max(1.0, abs(t_end)):
        if n_acc + n_rej > max_steps:
            raise RuntimeError("maximum number of steps exceeded")
        h = min(h, t_end - t)
        y_new, k, err_vec = _rk_step(tab, f, t, y, fy, h)
        scale = np.maximum(atol, rtol * np.maximum(np.abs(y), np.abs(y_new)))
        err = float(np.max(np.abs(err_vec) / scale)) if y.size else 0.0
        if not np.isfinite(err):
            err = np.inf
        if err <= 1.0:
            t_new = t + h
            # dense output for requested times inside (t, t_new]
            while i_out < t_eval.size and t_eval[i_out] <= t_new + 1e-12:
                theta = (t_eval[i_out] - t) / h
                powers = theta ** np.arange(1, tab.p.shape[1] + 1)
                out[i_out] = y + h * (k.T @ (tab.p @ powers))
                i_out += 1
            e = max(err, 1e-10)
            fac = safety * e**-alpha * err_prev**beta
            fac = min(fac_max, max(fac_min, fac))
            if rejected:
                fac = min(fac, 1.0)
            t, y, fy = t_new, y_new, k[-1]
            err_prev = e
            h *= fac
            n_acc += 1
            rejected = False
            step_times.append(t)
            if on_step is not None:
                on_step(t, y, fy)
        else:
            fac = max(fac_min, safety * err ** (-1.0 / kexp)) if np.isfinite(err) else fac_min
            h *= min(fac, 1.0)
            n_rej += 1
            rejected = True
            if h < 1e-14 * max(1.0, abs(t)):
                raise RuntimeError(f"step size underflow at t={t:.6g}")
    while i_out < t_eval.size:
        out[i_out] = y
        i_out += 1
    return Solution(t_eval, out, n_accepted=n_acc, n_rejected=n_rej, step_times=np.array(step_times))


def integrate(f, y0, t0, t_end, spec, jac=None, t_eval=None, post_step=None, on_step=None):
    """Dispatch on ``spec.scheme``; fixed-step output is every ``tau``."""
    if spec.scheme == IMPLICIT_TRAPEZOID:
        n_steps = int(round((t_end - t0) / spec.tau))
        if not np.isclose(t0 + n_steps * spec.tau, t_end, rtol=0, atol=1e-9):
            raise ValueError(f"t_end - t0 = {t_end - t0} is not a multiple of tau = {spec.tau}")
        sol = trapezoid(f, y0, t0, spec.tau, n_steps, jac=jac, newton=spec.newton, post_step=post_step, on_step=on_step)
        if t_eval is not None and (len(t_eval) != sol.times.size or not np.allclose(t_eval, sol.times, atol=1e-12)):
            idx = np.rint((np.asarray(t_eval) - t0) / spec.tau).astype(int)
            if np.any(np.abs(t0 + idx * spec.tau - t_eval) > 1e-9) or idx.min() < 0 or idx.max() > n_steps:
                raise ValueError("fixed-step output times must lie on the step grid")
            sol = Solution(np.asarray(t_eval, dtype=float), sol.ys[idx], sol.n_accepted)
        return sol
    return rk_adaptive(
        f,
        y0,
        t0,
        t_end,
        scheme=spec.scheme,
        rtol=spec.rel_tol,
        atol=spec.abs_tol,
        first_step=spec.first_step,
        t_eval=t_eval,
        on_step=on_step,
    )
