"""Hot inner loops: periodic stencils and cubic Lagrange interpolation.

Every kernel exists twice, a numba-compiled loop (``*_nb``) and a vectorized
numpy version (``*_np``). The public names bind to one of them according to
:data:`tramor._jit.USE_NUMBA`. All kernels act on 2-D arrays whose last axis
is the spatial index, so stacked modes and vector-valued fields go through a
single call.
"""

import numpy as np

from ._jit import USE_NUMBA, njit

__all__ = [
    "lagrange_weights",
    "periodic_stencil",
    "periodic_shift",
    "interp_positions",
    "USE_NUMBA",
]


def lagrange_weights(x):
    """Cubic Lagrange weights of nodes 0, 1, 2, 3 evaluated at ``x``."""
    return np.array(
        [
            -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0,
            x * (x - 2.0) * (x - 3.0) / 2.0,
            -x * (x - 1.0) * (x - 3.0) / 2.0,
            x * (x - 1.0) * (x - 2.0) / 6.0,
        ]
    )


# periodic stencil -----------------------------------------------------------


def periodic_stencil_np(u, coeffs):
    half = len(coeffs) // 2
    out = np.zeros_like(u)
    for d, a in enumerate(coeffs):
        if a != 0.0:
            # out[j] += a * u[j + d - half]
            out += a * np.roll(u, half - d, axis=-1)
    return out


@njit(cache=True)
def periodic_stencil_nb(u, coeffs):
    k, n = u.shape
    w = coeffs.shape[0]
    half = w // 2
    out = np.zeros_like(u)
    for c in range(k):
        for j in range(n):
            acc = 0.0
            for d in range(w):
                idx = j + d - half
                if idx < 0:
                    idx += n
                elif idx >= n:
                    idx -= n
                acc += coeffs[d] * u[c, idx]
            out[c, j] = acc
    return out


# periodic shift by a constant number of cells --------------------------------


def periodic_shift_np(u, base, weights):
    # out[j] = sum_d weights[d] * u[j + base + d]
    out = np.zeros_like(u)
    for d in range(4):
        out += weights[d] * np.roll(u, -(base + d), axis=-1)
    return out


@njit(cache=True)
def periodic_shift_nb(u, base, weights):
    k, n = u.shape
    out = np.empty_like(u)
    b = base % n
    for c in range(k):
        for j in range(n):
            acc = 0.0
            for d in range(4):
                idx = j + b + d
                while idx >= n:
                    idx -= n
                acc += weights[d] * u[c, idx]
            out[c, j] = acc
    return out


# interpolation at arbitrary positions on a bounded index range -----------------


def interp_positions_np(u, pos):
    n = u.shape[-1]
    base = np.clip(np.floor(pos).astype(np.int64) - 1, 0, n - 4)
    x = pos - base
    w = lagrange_weights(x)
    out = np.zeros(u.shape[:-1] + pos.shape)
    for d in range(4):
        out += w[d] * u[..., base + d]
    return out


@njit(cache=True)
def interp_positions_nb(u, pos):
    k, n = u.shape
    m = pos.shape[0]
    out = np.empty((k, m))
    for j in range(m):
        b = int(np.floor(pos[j])) - 1
        if b < 0:
            b = 0
        elif b > n - 4:
            b = n - 4
        x = pos[j] - b
        w0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0
        w1 = x * (x - 2.0) * (x - 3.0) / 2.0
        w2 = -x * (x - 1.0) * (x - 3.0) / 2.0
        w3 = x * (x - 1.0) * (x - 2.0) / 6.0
        for c in range(k):
            out[c, j] = w0 * u[c, b] + w1 * u[c, b + 1] + w2 * u[c, b + 2] + w3 * u[c, b + 3]
    return out


if USE_NUMBA:

    def periodic_stencil(u, coeffs):
        return periodic_stencil_nb(np.ascontiguousarray(u, dtype=np.float64), coeffs)

    def periodic_shift(u, base, weights):
        return periodic_shift_nb(np.ascontiguousarray(u, dtype=np.float64), int(base), weights)

    def interp_positions(u, pos):
        return interp_positions_nb(
            np.ascontiguousarray(u, dtype=np.float64), np.ascontiguousarray(pos, dtype=np.float64)
        )

else:
    periodic_stencil = periodic_stencil_np
    periodic_shift = periodic_shift_np
    interp_positions = interp_positions_np
