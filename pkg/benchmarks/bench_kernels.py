"""Compare the numba kernels with their numpy fallbacks.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 50] [--end-to-end]

Kernel timings call both implementations directly, so one process covers
both. ``--end-to-end`` additionally runs the periodic advection-diffusion
shifted-POD ROM in two subprocesses, one with ``TRAMOR_DISABLE_NUMBA=1``.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from tramor import kernels
from tramor.numerics import D1_6TH


def best_of(fn, repeat):
    fn()  # warm-up (and compilation for the numba variants)
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def kernel_cases(n, k):
    rng = np.random.default_rng(0)
    u = rng.standard_normal((k, n))
    coeffs = np.asarray(D1_6TH, dtype=float)
    w = kernels.lagrange_weights(0.37)
    pos = np.sort(rng.uniform(0, n - 1, n))
    return [
        ("periodic_stencil", lambda: kernels.periodic_stencil_nb(u, coeffs), lambda: kernels.periodic_stencil_np(u, coeffs)),
        ("periodic_shift", lambda: kernels.periodic_shift_nb(u, 3, w), lambda: kernels.periodic_shift_np(u, 3, w)),
        ("interp_positions", lambda: kernels.interp_positions_nb(u, pos), lambda: kernels.interp_positions_np(u, pos)),
    ]


END_TO_END = """
import time
from tramor import fom, offline, rom, integrators
from tramor.numerics import TransformFamily, PERIODIC_SHIFT
m = fom.advection_diffusion()
spec = integrators.IntegratorSpec()
s = fom.integrate_fom(m, spec, 1.0)
fam = TransformFamily(PERIODIC_SHIFT, m.grid)
t = time.perf_counter()
d = offline.compute_spod_single_frame(s, s.times, fam, 2)
sys_ = rom.RomSystem(m, d.frames, use_shortcuts=False)
tr = rom.integrate_rom(sys_, rom.initial_state(sys_, d).state, spec, 1.0)
print(time.perf_counter() - t)
"""


def end_to_end():
    out = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, TRAMOR_DISABLE_NUMBA=flag)
        subprocess.run([sys.executable, "-c", END_TO_END], env=env, check=True, capture_output=True)  # warm cache
        res = subprocess.run([sys.executable, "-c", END_TO_END], env=env, check=True, capture_output=True, text=True)
        out[label] = float(res.stdout.strip().splitlines()[-1])
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)
    print(f"{'kernel':<18} {'n':>6} {'k':>3} {'numba [us]':>11} {'numpy [us]':>11} {'speedup':>8}")
    for n, k in ((200, 1), (200, 8), (1600, 1), (1600, 8)):
        for name, nb, npy in kernel_cases(n, k):
            a = np.asarray(nb())
            b = np.asarray(npy())
            assert np.allclose(a, b, rtol=1e-13, atol=1e-13), name
            t_nb, t_np = best_of(nb, args.repeat), best_of(npy, args.repeat)
            print(f"{name:<18} {n:>6} {k:>3} {1e6 * t_nb:>11.1f} {1e6 * t_np:>11.1f} {t_np / t_nb:>8.2f}")
    if args.end_to_end:
        res = end_to_end()
        print(f"shifted POD ROM (direct assembly): numba {res['numba']:.2f} s, numpy {res['numpy']:.2f} s")


if __name__ == "__main__":
    main()
