"""Periodic convolution by direct summation and by FFT, and the Picard slab length."""
import time

import numpy as np

from balancelaw.grid import GridFn, UniformGrid
from balancelaw.nonlocal_source import contraction_horizon, convolve, exponential_kernel, gaussian_kernel

rng = np.random.default_rng(0)
for n in (64, 256, 1024):
    g = UniformGrid.from_bounds(-np.pi, np.pi, n, "periodic")
    u = GridFn(g, rng.normal(size=n))
    K = exponential_kernel(4.0, mass=0.8)
    t0 = time.perf_counter()
    d = convolve(K, 0.0, u, "direct").values
    t1 = time.perf_counter()
    f = convolve(K, 0.0, u, "fft").values
    t2 = time.perf_counter()
    print(f"n={n:5d}  max diff {np.max(np.abs(d - f)):.1e}  direct {t1 - t0:.4f}s  fft {t2 - t1:.4f}s  "
          f"sampled mass {K.discrete_l1(0.0, g):.6f}")

g = UniformGrid.from_bounds(-np.pi, np.pi, 400, "periodic")
k = gaussian_kernel(0.3).discrete_l1(0.0, g)
for kappa in (0.0, 1.0, 4.0):
    print(f"kappa={kappa:3.1f}, k={k:.4f}: slab length {contraction_horizon(kappa, k, 0.5):.4f}")
