"""The perfect-fluid pipeline: Euler base flow, smoothed mean field U, the
Reynolds stress of the fluctuations, and the Reynolds-type balance that the
averaged field satisfies exactly (an Ito-formula identity).

Run:  python3 demos/05_reynolds_from_euler.py
"""

import numpy as np

from meanflow import (
    TorusGrid,
    decompose_expected_advection,
    euler_solve,
    reynolds_residual,
    sample_wiener,
    smooth_by_expectation,
)
from meanflow.presets import random_band

g = TorusGrid((32, 32))
u0 = random_band(g, kmax=5, seed=14, amplitude=0.8)
sigma, dt, M = 0.3, 1e-3, 512

states = euler_solve(g, u0, T=0.06, dt=dt, store_every=1)
ens = sample_wiener(M, 2, dt, 0.06, master_seed=53, sigma=sigma)

# decomposition: E[((u.grad)u) shifted] = (U.grad)U + stress
i = 40
t = states[i].t
dec = decompose_expected_advection(g, states[i].velocity, sigma, t, ens)
print(f"t = {t}: |expected advection| = {np.max(np.abs(dec.expected_advection)):.4f}")
print(f"         |(U.grad)U|         = {np.max(np.abs(dec.mean_advection)):.4f}")
print(f"         |stress|            = {np.max(np.abs(dec.stress)):.4f}")
print(f"         decomposition defect / 5SE = "
      f"{np.max(np.abs(dec.defect) / (5 * np.sqrt(dec.se_expected**2 + dec.se_stress**2) + 1e-12)):.3f}")

# the raw Reynolds-type residual of U, with its honest tolerances
idx = range(i - 2, i + 3)
times = np.array([states[j].t for j in idx])
u_series = [states[j].velocity for j in idx]
U_series = [smooth_by_expectation(g, u, sigma, float(tt))
            for tt, u in zip(times, u_series)]
rep = reynolds_residual(g, times, U_series, u_series, sigma, ens, form="raw")
tol = max(5 * rep.extras["max_se"], 10 * rep.extras["fd_error_estimate"])
print(f"\nraw Reynolds residual: max Linf = {rep.max_linf:.4e}")
print(f"tolerance max(5*SE, 10*FD) = {tol:.4e} -> "
      f"{'satisfied' if rep.max_linf <= tol else 'VIOLATED'}")
