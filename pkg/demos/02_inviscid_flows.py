"""Inviscid base flows: Hopf characteristics (1D) and 2D Euler.

Run:  python3 demos/02_inviscid_flows.py
"""

import numpy as np

from meanflow import TorusGrid, euler_solve, hopf_solve, shock_time
from meanflow.inviscid import energy, enstrophy, flow_map
from meanflow.presets import random_band, taylor_green

# -- diffuse matter: straight characteristics up to the shock time ----------
g1 = TorusGrid((256,))
x = g1.coords[0]
v0 = (0.5 * np.sin(2 * np.pi * x))[None]
tstar = shock_time(g1, v0)
print(f"shock time of 0.5 sin(2 pi x): {tstar:.6f} (exact 1/pi = {1/np.pi:.6f})")

for t in (0.0, 0.1, 0.25):
    v = hopf_solve(g1, v0, t)
    print(f"t = {t:4.2f}: max |v| = {np.max(np.abs(v)):.6f}, "
          f"max slope = {np.max(np.gradient(v[0], x)):.3f}")

disp = flow_map(g1, v0, 0.25)
print("flow map displacement at t = 0.25: max", np.max(np.abs(disp)))

# -- perfect fluid: steady vortex and conservation ---------------------------
g2 = TorusGrid((64, 64))
u0 = taylor_green(g2)
states = euler_solve(g2, u0, T=0.5, dt=1e-3, store_every=125)
print("\nTaylor-Green under Euler (steady state):")
for s in states:
    print(f"  t = {s.t:5.3f}: drift from u0 = {np.max(np.abs(s.velocity - u0)):.2e}")

u0r = random_band(g2, kmax=8, seed=3)
states = euler_solve(g2, u0r, T=0.5, dt=1e-3, store_every=125)
e0, z0 = energy(g2, states[0].velocity), enstrophy(g2, states[0].vorticity)
print("\nrandom band-limited data, invariants drift:")
for s in states:
    de = abs(energy(g2, s.velocity) - e0) / e0
    dz = abs(enstrophy(g2, s.vorticity) - z0) / z0
    print(f"  t = {s.t:5.3f}: energy {de:.2e}, enstrophy {dz:.2e}")
