"""Spectral calculus on the flat torus: transforms, projection, exact shifts.

Run:  python3 demos/01_torus_calculus.py
"""

import numpy as np

from meanflow import (
    TorusGrid,
    advect,
    gradient,
    l2_inner,
    laplacian,
    leray_project,
    max_divergence,
    shift_by,
)
from meanflow.presets import random_band, taylor_green

grid = TorusGrid((64, 64))
x, y = grid.coords

# -- differentiation is exact on band-limited fields ------------------------
f = np.sin(2 * np.pi * x) * np.cos(4 * np.pi * y)
lap = laplacian(grid, f)
print("laplacian eigenvalue check:",
      np.max(np.abs(lap + (4 + 16) * np.pi**2 * f)))

# -- Leray projection: divergence-free part + pressure potential ------------
Y = random_band(grid, kmax=8, seed=1, divfree=False)
X, p = leray_project(grid, Y)
print("max |div X| after projection:", max_divergence(grid, X))
print("Hodge orthogonality <X, grad p>:", l2_inner(grid, X, gradient(grid, p)))

# -- the torus translation machinery: shifts by arbitrary real vectors ------
u = taylor_green(grid)
shifted = shift_by(grid, u, [0.137, -0.456])
print("shift preserves divergence-freeness:", max_divergence(grid, shifted))
roundtrip = shift_by(grid, shifted, [-0.137, 0.456])
print("shift group law (there and back):", np.max(np.abs(roundtrip - u)))

# -- dealiased advection -----------------------------------------------------
conv = advect(grid, u, u)
print("Taylor-Green advection is a pure gradient; its projection vanishes:",
      np.max(np.abs(leray_project(grid, conv).solenoidal)))
