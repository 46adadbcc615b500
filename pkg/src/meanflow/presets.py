"""Named initial-data presets shared by the scenario runner, demos and tests."""

from __future__ import annotations

import numpy as np

from .torus import TorusGrid, leray_project, to_real, to_spectral, velocity_from_stream


def constant_field(grid: TorusGrid, values) -> np.ndarray:
    """Constant vector field with the given per-component values."""
    vals = np.atleast_1d(np.asarray(values, dtype=float))
    if vals.shape != (grid.dim,):
        raise ValueError(f"need {grid.dim} component value(s), got {vals.shape}")
    out = np.empty((grid.dim,) + grid.sizes)
    for j in range(grid.dim):
        out[j] = vals[j]
    return out


def sine_field(grid: TorusGrid, amplitude: float = 1.0, mode: int = 1) -> np.ndarray:
    """1D: v(x) = A sin(2 pi k x). 2D: shear u = (A sin(2 pi k y), 0),
    which is divergence-free."""
    if grid.dim == 1:
        x = grid.coords[0]
        return (amplitude * np.sin(2.0 * np.pi * mode * x))[None, :]
    y = grid.coords[1]
    u = np.zeros((2,) + grid.sizes)
    u[0] = amplitude * np.sin(2.0 * np.pi * mode * y)
    return u


def taylor_green(grid: TorusGrid, amplitude: float = 1.0) -> np.ndarray:
    """Velocity of the Taylor-Green vortex, u = (-d/dy, d/dx) of
    psi = A sin(2 pi x) sin(2 pi y). Steady for Euler."""
    if grid.dim != 2:
        raise ValueError("taylor_green requires a 2D grid")
    x, y = grid.coords
    psi = amplitude * np.sin(2.0 * np.pi * x) * np.sin(2.0 * np.pi * y)
    return velocity_from_stream(grid, psi)


def taylor_green_stream(grid: TorusGrid, amplitude: float = 1.0) -> np.ndarray:
    x, y = grid.coords
    return amplitude * np.sin(2.0 * np.pi * x) * np.sin(2.0 * np.pi * y)


def random_band(grid: TorusGrid, kmax: int, seed: int, amplitude: float = 1.0,
                divfree: bool | None = None) -> np.ndarray:
    """Random band-limited vector field with modes |k_j| <= kmax.

    Drawn from seeded unit normals per retained spectral coefficient, then
    symmetrized by the inverse transform. In 2D the field is Leray-projected
    (divergence-free) unless ``divfree=False``; 1D fields are left as drawn.
    Normalized to unit max amplitude times ``amplitude``.
    """
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    if kmax > min(grid.sizes) // 3:
        raise ValueError("kmax exceeds the dealiased band for this grid")
    rng = np.random.default_rng(seed)
    shape = (grid.dim,) + grid.spectral_shape
    spec = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    band = np.ones(grid.spectral_shape, dtype=bool)
    for j in range(grid.dim):
        band &= np.abs(grid.wavevectors[j]) <= kmax
    band[(0,) * grid.dim] = False  # zero mean
    spec *= band
    u = to_real(grid, spec)
    if divfree is None:
        divfree = grid.dim == 2
    if divfree:
        if grid.dim == 1:
            raise ValueError("a nonzero 1D field cannot be divergence-free")
        u = leray_project(grid, u).solenoidal
    m = np.max(np.abs(u))
    if m > 0:
        u = u * (amplitude / m)
    return u
