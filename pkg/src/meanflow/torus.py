"""Geometry and spectral calculus on the flat unit torus T^n (n = 1, 2).

Field conventions used throughout the package:

* a grid is a :class:`TorusGrid` with ``sizes`` points per axis, points
  ``m_j = j/N`` (no duplicated endpoint), period 1 per axis;
* a scalar field is a real ``ndarray`` of shape ``grid.sizes``;
* a vector field is a real ``ndarray`` of shape ``(grid.dim, *grid.sizes)``;
* a spectral field is a complex ``ndarray`` whose trailing axes follow the
  real-FFT half-spectrum layout ``grid.spectral_shape``.

All operations act on the trailing grid axes, so arbitrary leading batch
axes (vector components, ensemble members) are supported everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.fft as _fft

_FFT_WORKERS = 1


def set_fft_workers(n: int) -> None:
    """Set the worker count handed to scipy.fft. Results are bit-identical
    for any value; this is a throughput knob only."""
    global _FFT_WORKERS
    if n < 1:
        raise ValueError("worker count must be >= 1")
    _FFT_WORKERS = int(n)


def get_fft_workers() -> int:
    return _FFT_WORKERS


class GridError(ValueError):
    """Invalid grid construction or mismatched grids."""


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on the unit flat torus.

    Parameters
    ----------
    sizes : tuple of int
        Points per axis; each a power of two >= 8. Length 1 or 2.
    """

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if len(sizes) not in (1, 2):
            raise GridError(f"torus dimension must be 1 or 2, got {len(sizes)}")
        for n in sizes:
            if n < 8 or not _is_power_of_two(n):
                raise GridError(f"grid size {n} is not a power of two >= 8")

    @property
    def dim(self) -> int:
        return len(self.sizes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return self.sizes[:-1] + (self.sizes[-1] // 2 + 1,)

    @property
    def npoints(self) -> int:
        return int(np.prod(self.sizes))

    @property
    def spacing(self) -> float:
        return 1.0 / max(self.sizes)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Meshgrid coordinate arrays (indexing='ij'), each of shape ``sizes``."""
        axes = [np.arange(n) / n for n in self.sizes]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def wavevectors(self) -> np.ndarray:
        """Integer wavevectors, shape ``(dim, *spectral_shape)``.

        Full-FFT ordering on leading axes, non-negative half-spectrum on the
        last axis (real-FFT layout).
        """
        axes = [np.fft.fftfreq(n, d=1.0 / n) for n in self.sizes[:-1]]
        axes.append(np.fft.rfftfreq(self.sizes[-1], d=1.0 / self.sizes[-1]))
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def ksq(self) -> np.ndarray:
        """|2*pi*k|^2 multiplier array, shape ``spectral_shape``."""
        return (2.0 * np.pi) ** 2 * np.sum(self.wavevectors**2, axis=0)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean 2/3-rule mask: keep |k_j| <= floor(N_j/3) per axis."""
        mask = np.ones(self.spectral_shape, dtype=bool)
        for j, n in enumerate(self.sizes):
            mask &= np.abs(self.wavevectors[j]) <= n // 3
        return mask

    @cached_property
    def _inv_ksq_raw(self) -> np.ndarray:
        """1/|k|^2 with the k=0 entry zeroed (integer wavevectors)."""
        ksq = np.sum(self.wavevectors**2, axis=0)
        return np.divide(1.0, ksq, out=np.zeros_like(ksq), where=ksq > 0)

    @cached_property
    def _parseval_weights(self) -> np.ndarray:
        """Per-mode multiplicity of the half-spectrum (2 for interior k_last)."""
        w = np.full(self.spectral_shape, 2.0)
        klast = self.wavevectors[-1]
        n = self.sizes[-1]
        w[klast == 0] = 1.0
        w[klast == n // 2] = 1.0
        return w

    def check_same(self, other: "TorusGrid") -> None:
        if self.sizes != other.sizes:
            raise GridError(f"grid mismatch: {self.sizes} vs {other.sizes}")


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def to_spectral(grid: TorusGrid, field: np.ndarray) -> np.ndarray:
    """Forward real FFT over the trailing grid axes, normalized so that the
    k=0 coefficient is the field mean."""
    axes = tuple(range(-grid.dim, 0))
    if field.shape[-grid.dim:] != grid.sizes:
        raise GridError(f"field shape {field.shape} does not end with {grid.sizes}")
    return _fft.rfftn(field, axes=axes, workers=_FFT_WORKERS) / grid.npoints


def to_real(grid: TorusGrid, spec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_spectral`."""
    axes = tuple(range(-grid.dim, 0))
    if spec.shape[-grid.dim:] != grid.spectral_shape:
        raise GridError(f"spectrum shape {spec.shape} does not end with {grid.spectral_shape}")
    # the scaled temporary is disposable, so the transform may work in place
    return _fft.irfftn(spec * grid.npoints, s=grid.sizes, axes=axes,
                       workers=_FFT_WORKERS, overwrite_x=True)


# ---------------------------------------------------------------------------
# differential operators (spectral, exact on the band-limited representative)
# ---------------------------------------------------------------------------

def gradient(grid: TorusGrid, f: np.ndarray) -> np.ndarray:
    """Gradient of a scalar field; returns shape ``(dim, *sizes)``."""
    fh = to_spectral(grid, f)
    parts = [to_real(grid, 2j * np.pi * grid.wavevectors[j] * fh) for j in range(grid.dim)]
    return np.stack(parts)


def divergence(grid: TorusGrid, u: np.ndarray) -> np.ndarray:
    """Divergence of a vector field of shape ``(dim, *sizes)``."""
    if u.shape != (grid.dim,) + grid.sizes:
        raise GridError(f"vector field shape {u.shape} != {(grid.dim,) + grid.sizes}")
    uh = to_spectral(grid, u)
    div_h = np.sum(2j * np.pi * grid.wavevectors * uh, axis=0)
    return to_real(grid, div_h)


def laplacian(grid: TorusGrid, f: np.ndarray) -> np.ndarray:
    """Laplacian of a scalar or vector field (applied componentwise)."""
    return to_real(grid, -grid.ksq * to_spectral(grid, f))


def curl2d(grid: TorusGrid, u: np.ndarray) -> np.ndarray:
    """Scalar vorticity d(u_y)/dx - d(u_x)/dy of a 2D vector field."""
    if grid.dim != 2:
        raise GridError("curl2d requires a 2D grid")
    uh = to_spectral(grid, u)
    k = grid.wavevectors
    return to_real(grid, 2j * np.pi * (k[0] * uh[1] - k[1] * uh[0]))


def velocity_from_stream(grid: TorusGrid, psi: np.ndarray) -> np.ndarray:
    """u = (-d(psi)/dy, d(psi)/dx); divergence-free by construction."""
    g = gradient(grid, psi)
    return np.stack([-g[1], g[0]])


class LerayResult(NamedTuple):
    solenoidal: np.ndarray
    pressure: np.ndarray


def leray_project(grid: TorusGrid, Y: np.ndarray) -> LerayResult:
    """L2-orthogonal projection onto divergence-free fields.

    Returns ``(X, p)`` with ``X = Y - grad p``, ``div X = 0`` and ``p`` of
    zero mean. The k=0 mode passes through unchanged.
    """
    Yh = to_spectral(grid, Y)
    Xh, ph = leray_project_spectral(grid, Yh)
    return LerayResult(to_real(grid, Xh), to_real(grid, ph))


def leray_project_spectral(grid: TorusGrid, Yh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spectral-space Leray projection; ``Yh`` has a leading component axis."""
    k = grid.wavevectors
    inv = grid._inv_ksq_raw
    kdotY_inv = np.sum(k * Yh, axis=-grid.dim - 1, keepdims=True)
    kdotY_inv *= inv
    Xh = Yh - k * kdotY_inv
    ph = np.squeeze(kdotY_inv, axis=-grid.dim - 1) / (2j * np.pi)
    return Xh, ph


# ---------------------------------------------------------------------------
# exact translations (the torus global-parallelism shift)
# ---------------------------------------------------------------------------

def _shift_phases(grid: TorusGrid, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(grid.dim)
    phase = np.zeros(grid.spectral_shape)
    for j in range(grid.dim):
        phase = phase + 2.0 * np.pi * grid.wavevectors[j] * x[j]
    return np.exp(1j * phase)


def shift_by(grid: TorusGrid, field: np.ndarray, x) -> np.ndarray:
    """Evaluate ``m -> field(m + x)`` for an arbitrary real vector ``x``.

    Computed exactly on the band-limited representative via spectral phase
    factors, so non-grid shifts are legal and lattice shifts are identities.
    """
    return to_real(grid, to_spectral(grid, field) * _shift_phases(grid, x))


def shift_each(grid: TorusGrid, fields_h: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Batched shift: spectral fields ``(B, ..., *spectral_shape)`` shifted by
    per-item vectors ``xs`` of shape ``(B, dim)``; returns real fields."""
    xs = np.asarray(xs, dtype=float).reshape(len(xs), grid.dim)
    phase = np.zeros((len(xs),) + grid.spectral_shape)
    for j in range(grid.dim):
        phase = phase + 2.0 * np.pi * grid.wavevectors[j] * xs[:, j].reshape(
            (-1,) + (1,) * grid.dim
        )
    phases = np.exp(1j * phase)
    extra = fields_h.ndim - grid.dim - 1
    shaped = phases.reshape(phases.shape[:1] + (1,) * extra + phases.shape[1:])
    return to_real(grid, fields_h * shaped)


# ---------------------------------------------------------------------------
# nonlinear advection with 2/3 dealiasing
# ---------------------------------------------------------------------------

def dealias(grid: TorusGrid, spec: np.ndarray) -> np.ndarray:
    return spec * grid.dealias_mask


def advect(grid: TorusGrid, u: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Pseudospectral (u . grad) Z with the 2/3 rule on inputs and output.

    ``Z`` may be a scalar field or a vector field; the result has the shape
    of ``Z``.
    """
    if u.shape != (grid.dim,) + grid.sizes:
        raise GridError(f"advecting velocity has shape {u.shape}, expected {(grid.dim,) + grid.sizes}")
    if Z.shape[-grid.dim:] != grid.sizes:
        raise GridError("advected field lives on a different grid")
    u_d = to_real(grid, dealias(grid, to_spectral(grid, u)))
    Zh = dealias(grid, to_spectral(grid, Z))
    out = np.zeros_like(Z, dtype=float)
    for j in range(grid.dim):
        dZ = to_real(grid, 2j * np.pi * grid.wavevectors[j] * Zh)
        out = out + u_d[j] * dZ
    return to_real(grid, dealias(grid, to_spectral(grid, out)))


# ---------------------------------------------------------------------------
# inner products, norms, diagnostics
# ---------------------------------------------------------------------------

def l2_inner(grid: TorusGrid, X: np.ndarray, Y: np.ndarray) -> float:
    """Mean over grid points of <X(m), Y(m)> (unit-volume torus); works for
    scalar fields and for vector fields with a leading component axis."""
    if X.shape != Y.shape:
        raise GridError(f"shape mismatch {X.shape} vs {Y.shape}")
    return float(np.sum(X * Y) / grid.npoints)


def l2_norm(grid: TorusGrid, X: np.ndarray) -> float:
    return float(np.sqrt(l2_inner(grid, X, X)))


def linf_norm(X: np.ndarray) -> float:
    return float(np.max(np.abs(X)))


def max_divergence(grid: TorusGrid, u: np.ndarray) -> float:
    """max |div u|, the divergence-free defect used by the divfree flag."""
    return linf_norm(divergence(grid, u))


def spectral_tail_fraction(grid: TorusGrid, field: np.ndarray) -> float:
    """Fraction of spectral energy carried by modes with some |k_j| > N_j/3.

    Used as the under-resolution flag for nonlinear runs.
    """
    fh = to_spectral(grid, field)
    w = grid._parseval_weights
    e = w * np.abs(fh) ** 2
    total = float(np.sum(e))
    if total == 0.0:
        return 0.0
    tail = float(np.sum(e * ~grid.dealias_mask))
    return tail / total


# ---------------------------------------------------------------------------
# band-limited evaluation at arbitrary points
# ---------------------------------------------------------------------------

class FieldEvaluator:
    """Evaluate a grid field (and its first derivatives) at arbitrary points.

    The trigonometric interpolant is summed directly over its nonnegligible
    modes, so evaluation is exact (to round-off) for band-limited fields.
    ``values`` may be scalar ``sizes`` or vector ``(ncomp, *sizes)``.
    """

    def __init__(self, grid: TorusGrid, values: np.ndarray, tol: float = 1e-14):
        self.grid = grid
        vec = values.reshape((-1,) + grid.sizes)
        full = _fft.fftn(vec, axes=tuple(range(-grid.dim, 0)), workers=_FFT_WORKERS)
        full /= grid.npoints
        axes = [np.fft.fftfreq(n, d=1.0 / n) for n in grid.sizes]
        kgrids = np.meshgrid(*axes, indexing="ij")
        mags = np.max(np.abs(full), axis=0)
        keep = mags > tol * max(mags.max(), 1e-300)
        self.kvecs = np.stack([kg[keep] for kg in kgrids], axis=1)  # (nmodes, dim)
        self.coeffs = full[:, keep]  # (ncomp, nmodes)
        self.ncomp = vec.shape[0]
        self.scalar = values.ndim == grid.dim

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Values at ``points`` of shape ``(npts, dim)``; returns ``(npts,)``
        for scalar input fields, else ``(ncomp, npts)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        phases = np.exp(2j * np.pi * (pts @ self.kvecs.T))  # (npts, nmodes)
        vals = np.real(phases @ self.coeffs.T).T  # (ncomp, npts)
        return vals[0] if self.scalar else vals

    def jacobian(self, points: np.ndarray) -> np.ndarray:
        """Derivatives d(values_i)/d(x_j) at points: shape ``(ncomp, dim, npts)``
        (leading axis dropped for scalar input)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        phases = np.exp(2j * np.pi * (pts @ self.kvecs.T))
        out = np.empty((self.ncomp, self.grid.dim, pts.shape[0]))
        for j in range(self.grid.dim):
            cj = self.coeffs * (2j * np.pi * self.kvecs[:, j])
            out[:, j, :] = np.real(phases @ cj.T).T
        return out[0] if self.scalar else out


def evaluate_at(grid: TorusGrid, field: np.ndarray, points: np.ndarray) -> np.ndarray:
    """One-shot band-limited evaluation of ``field`` at ``points``."""
    return FieldEvaluator(grid, field)(points)
