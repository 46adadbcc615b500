"""Inviscid reference dynamics on the torus.

Two base flows:

* diffuse matter, whose velocity solves the Hopf equation
  dv/dt + (v . grad) v = 0 and whose Lagrangian map has straight
  characteristics g(t, m) = m + t v0(m);
* perfect incompressible fluid (2D), solved pseudospectrally in
  vorticity-stream form with RK4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import ConfigurationError, DomainError, NumericalError
from .torus import (
    FieldEvaluator,
    TorusGrid,
    advect,
    curl2d,
    dealias,
    l2_inner,
    leray_project,
    max_divergence,
    to_real,
    to_spectral,
)

SHOCK_SAFETY = 0.9
CFL_NUMBER = 0.5


@dataclass
class FlowState:
    """One snapshot of an inviscid trajectory."""

    t: float
    velocity: np.ndarray
    vorticity: np.ndarray | None = None
    displacement: np.ndarray | None = None


@dataclass
class HopfSolution:
    """A pre-shock diffuse-matter run: initial velocity and horizon."""

    grid: TorusGrid
    v0: np.ndarray
    horizon: float
    shock_time: float = field(init=False)

    def __post_init__(self):
        self.shock_time = shock_time(self.grid, self.v0)
        if not self.horizon < self.shock_time:
            raise DomainError(
                f"horizon {self.horizon} is not strictly pre-shock (T* = {self.shock_time})"
            )

    def velocity(self, t: float) -> np.ndarray:
        return hopf_solve(self.grid, self.v0, t)

    def displacement(self, t: float) -> np.ndarray:
        return flow_map(self.grid, self.v0, t)


# ---------------------------------------------------------------------------
# Hopf equation via characteristics
# ---------------------------------------------------------------------------

def shock_time(grid: TorusGrid, v0: np.ndarray) -> float:
    """First time the characteristic map m -> m + t v0(m) folds.

    Returns 1/max(largest negative directional stretch); in 1D this is
    1/max(-v0') and infinity when v0' >= 0 everywhere. In 2D only real
    eigenvalues of the velocity Jacobian can fold the map.
    """
    vh = to_spectral(grid, v0)
    k = grid.wavevectors
    if grid.dim == 1:
        dv = to_real(grid, 2j * np.pi * k[0] * vh[0])
        s = float(np.max(-dv))
    else:
        J = np.empty((2, 2) + grid.sizes)
        for i in range(2):
            for j in range(2):
                J[i, j] = to_real(grid, 2j * np.pi * k[j] * vh[i])
        tr = J[0, 0] + J[1, 1]
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        disc = tr * tr - 4.0 * det
        real = disc >= 0.0
        lam_minus = (tr[real] - np.sqrt(disc[real])) / 2.0
        s = float(np.max(-lam_minus)) if lam_minus.size else 0.0
    return np.inf if s <= 0.0 else 1.0 / s


def _check_preshock(grid: TorusGrid, v0: np.ndarray, t: float) -> None:
    if t < 0:
        raise DomainError("time must be nonnegative")
    tstar = shock_time(grid, v0)
    if t > 0 and t >= SHOCK_SAFETY * tstar:
        raise DomainError(
            f"t = {t} exceeds the pre-shock safety bound {SHOCK_SAFETY} * {tstar}"
        )


def foot_points(grid: TorusGrid, v0: np.ndarray, t: float, targets: np.ndarray,
                tol: float = 1e-13, max_iter: int = 50) -> np.ndarray:
    """Solve xi + t v0(xi) = m (mod 1) for every target point m.

    Damped Newton started at xi = m; 1D falls back to bisection on points
    that fail to converge. Returns xi with shape ``targets.shape``.
    """
    pts = np.atleast_2d(np.asarray(targets, dtype=float))
    if t == 0.0:
        return pts.copy()
    ev = FieldEvaluator(grid, v0)
    xi = pts.copy()

    def residual(x):
        v = ev(x)  # (dim, npts)
        r = x + t * v.T - pts
        return (r + 0.5) % 1.0 - 0.5, v

    r, _ = residual(xi)
    rnorm = np.max(np.abs(r), axis=1)
    for _ in range(max_iter):
        active = rnorm > tol
        if not active.any():
            break
        xa = xi[active]
        ra = r[active]
        J = ev.jacobian(xa)  # (dim, dim, npts)
        if grid.dim == 1:
            step = ra[:, 0] / (1.0 + t * J[0, 0])
            delta = -step[:, None]
        else:
            a = 1.0 + t * J[0, 0]
            b = t * J[0, 1]
            c = t * J[1, 0]
            d = 1.0 + t * J[1, 1]
            det = a * d - b * c
            delta = np.empty_like(ra)
            delta[:, 0] = -(d * ra[:, 0] - b * ra[:, 1]) / det
            delta[:, 1] = -(-c * ra[:, 0] + a * ra[:, 1]) / det
        # damped update: halve the step while the residual grows
        scale = np.ones(len(xa))
        for _ in range(30):
            trial = xa + scale[:, None] * delta
            rt = trial + t * ev(trial).T - pts[active]
            rt = (rt + 0.5) % 1.0 - 0.5
            worse = np.max(np.abs(rt), axis=1) > np.max(np.abs(ra), axis=1)
            if not worse.any():
                break
            scale[worse] *= 0.5
        xi[active] = xa + scale[:, None] * delta
        r, _ = residual(xi)
        rnorm = np.max(np.abs(r), axis=1)

    bad = rnorm > tol
    if bad.any() and grid.dim == 1:
        xi[bad, 0] = _bisect_feet_1d(ev, t, pts[bad, 0], tol)
        r, _ = residual(xi)
        rnorm = np.max(np.abs(r), axis=1)
        bad = rnorm > tol
    if bad.any():
        raise NumericalError(
            f"foot-point iteration failed at {int(bad.sum())} of {len(pts)} points; "
            f"worst residual {rnorm.max():.3e} (t = {t})"
        )
    return xi.reshape(np.atleast_2d(targets).shape)


def _bisect_feet_1d(ev: FieldEvaluator, t: float, targets: np.ndarray,
                    tol: float, iters: int = 200) -> np.ndarray:
    # pre-shock, xi + t v0(xi) is strictly increasing: bracket and bisect
    vmax = float(np.max(np.abs(ev.coeffs).sum())) + 1.0
    lo = targets - abs(t) * vmax
    hi = targets + abs(t) * vmax
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        f = mid + t * ev(mid[:, None]) - targets
        lo = np.where(f < 0, mid, lo)
        hi = np.where(f < 0, hi, mid)
        if np.max(hi - lo) < tol:
            break
    return (0.5 * (lo + hi)) % 1.0


def hopf_solve(grid: TorusGrid, v0: np.ndarray, t: float) -> np.ndarray:
    """Pre-shock Hopf solution: v(t, m + t v0(m)) = v0(m), per grid point."""
    _check_preshock(grid, v0, t)
    if t == 0.0:
        return v0.copy()
    targets = np.stack([c.ravel() for c in grid.coords], axis=1)
    feet = foot_points(grid, v0, t, targets)
    vals = FieldEvaluator(grid, v0)(feet)
    return vals.reshape((grid.dim,) + grid.sizes)


def flow_map(grid: TorusGrid, v0: np.ndarray, t: float) -> np.ndarray:
    """Displacement field g(t, m) - m = t v0(m) of the straight characteristics."""
    _check_preshock(grid, v0, t)
    return t * v0


def hopf_series(grid: TorusGrid, v0: np.ndarray, times: np.ndarray) -> list[FlowState]:
    return [FlowState(float(t), hopf_solve(grid, v0, float(t)),
                      displacement=flow_map(grid, v0, float(t))) for t in times]


# ---------------------------------------------------------------------------
# 2D incompressible Euler, vorticity-stream pseudospectral RK4
# ---------------------------------------------------------------------------

def energy(grid: TorusGrid, u: np.ndarray) -> float:
    return 0.5 * l2_inner(grid, u, u)


def enstrophy(grid: TorusGrid, w: np.ndarray) -> float:
    return 0.5 * l2_inner(grid, w, w)


class _VorticityRHS:
    """-(u . grad) omega in spectral space, with the velocity recovered from
    the stream function and the constant mean flow carried separately."""

    def __init__(self, grid: TorusGrid, u_mean: np.ndarray):
        self.grid = grid
        self.u_mean = u_mean
        k = grid.wavevectors
        ksq = np.sum(k**2, axis=0)
        self.inv_ksq = np.divide(1.0, ksq, out=np.zeros_like(ksq), where=ksq > 0)
        self.ikx = 2j * np.pi * k[0]
        self.iky = 2j * np.pi * k[1]

    def velocity(self, wh: np.ndarray) -> np.ndarray:
        psi_h = -wh * self.inv_ksq / (2.0 * np.pi) ** 2
        u = to_real(self.grid, np.stack([-self.iky * psi_h, self.ikx * psi_h]))
        return u + self.u_mean.reshape((2, 1, 1))

    def __call__(self, wh: np.ndarray) -> np.ndarray:
        g = self.grid
        wh_d = dealias(g, wh)
        u = self.velocity(wh_d)
        wx = to_real(g, self.ikx * wh_d)
        wy = to_real(g, self.iky * wh_d)
        conv = u[0] * wx + u[1] * wy
        return -dealias(g, to_spectral(g, conv))


def check_cfl(grid: TorusGrid, umax: float, dt: float) -> None:
    limit = CFL_NUMBER * grid.spacing / max(umax, 1e-300)
    if dt > limit:
        raise ConfigurationError(
            f"dt = {dt} violates CFL {CFL_NUMBER}: max allowed {limit:.3e} at |u| = {umax:.3g}"
        )


def euler_solve(grid: TorusGrid, u0: np.ndarray, T: float, dt: float,
                store_every: int = 1, track_flow: bool = False,
                divfree_tol: float = 1e-8) -> list[FlowState]:
    """Integrate 2D incompressible Euler from ``u0`` to time ``T``.

    Snapshots (velocity, vorticity, optional flow-map displacement) are kept
    every ``store_every`` steps, including t = 0 and t = T.
    """
    if grid.dim != 2:
        raise ConfigurationError("euler_solve requires a 2D grid")
    if max_divergence(grid, u0) > divfree_tol:
        raise ConfigurationError("initial velocity is not divergence-free")
    check_cfl(grid, float(np.max(np.abs(u0))), dt)
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * max(T, dt):
        raise ConfigurationError(f"T = {T} is not an integer number of steps of dt = {dt}")

    u_mean = np.array([float(np.mean(u0[0])), float(np.mean(u0[1]))])
    rhs = _VorticityRHS(grid, u_mean)
    wh = to_spectral(grid, curl2d(grid, u0))
    pos = None
    if track_flow:
        pos = np.stack(grid.coords).reshape(2, -1).T.copy()  # (npts, 2), unwrapped

    def snapshot(t):
        w = to_real(grid, wh)
        u = rhs.velocity(wh)
        disp = None
        if pos is not None:
            base = np.stack(grid.coords).reshape(2, -1).T
            disp = (pos - base).T.reshape((2,) + grid.sizes).copy()
        return FlowState(t, u, vorticity=w, displacement=disp)

    out = [snapshot(0.0)]
    for step in range(n_steps):
        t = step * dt
        if track_flow:
            wh, pos = _rk4_step_with_particles(grid, rhs, wh, pos, dt)
        else:
            k1 = rhs(wh)
            k2 = rhs(wh + 0.5 * dt * k1)
            k3 = rhs(wh + 0.5 * dt * k2)
            k4 = rhs(wh + dt * k3)
            wh = wh + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(wh)):
            raise NumericalError(f"NaN in vorticity at t = {t + dt:.6g}")
        if (step + 1) % store_every == 0 or step == n_steps - 1:
            out.append(snapshot((step + 1) * dt))
    return out


def _particle_velocity(grid: TorusGrid, u: np.ndarray, pos: np.ndarray) -> np.ndarray:
    # cubic spline with periodic wrap; positions in units of grid cells
    n = grid.sizes
    coords = np.stack([pos[:, 0] * n[0], pos[:, 1] * n[1]])
    out = np.empty_like(pos)
    for c in range(2):
        out[:, c] = map_coordinates(u[c], coords, order=3, mode="grid-wrap")
    return out


def _rk4_step_with_particles(grid, rhs, wh, pos, dt):
    k1 = rhs(wh)
    p1 = _particle_velocity(grid, rhs.velocity(wh), pos)
    k2 = rhs(wh + 0.5 * dt * k1)
    p2 = _particle_velocity(grid, rhs.velocity(wh + 0.5 * dt * k1), pos + 0.5 * dt * p1)
    k3 = rhs(wh + 0.5 * dt * k2)
    p3 = _particle_velocity(grid, rhs.velocity(wh + 0.5 * dt * k2), pos + 0.5 * dt * p2)
    k4 = rhs(wh + dt * k3)
    p4 = _particle_velocity(grid, rhs.velocity(wh + dt * k3), pos + dt * p3)
    wh_new = wh + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    pos_new = pos + (dt / 6.0) * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
    return wh_new, pos_new


def euler_pressure(grid: TorusGrid, u: np.ndarray, divfree_tol: float = 1e-8) -> np.ndarray:
    """Euler pressure: the potential part of (u . grad) u, zero mean."""
    if max_divergence(grid, u) > divfree_tol:
        raise ConfigurationError("velocity is not divergence-free")
    return leray_project(grid, advect(grid, u, u)).pressure
