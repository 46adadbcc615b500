"""Independent viscous reference solvers used as ground truth.

These deliberately share no operator kernels with the rest of the package
beyond the forward/inverse transform pair: wavenumbers, dealiasing and the
nonlinear terms are assembled locally, so agreement with the main pipeline
is evidence rather than tautology.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DomainError, NumericalError
from .inviscid import FlowState
from .torus import TorusGrid, to_real, to_spectral


def _wavevectors(grid: TorusGrid) -> np.ndarray:
    axes = [np.fft.fftfreq(n, d=1.0 / n) for n in grid.sizes[:-1]]
    axes.append(np.fft.rfftfreq(grid.sizes[-1], d=1.0 / grid.sizes[-1]))
    return np.stack(np.meshgrid(*axes, indexing="ij"))


def heat_solve(grid: TorusGrid, X: np.ndarray, nu: float, t: float) -> np.ndarray:
    """Exact heat semigroup: spectral multiplier exp(-nu |2 pi k|^2 t)."""
    if t < 0:
        raise DomainError("heat_solve requires t >= 0")
    k = _wavevectors(grid)
    ksq = (2.0 * np.pi) ** 2 * np.sum(k**2, axis=0)
    return to_real(grid, to_spectral(grid, X) * np.exp(-nu * ksq * t))


# ---------------------------------------------------------------------------
# 1D viscous Burgers via the Cole-Hopf transform
# ---------------------------------------------------------------------------

def cole_hopf_burgers(grid: TorusGrid, v0: np.ndarray, nu: float, t: float) -> np.ndarray:
    """Exact (to spectral accuracy) viscous Burgers solution on the 1D torus.

    The spatial mean c of v0 is removed, the zero-mean part is transformed
    through the periodic heat potential, and the solution is restored by the
    translation v(t, m) = v_tilde(t, m - c t) + c.
    """
    if grid.dim != 1:
        raise ConfigurationError("cole_hopf_burgers is 1D only")
    if nu <= 0:
        raise DomainError("cole_hopf_burgers requires nu > 0")
    if t < 0:
        raise DomainError("negative time")
    squeeze = v0.ndim == 1
    v = v0.reshape(grid.sizes)
    c = float(np.mean(v))
    vt = v - c

    n = grid.sizes[0]
    k = np.fft.rfftfreq(n, d=1.0 / n)
    vh = to_spectral(grid, vt)
    # periodic antiderivative of the zero-mean part
    with np.errstate(divide="ignore", invalid="ignore"):
        phi0_h = np.where(k > 0, vh / (2j * np.pi * k), 0.0)
    potential = to_real(grid, phi0_h)

    expo = -potential / (2.0 * nu)
    if np.max(np.abs(expo)) > 650.0:
        raise NumericalError(
            "Cole-Hopf potential overflows exp(); increase nu or rescale the data"
        )
    theta = np.exp(expo)
    theta_h = to_spectral(grid, theta) * np.exp(-nu * (2.0 * np.pi * k) ** 2 * t)
    theta_t = to_real(grid, theta_h)
    dtheta_t = to_real(grid, 2j * np.pi * k * theta_h)
    if np.min(theta_t) <= 0.0:
        raise NumericalError("Cole-Hopf heat solution lost positivity")
    v_tilde = -2.0 * nu * dtheta_t / theta_t
    # restore the mean mode: translate by c t and add c back
    out_h = to_spectral(grid, v_tilde) * np.exp(-2j * np.pi * k * c * t)
    out = to_real(grid, out_h) + c
    return out if squeeze else out.reshape(v0.shape)


def cole_hopf_time_derivative(grid: TorusGrid, v0: np.ndarray, nu: float, t: float) -> np.ndarray:
    """Exact d/dt of :func:`cole_hopf_burgers` (no finite differences):
    differentiates v = -2 nu theta_x / theta using theta_t = nu theta_xx."""
    if grid.dim != 1:
        raise ConfigurationError("1D only")
    squeeze = v0.ndim == 1
    v = v0.reshape(grid.sizes)
    c = float(np.mean(v))
    vt = v - c
    n = grid.sizes[0]
    k = np.fft.rfftfreq(n, d=1.0 / n)
    vh = to_spectral(grid, vt)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi0_h = np.where(k > 0, vh / (2j * np.pi * k), 0.0)
    theta = np.exp(-to_real(grid, phi0_h) / (2.0 * nu))
    kap2 = (2.0 * np.pi * k) ** 2
    th_h = to_spectral(grid, theta) * np.exp(-nu * kap2 * t)
    th = to_real(grid, th_h)
    thx = to_real(grid, 2j * np.pi * k * th_h)
    tht = to_real(grid, -nu * kap2 * th_h)
    thxt = to_real(grid, -nu * kap2 * 2j * np.pi * k * th_h)
    dv_tilde = -2.0 * nu * (thxt * th - thx * tht) / th**2
    # moving-frame restoration: d/dt [vt(t, m - c t)] = dv_tilde - c * dx v_tilde
    vx_tilde = to_real(grid, 2j * np.pi * k * to_spectral(grid, -2.0 * nu * thx / th))
    shift = np.exp(-2j * np.pi * k * c * t)
    out = to_real(grid, to_spectral(grid, dv_tilde - c * vx_tilde) * shift)
    return out if squeeze else out.reshape(v0.shape)


# ---------------------------------------------------------------------------
# 2D incompressible Navier-Stokes, integrating-factor RK4 in vorticity form
# ---------------------------------------------------------------------------

def spectral_ns_2d(grid: TorusGrid, u0: np.ndarray, nu: float, T: float, dt: float,
                   store_every: int = 1) -> list[FlowState]:
    """Viscous vorticity-stream solver with an exact integrating factor for
    the diffusion term and RK4 for the advection term."""
    if grid.dim != 2:
        raise ConfigurationError("spectral_ns_2d requires a 2D grid")
    if nu < 0:
        raise DomainError("negative viscosity")
    umax = float(np.max(np.abs(u0)))
    limit = 0.5 * (1.0 / max(grid.sizes)) / max(umax, 1e-300)
    if dt > limit:
        raise ConfigurationError(f"dt = {dt} violates CFL 0.5 (max {limit:.3e})")
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * max(T, dt):
        raise ConfigurationError(f"T = {T} is not an integer number of steps of dt = {dt}")

    k = _wavevectors(grid)
    ikx = 2j * np.pi * k[0]
    iky = 2j * np.pi * k[1]
    ksq = (2.0 * np.pi) ** 2 * np.sum(k**2, axis=0)
    inv_ksq = np.divide(1.0, ksq, out=np.zeros_like(ksq), where=ksq > 0)
    mask = np.ones(grid.spectral_shape, dtype=bool)
    for j, n in enumerate(grid.sizes):
        mask &= np.abs(k[j]) <= n // 3

    u_mean = np.array([float(np.mean(u0[0])), float(np.mean(u0[1]))]).reshape(2, 1, 1)

    def vel(wh):
        psi_h = -wh * inv_ksq
        ux = to_real(grid, -iky * psi_h)
        uy = to_real(grid, ikx * psi_h)
        return np.stack([ux, uy]) + u_mean

    def nonlinear(wh):
        whd = wh * mask
        u = vel(whd)
        wx = to_real(grid, ikx * whd)
        wy = to_real(grid, iky * whd)
        return -(to_spectral(grid, u[0] * wx + u[1] * wy)) * mask

    w0 = to_real(grid, 1j * 2.0 * np.pi * (k[0] * to_spectral(grid, u0[1])
                                           - k[1] * to_spectral(grid, u0[0])))
    wh = to_spectral(grid, w0)
    E = np.exp(-nu * ksq * dt / 2.0)
    E2 = E * E

    out = [FlowState(0.0, vel(wh), vorticity=to_real(grid, wh))]
    for step in range(n_steps):
        n1 = nonlinear(wh)
        a = E * (wh + 0.5 * dt * n1)
        n2 = nonlinear(a)
        b = E * wh + 0.5 * dt * n2
        n3 = nonlinear(b)
        c = E2 * wh + dt * E * n3
        n4 = nonlinear(c)
        wh = E2 * wh + (dt / 6.0) * (E2 * n1 + 2.0 * E * (n2 + n3) + n4)
        if not np.all(np.isfinite(wh)):
            raise NumericalError(f"NaN in oracle vorticity at t = {(step + 1) * dt:.6g}")
        if (step + 1) % store_every == 0 or step == n_steps - 1:
            out.append(FlowState((step + 1) * dt, vel(wh), vorticity=to_real(grid, wh)))
    return out
