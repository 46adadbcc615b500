"""The mean-field interacting ensemble behind the Navier-Stokes construction.

M velocity-field realizations u_w evolve under per-realization forces built
from the ensemble's own Reynolds stress:

    du_w/dt = -P[(u_w . grad) u_w] + f_w,
    f_w(m)  = G(m + sigma w(t)),
    G       = P[ mean_w (U'_w . grad) U'_w ],
    U'_w    = u_w(. - sigma w(t)) - mean_w' u_w'(. - sigma w'(t)),

and the extracted mean field UU(t, m) = mean_w u_w(t, m - sigma w(t)) is
compared against a viscous Navier-Stokes oracle with nu = sigma^2 / 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .brownian import WienerEnsemble, sample_wiener
from .errors import ConfigurationError, EstimationError, NumericalError
from .expectation import ResidualReport, ns_residual
from .inviscid import check_cfl
from .oracles import spectral_ns_2d
from .torus import (
    TorusGrid,
    dealias,
    l2_norm,
    leray_project_spectral,
    max_divergence,
    spectral_tail_fraction,
    to_real,
    to_spectral,
)


@dataclass
class EnsembleState:
    """All realizations at one time: spectral velocities plus the ensemble."""

    grid: TorusGrid
    t: float
    fields_h: np.ndarray          # (M, dim, *spectral_shape)
    ensemble: WienerEnsemble

    @property
    def n_real(self) -> int:
        return self.fields_h.shape[0]

    def velocities(self) -> np.ndarray:
        return to_real(self.grid, self.fields_h)

    def shifted_velocities(self, chunk: int = 256) -> np.ndarray:
        """Per-realization u_w(m - sigma w_w(t)), real fields."""
        w = self.ensemble.value_at(self.t)
        out = np.empty((self.n_real, self.grid.dim) + self.grid.sizes)
        for lo in range(0, self.n_real, chunk):
            ph = _shift_phases_batch(self.grid, -self.ensemble.sigma * w[lo:lo + chunk])
            out[lo:lo + chunk] = to_real(self.grid, self.fields_h[lo:lo + chunk] * ph[:, None])
        return out


def _shift_phases_batch(grid: TorusGrid, xs: np.ndarray) -> np.ndarray:
    """exp(i 2 pi k . x_b) for a batch of shift vectors, shape (B, *spectral)."""
    phase = np.zeros((len(xs),) + grid.spectral_shape)
    for j in range(grid.dim):
        phase = phase + 2.0 * np.pi * grid.wavevectors[j] * xs[:, j].reshape(
            (-1,) + (1,) * grid.dim)
    return np.exp(1j * phase)


def make_ensemble_state(grid: TorusGrid, u0: np.ndarray, ensemble: WienerEnsemble,
                        divfree_tol: float = 1e-8) -> EnsembleState:
    """Initial state with every realization at u0 (the shared initial datum)."""
    if grid.dim != 2:
        raise ConfigurationError("the forced mean-field system is 2D")
    if max_divergence(grid, u0) > divfree_tol:
        raise ConfigurationError("u0 is not divergence-free")
    u0h = to_spectral(grid, u0)
    fields_h = np.broadcast_to(u0h, (ensemble.n_paths,) + u0h.shape).copy()
    return EnsembleState(grid, 0.0, fields_h, ensemble)


def ensemble_mean_shifted(state: EnsembleState, chunk: int = 256) -> np.ndarray:
    """UU(t, m) = mean over realizations of u_w(t, m - sigma w_w(t));
    divergence-free because each shifted realization is."""
    w = state.ensemble.value_at(state.t)
    sigma = state.ensemble.sigma
    s = np.zeros((state.grid.dim,) + state.grid.sizes)
    for lo in range(0, state.n_real, chunk):
        ph = _shift_phases_batch(state.grid, -sigma * w[lo:lo + chunk])
        s += to_real(state.grid, state.fields_h[lo:lo + chunk] * ph[:, None]).sum(axis=0)
    return s / state.n_real


def _self_advection_h(grid: TorusGrid, uh_d: np.ndarray) -> np.ndarray:
    """Dealiased (u . grad) u in spectral space; input is a dealiased spectral
    velocity of shape (dim, *spec) or batched (M, dim, *spec)."""
    u = to_real(grid, uh_d)
    batched = uh_d.ndim == grid.dim + 2
    out = np.zeros_like(u)
    for j in range(grid.dim):
        dj = to_real(grid, 2j * np.pi * grid.wavevectors[j] * uh_d)
        uj = u[:, j:j + 1] if batched else u[j:j + 1]
        out += uj * dj
    return dealias(grid, to_spectral(grid, out))


def _stress_from_advections(grid: TorusGrid, uh_d: np.ndarray, advh: np.ndarray,
                            phases_minus: np.ndarray):
    """Spectral G = P[ mean (U'_w . grad) U'_w ] via the exact sample identity

        mean[(U'_w . grad) U'_w] = mean[shift_w((u_w . grad) u_w)] - (S . grad) S,

    valid because same-path constant shifts commute with the dealiased
    pseudospectral product and the fluctuations are centered on the sample
    mean S. Reuses the per-realization advections already computed for the
    Euler term. Returns (G_h, S_h)."""
    A_h = (advh * phases_minus[:, None]).mean(axis=0)
    S_h = (uh_d * phases_minus[:, None]).mean(axis=0)
    stress_h = A_h - _self_advection_h(grid, S_h)
    Gh = leray_project_spectral(grid, dealias(grid, stress_h))[0]
    return Gh, S_h


def ensemble_force(state: EnsembleState):
    """The projected ensemble stress G and the per-realization forces
    f_w(m) = G(m + sigma w_w(t)). Returns (G, forces) as real fields."""
    if state.n_real < 2:
        raise EstimationError("ensemble force needs at least 2 realizations")
    w = state.ensemble.value_at(state.t)
    sigma = state.ensemble.sigma
    phases_minus = _shift_phases_batch(state.grid, -sigma * w)
    uh_d = dealias(state.grid, state.fields_h)
    advh = _self_advection_h(state.grid, uh_d)
    Gh, _ = _stress_from_advections(state.grid, uh_d, advh, phases_minus)
    fh = Gh[None] * np.conj(phases_minus)[:, None]
    return to_real(state.grid, Gh), to_real(state.grid, fh)


def _rhs_batch(grid: TorusGrid, fields_h: np.ndarray, phases_minus: np.ndarray,
               with_force: bool) -> np.ndarray:
    """-P[(u_w . grad) u_w] + f_w in spectral space, G recomputed from the
    given stage fields; the Wiener shift enters through frozen phases."""
    uh_d = dealias(grid, fields_h)
    advh = _self_advection_h(grid, uh_d)
    rhs = -leray_project_spectral(grid, advh)[0]
    if with_force:
        Gh, _ = _stress_from_advections(grid, uh_d, advh, phases_minus)
        rhs = rhs + Gh[None] * np.conj(phases_minus)[:, None]
    return rhs


def step_forced_system(state: EnsembleState, dt: float,
                       check_cfl_now: bool = True) -> EnsembleState:
    """One RK4 step of all realizations.

    The ensemble statistic G is recomputed at every RK stage from the stage
    fields; the Brownian path values are frozen at the step's left endpoint.
    Divergence-freeness is re-enforced by projection after the step.
    """
    grid = state.grid
    sigma = state.ensemble.sigma
    w = state.ensemble.value_at(state.t)
    with_force = sigma > 0.0 and state.n_real >= 2
    phases = _shift_phases_batch(grid, -sigma * w) if with_force else None
    if check_cfl_now:
        umax = float(np.max(np.abs(to_real(grid, state.fields_h))))
        check_cfl(grid, umax, dt)

    k1 = _rhs_batch(grid, state.fields_h, phases, with_force)
    k2 = _rhs_batch(grid, state.fields_h + 0.5 * dt * k1, phases, with_force)
    k3 = _rhs_batch(grid, state.fields_h + 0.5 * dt * k2, phases, with_force)
    k4 = _rhs_batch(grid, state.fields_h + dt * k3, phases, with_force)
    new_h = state.fields_h + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    new_h = leray_project_spectral(grid, new_h)[0]
    if not np.all(np.isfinite(new_h)):
        raise NumericalError(f"NaN in ensemble step at t = {state.t + dt:.6g}")
    return EnsembleState(grid, state.t + dt, new_h, state.ensemble)


@dataclass
class MeanfieldResult:
    """Output of a forced mean-field run."""

    times: np.ndarray
    mean_fields: list[np.ndarray]          # UU snapshots
    residual: ResidualReport
    oracle_times: np.ndarray
    oracle_errors: np.ndarray              # relative L2 error of UU vs oracle
    params: dict
    under_resolved: bool
    max_tail_fraction: float


def run_meanfield_experiment(grid: TorusGrid, u0: np.ndarray, sigma: float,
                             T: float, dt: float, M: int, master_seed: int,
                             snapshot_every: int = 25,
                             compare_oracle: bool = True) -> MeanfieldResult:
    """Evolve the forced ensemble on [0, T] and diagnose the mean field.

    Emits UU snapshots every ``snapshot_every`` steps, the Navier-Stokes
    residual of the snapshot series (with the Monte Carlo SE of the time
    derivative recorded), and the relative L2 error against the independent
    viscous oracle at nu = sigma^2 / 2.
    """
    if M < 2:
        raise ConfigurationError("mean-field stress is undefined for M < 2")
    if max_divergence(grid, u0) > 1e-8:
        raise ConfigurationError("u0 is not divergence-free")
    check_cfl(grid, float(np.max(np.abs(u0))), dt)
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * max(T, dt):
        raise ConfigurationError(f"T = {T} is not an integer number of steps of dt = {dt}")
    if n_steps % snapshot_every != 0:
        raise ConfigurationError("snapshot_every must divide the step count")

    ens = sample_wiener(M, 2, dt, T, master_seed, sigma=sigma)
    state = make_ensemble_state(grid, u0, ens)

    times = [0.0]
    mean_fields = [ensemble_mean_shifted(state)]
    shifted_snaps = [state.shifted_velocities()]
    max_tail = spectral_tail_fraction(grid, u0)
    e0 = l2_norm(grid, u0) ** 2

    for step in range(n_steps):
        state = step_forced_system(state, dt, check_cfl_now=(step % 10 == 0))
        if (step + 1) % snapshot_every == 0:
            u_all = state.velocities()
            energy = float(np.mean(np.sum(u_all**2, axis=1)))
            if e0 > 0 and energy > 10.0 * e0:
                raise NumericalError(
                    f"ensemble energy exceeded 10x initial at t = {state.t:.6g}")
            max_tail = max(max_tail, float(np.max(
                [spectral_tail_fraction(grid, u_all[i]) for i in range(0, M, max(M // 8, 1))])))
            times.append(state.t)
            mean_fields.append(ensemble_mean_shifted(state))
            shifted_snaps.append(state.shifted_velocities())

    times = np.asarray(times)
    # SE of the central-difference d/dt UU at interior snapshots
    se_dt = []
    h = times[1] - times[0]
    for i in range(1, len(times) - 1):
        d = (shifted_snaps[i + 1] - shifted_snaps[i - 1]) / (2 * h)
        se_dt.append(d.std(axis=0, ddof=1) / np.sqrt(M))
    residual = ns_residual(grid, times, mean_fields, nu=0.5 * sigma**2, M=M,
                           se_dt_fields=se_dt)

    if compare_oracle:
        oracle = spectral_ns_2d(grid, u0, 0.5 * sigma**2, T, dt,
                                store_every=snapshot_every)
        otimes = np.array([s.t for s in oracle])
        errs = []
        for tU, U in zip(times, mean_fields):
            k = int(np.argmin(np.abs(otimes - tU)))
            ref = oracle[k].velocity
            errs.append(l2_norm(grid, U - ref) / max(l2_norm(grid, ref), 1e-300))
        oracle_times, oracle_errors = times, np.asarray(errs)
    else:
        oracle_times, oracle_errors = np.array([]), np.array([])

    params = {
        "grid": grid.sizes, "T": T, "dt": dt, "M": M, "sigma": sigma,
        "nu": 0.5 * sigma**2, "master_seed": master_seed,
        "snapshot_every": snapshot_every,
    }
    return MeanfieldResult(times, mean_fields, residual, oracle_times,
                           oracle_errors, params, max_tail > 1e-6, max_tail)
