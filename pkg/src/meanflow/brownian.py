"""Brownian machinery and mean-derivative estimators.

Wiener ensembles with per-path counter-based streams, Euler-Maruyama
diffusion sampling, forward/backward mean-derivative estimators (plain and
binned regressions), and the time-reversed perturbed flow
xi(t, m) = g(T - t, m) + sigma w(T - t) built on top of an inviscid base run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, DomainError, EstimationError, NumericalError
from .inviscid import HopfSolution
from .torus import FieldEvaluator, TorusGrid, advect, laplacian, shift_each, to_spectral

MIN_BIN_COUNT = 30


# ---------------------------------------------------------------------------
# Wiener ensembles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WienerEnsemble:
    """M independent standard Wiener paths on a shared uniform time grid.

    Increments of path ``w`` at step ``j`` are N(0, dt I), drawn from a
    stream derived deterministically from ``(master_seed, path index)`` via
    counter-based Philox, so the ensemble is bit-reproducible and any prefix
    of paths is independent of the total path count.
    """

    n_paths: int
    dim: int
    dt: float
    n_steps: int
    sigma: float
    master_seed: int
    increments: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.n_paths < 1 or self.dim < 1 or self.dt <= 0 or self.n_steps < 1:
            raise ConfigurationError("need n_paths >= 1, dim >= 1, dt > 0, n_steps >= 1")
        if self.sigma < 0:
            raise ConfigurationError("sigma must be nonnegative")
        if self.increments is None:
            inc = _draw_increments(self.n_paths, self.dim, self.dt,
                                   self.n_steps, self.master_seed)
            object.__setattr__(self, "increments", inc)

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @cached_property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @cached_property
    def values(self) -> np.ndarray:
        """Path values w(t_j), shape (M, n_steps + 1, dim); w(0) = 0."""
        vals = np.zeros((self.n_paths, self.n_steps + 1, self.dim))
        np.cumsum(self.increments, axis=1, out=vals[:, 1:, :])
        return vals

    def index_of(self, t: float) -> int:
        i = int(round(t / self.dt))
        if not (0 <= i <= self.n_steps) or abs(i * self.dt - t) > 1e-9 * max(self.dt, abs(t)):
            raise ConfigurationError(f"t = {t} is not on the ensemble time grid")
        return i

    def value_at(self, t: float) -> np.ndarray:
        return self.values[:, self.index_of(t), :]

    def restrict(self, m: int) -> "WienerEnsemble":
        """First ``m`` paths; identical to sampling with n_paths = m."""
        if not 1 <= m <= self.n_paths:
            raise ConfigurationError(f"cannot restrict {self.n_paths} paths to {m}")
        return WienerEnsemble(m, self.dim, self.dt, self.n_steps, self.sigma,
                              self.master_seed, increments=self.increments[:m])

    def coarsen(self, factor: int) -> "WienerEnsemble":
        """Same Brownian paths on a time grid coarsened by ``factor``
        (increments summed in groups); used in refinement studies."""
        if self.n_steps % factor != 0:
            raise ConfigurationError(f"{self.n_steps} steps not divisible by {factor}")
        inc = self.increments.reshape(self.n_paths, self.n_steps // factor, factor,
                                      self.dim).sum(axis=2)
        return WienerEnsemble(self.n_paths, self.dim, self.dt * factor,
                              self.n_steps // factor, self.sigma,
                              self.master_seed, increments=inc)

    def diagnostics(self) -> dict:
        """Empirical mean/variance of w(T) per axis, with standard errors."""
        wT = self.values[:, -1, :]
        var = wT.var(axis=0, ddof=1)
        return {
            "mean": wT.mean(axis=0),
            "mean_se": wT.std(axis=0, ddof=1) / np.sqrt(self.n_paths),
            "var": var,
            "var_se": var * np.sqrt(2.0 / (self.n_paths - 1)),
            "expected_var": self.horizon,
        }

    def metadata(self) -> dict:
        return {
            "M": self.n_paths,
            "dim": self.dim,
            "dt": self.dt,
            "T": self.horizon,
            "sigma": self.sigma,
            "master_seed": self.master_seed,
        }


def _draw_increments(M: int, dim: int, dt: float, K: int, master_seed: int) -> np.ndarray:
    scale = np.sqrt(dt)
    out = np.empty((M, K, dim))
    for path in range(M):
        seq = np.random.SeedSequence(master_seed, spawn_key=(path,))
        gen = np.random.Generator(np.random.Philox(seq))
        out[path] = scale * gen.standard_normal((K, dim))
    return out


def sample_wiener(M: int, dim: int, dt: float, T: float, master_seed: int,
                  sigma: float = 1.0) -> WienerEnsemble:
    """Ensemble of M standard Wiener paths on [0, T] with uniform step dt."""
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * max(T, dt):
        raise ConfigurationError(f"T = {T} is not an integer number of steps of dt = {dt}")
    return WienerEnsemble(M, dim, dt, n_steps, sigma, master_seed)


# ---------------------------------------------------------------------------
# diffusion sampling (Euler-Maruyama, additive noise)
# ---------------------------------------------------------------------------

@dataclass
class DiffusionPaths:
    """Sampled states of dx = a(t, x) dt + sigma dw on the ensemble's grid."""

    times: np.ndarray
    states: np.ndarray  # (M, K+1, dim)
    sigma: float
    wrapped: bool
    ensemble: WienerEnsemble

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    def index_of(self, t: float) -> int:
        return self.ensemble.index_of(t)


def sample_diffusion(a, sigma: float, x0, ensemble: WienerEnsemble,
                     wrap: bool = False) -> DiffusionPaths:
    """Euler-Maruyama sampling driven by the ensemble's increments.

    ``a`` is a callable ``a(t, x) -> (M, dim)`` drift (or a constant vector);
    ``x0`` is a single point or one point per path. ``wrap`` folds states
    onto the unit torus after every step.
    """
    M, K, dim = ensemble.increments.shape
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim <= 1:
        x0 = np.broadcast_to(x0.reshape(1, -1), (M, dim)).copy()
    if x0.shape != (M, dim):
        raise ConfigurationError(f"x0 shape {x0.shape} incompatible with ({M}, {dim})")
    if not callable(a):
        a_vec = np.asarray(a, dtype=float).reshape(1, dim)
        a = lambda t, x: np.broadcast_to(a_vec, x.shape)

    dt = ensemble.dt
    states = np.empty((M, K + 1, dim))
    states[:, 0] = x0 % 1.0 if wrap else x0
    x = states[:, 0].copy()
    for j in range(K):
        drift = np.asarray(a(j * dt, x), dtype=float)
        if not np.all(np.isfinite(drift)):
            raise NumericalError(f"NaN in drift at step {j}")
        x = x + drift * dt + sigma * ensemble.increments[:, j]
        if wrap:
            x %= 1.0
        states[:, j + 1] = x
    return DiffusionPaths(ensemble.times, states, sigma, wrap, ensemble)


# ---------------------------------------------------------------------------
# mean-derivative estimators
# ---------------------------------------------------------------------------

@dataclass
class MeanEstimate:
    value: np.ndarray
    se: np.ndarray
    n: int


@dataclass
class RegressionTable:
    """Binned conditional-expectation estimate: one row per retained bin."""

    centers: np.ndarray         # (nbins_total, dim)
    counts: np.ndarray          # (nbins_total,)
    values: np.ndarray          # (nbins_total, ncomp), NaN where not retained
    se: np.ndarray              # (nbins_total, ncomp)
    min_count: int
    low_count_bins: np.ndarray  # indices of bins with count < min_count

    @property
    def retained(self) -> np.ndarray:
        return self.counts >= self.min_count


def _difference_quotient(paths: DiffusionPaths, t: float, direction: str,
                         dt_steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-path quotient and the conditioning positions at time t."""
    i = paths.index_of(t)
    dt = paths.ensemble.dt * dt_steps
    if direction == "forward":
        j = i + dt_steps
        if j > paths.states.shape[1] - 1:
            raise DomainError(f"t + dt extends past the path horizon at t = {t}")
        diff = paths.states[:, j] - paths.states[:, i]
    elif direction == "backward":
        j = i - dt_steps
        if j < 0:
            raise DomainError(f"t - dt precedes the path origin at t = {t}")
        diff = paths.states[:, i] - paths.states[:, j]
    else:
        raise ConfigurationError(f"unknown direction {direction!r}")
    if paths.wrapped:
        diff = (diff + 0.5) % 1.0 - 0.5
    return diff / dt, paths.states[:, i]


def _bin_positions(positions: np.ndarray, nbins: int, wrapped: bool):
    M, dim = positions.shape
    if wrapped:
        lo = np.zeros(dim)
        hi = np.ones(dim)
    else:
        lo = positions.min(axis=0)
        hi = positions.max(axis=0) * (1 + 1e-12) + 1e-300
    widths = (hi - lo) / nbins
    idx = np.clip(((positions - lo) / widths).astype(int), 0, nbins - 1)
    flat = idx[:, 0]
    for d in range(1, dim):
        flat = flat * nbins + idx[:, d]
    axes = [lo[d] + (np.arange(nbins) + 0.5) * widths[d] for d in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([m.ravel() for m in mesh], axis=1)
    return flat, centers


def _binned_mean(samples: np.ndarray, flat_bins: np.ndarray, centers: np.ndarray,
                 min_count: int) -> RegressionTable:
    nbins_total = centers.shape[0]
    ncomp = samples.shape[1]
    counts = np.bincount(flat_bins, minlength=nbins_total).astype(int)
    sums = np.zeros((nbins_total, ncomp))
    sqs = np.zeros((nbins_total, ncomp))
    for c in range(ncomp):
        sums[:, c] = np.bincount(flat_bins, weights=samples[:, c], minlength=nbins_total)
        sqs[:, c] = np.bincount(flat_bins, weights=samples[:, c] ** 2, minlength=nbins_total)
    values = np.full((nbins_total, ncomp), np.nan)
    se = np.full((nbins_total, ncomp), np.nan)
    ok = counts >= max(min_count, 2)
    n = counts[ok, None].astype(float)
    values[ok] = sums[ok] / n
    var = np.maximum(sqs[ok] / n - values[ok] ** 2, 0.0) * n / (n - 1)
    se[ok] = np.sqrt(var / n)
    low = np.flatnonzero(counts < min_count)
    if not ok.any():
        raise EstimationError(
            f"no bin reached the minimum count {min_count}; low bins: {low.tolist()[:20]}"
        )
    return RegressionTable(centers, counts, values, se, min_count, low)


def estimate_mean_derivative(paths: DiffusionPaths, t: float, direction: str,
                             dt_steps: int = 1, conditioning: str = "trivial",
                             nbins: int = 0, min_count: int = MIN_BIN_COUNT):
    """Forward/backward mean-derivative estimate of the process at time t.

    ``conditioning="trivial"`` returns the plain ensemble mean of the
    difference quotient (a :class:`MeanEstimate`); ``"binned"`` returns the
    regression table of conditional means given the position at time t.
    """
    q, pos = _difference_quotient(paths, t, direction, dt_steps)
    if conditioning == "trivial":
        return MeanEstimate(q.mean(axis=0), q.std(axis=0, ddof=1) / np.sqrt(len(q)), len(q))
    if conditioning == "binned":
        if nbins < 1:
            raise ConfigurationError("binned conditioning requires nbins >= 1")
        flat, centers = _bin_positions(pos, nbins, paths.wrapped)
        return _binned_mean(q, flat, centers, min_count)
    raise ConfigurationError(f"unknown conditioning {conditioning!r}")


def mean_derivative_of_field(grid: TorusGrid | None, Z, paths: DiffusionPaths,
                             t: float, direction: str, dt_steps: int = 1,
                             conditioning: str = "binned", nbins: int = 0,
                             min_count: int = MIN_BIN_COUNT):
    """Mean derivative of a static field Z along the diffusion.

    The per-path samples are difference quotients of Z evaluated at the path
    positions. ``Z`` is a grid field (evaluated through its band-limited
    interpolant) or a callable ``Z(points) -> values`` for fields given
    analytically (e.g. non-periodic ones on unwrapped paths).
    """
    i = paths.index_of(t)
    dt = paths.ensemble.dt * dt_steps
    ev = Z if callable(Z) else FieldEvaluator(grid, Z)
    if direction == "forward":
        j = i + dt_steps
        if j > paths.states.shape[1] - 1:
            raise DomainError("t + dt extends past the path horizon")
        za = ev(paths.states[:, i, :])
        zb = ev(paths.states[:, j, :])
        quot = (zb - za) / dt
    elif direction == "backward":
        j = i - dt_steps
        if j < 0:
            raise DomainError("t - dt precedes the path origin")
        za = ev(paths.states[:, j, :])
        zb = ev(paths.states[:, i, :])
        quot = (zb - za) / dt
    else:
        raise ConfigurationError(f"unknown direction {direction!r}")
    samples = quot.T if quot.ndim == 2 else quot[:, None]
    if samples.ndim == 1:
        samples = samples[:, None]
    if conditioning == "trivial":
        return MeanEstimate(samples.mean(axis=0),
                            samples.std(axis=0, ddof=1) / np.sqrt(len(samples)),
                            len(samples))
    if nbins < 1:
        raise ConfigurationError("binned conditioning requires nbins >= 1")
    flat, centers = _bin_positions(paths.states[:, i, :], nbins, paths.wrapped)
    return _binned_mean(samples, flat, centers, min_count)


def field_derivative_rhs(grid: TorusGrid, Z: np.ndarray, drift, sigma: float,
                         direction: str) -> np.ndarray:
    """Right-hand side (Y . grad) Z +/- (sigma^2 / 2) laplacian Z for a static
    field, against which the binned field-derivative estimates are checked.
    ``drift`` is a constant vector or a grid field of the regression."""
    Zv = Z if Z.ndim == grid.dim + 1 else Z[None]
    drift = np.asarray(drift, dtype=float)
    if drift.ndim == 1:
        u = np.empty((grid.dim,) + grid.sizes)
        for d in range(grid.dim):
            u[d] = drift[d]
    else:
        u = drift
    sign = 1.0 if direction == "forward" else -1.0
    out = advect(grid, u, Zv) + sign * 0.5 * sigma**2 * laplacian(grid, Zv)
    return out if Z.ndim == grid.dim + 1 else out[0]


# ---------------------------------------------------------------------------
# the time-reversed perturbed flow xi(t, m) = g(T - t, m) + sigma w(T - t)
# ---------------------------------------------------------------------------

def invert_displacement(grid: TorusGrid, disp: np.ndarray, targets: np.ndarray,
                        tol: float = 1e-12, max_iter: int = 60) -> np.ndarray:
    """Solve xi + d(xi) = m (mod 1) for a periodic displacement field d."""
    pts = np.atleast_2d(np.asarray(targets, dtype=float))
    ev = FieldEvaluator(grid, disp)
    xi = pts.copy()
    for _ in range(max_iter):
        r = xi + ev(xi).T - pts
        r = (r + 0.5) % 1.0 - 0.5
        if np.max(np.abs(r)) < tol:
            return xi
        J = ev.jacobian(xi)
        if grid.dim == 1:
            xi = xi - (r[:, 0] / (1.0 + J[0, 0]))[:, None]
        else:
            a = 1.0 + J[0, 0]
            b = J[0, 1]
            c = J[1, 0]
            d = 1.0 + J[1, 1]
            det = a * d - b * c
            dx = (d * r[:, 0] - b * r[:, 1]) / det
            dy = (-c * r[:, 0] + a * r[:, 1]) / det
            xi = xi - np.stack([dx, dy], axis=1)
    raise NumericalError(f"displacement inversion stalled; residual {np.max(np.abs(r)):.3e}")


class PerturbedFlow:
    """Per-path evaluation of the perturbed, time-reversed flow.

    For a base run g on [0, T] and a Wiener ensemble w, realizes

        xi(t, m)     = g(T - t, m) + sigma w(T - t)
        xi^{-1}(t,m) = g^{-1}(T - t, m - sigma w(T - t))
        xi_t(s, m)   = g(T - s, g^{-1}(T - t, m - sigma w(T - t))) + sigma w(T - s)

    without re-simulating the base flow. Per-path fields are materialized on
    the grid label m; the Brownian part enters through exact spectral shifts
    and per-path constants.
    """

    def __init__(self, base: HopfSolution, ensemble: WienerEnsemble):
        if ensemble.dim != base.grid.dim:
            raise ConfigurationError("ensemble dimension does not match the base grid")
        if ensemble.horizon > base.horizon + 1e-12:
            raise ConfigurationError(
                f"ensemble horizon {ensemble.horizon} exceeds base horizon {base.horizon}"
            )
        self.base = base
        self.grid = base.grid
        self.ensemble = ensemble
        self.T = ensemble.horizon
        self.sigma = ensemble.sigma
        # build-time identity check: xi_t(t) = e at an interior grid time
        tmid = ensemble.times[len(ensemble.times) // 2]
        defect = self.identity_defect(float(tmid))
        if defect > 1e-8:
            raise NumericalError(f"xi_t(t) != identity: defect {defect:.3e}")

    # -- base-flow helpers ---------------------------------------------------

    def _grid_points(self) -> np.ndarray:
        return np.stack([c.ravel() for c in self.grid.coords], axis=1)

    def _base_disp(self, s: float) -> np.ndarray:
        return self.base.displacement(s)

    def _compose_disp(self, s: float, t: float) -> np.ndarray:
        """Displacement field of h = g(s) o g^{-1}(t) on the grid."""
        pts = self._grid_points()
        feet = invert_displacement(self.grid, self._base_disp(t), pts)
        vals = FieldEvaluator(self.grid, self._base_disp(s))(feet)
        vals = vals if vals.ndim == 2 else vals[None]
        h = feet + vals.T - pts
        return ((h + 0.5) % 1.0 - 0.5).T.reshape((self.grid.dim,) + self.grid.sizes)

    # -- per-path fields -------------------------------------------------------

    def xi_field(self, t: float) -> np.ndarray:
        """xi(t) sampled on the grid per path: (M, dim, *sizes), unwrapped."""
        disp = self._base_disp(self.T - t)
        w = self.ensemble.value_at(self.T - t)  # (M, dim)
        base = np.stack(self.grid.coords) + disp
        out = base[None] + self.sigma * w.reshape(w.shape[0], self.grid.dim,
                                                  *([1] * self.grid.dim))
        return out

    def xi_inverse_field(self, t: float) -> np.ndarray:
        """xi^{-1}(t) per path on the grid: (M, dim, *sizes), wrapped to [0,1)."""
        pts = self._grid_points()
        disp = self._base_disp(self.T - t)
        w = self.ensemble.value_at(self.T - t)
        out = np.empty((len(w), self.grid.dim) + self.grid.sizes)
        for i, wi in enumerate(w):
            feet = invert_displacement(self.grid, disp, (pts - self.sigma * wi))
            out[i] = (feet % 1.0).T.reshape((self.grid.dim,) + self.grid.sizes)
        return out

    def xi_t_field(self, t: float, s: float) -> np.ndarray:
        """xi_t(s) per path on the grid label m: (M, dim, *sizes)."""
        h = self._compose_disp(self.T - s, self.T - t)  # displacement of g(T-s) o g^{-1}(T-t)
        wt = self.ensemble.value_at(self.T - t)
        ws = self.ensemble.value_at(self.T - s)
        hh = to_spectral(self.grid, h)
        shifted = shift_each(self.grid, np.broadcast_to(hh, (len(wt),) + hh.shape),
                             -self.sigma * wt)
        m = np.stack(self.grid.coords)
        return m[None] + shifted + self.sigma * (ws - wt).reshape(
            len(wt), self.grid.dim, *([1] * self.grid.dim))

    def identity_defect(self, t: float) -> float:
        m = np.stack(self.grid.coords)
        return float(np.max(np.abs(self.xi_t_field(t, t) - m[None])))

    # -- statistical estimates -------------------------------------------------

    def backward_flow_derivative(self, t: float, dt_steps: int = 1):
        """Ensemble estimate of the backward quotient of xi at time t
        (per grid point); returns (mean field, SE field)."""
        dt = self.ensemble.dt * dt_steps
        a = self.xi_field(t)
        b = self.xi_field(t - dt)
        q = (a - b) / dt
        return q.mean(axis=0), q.std(axis=0, ddof=1) / np.sqrt(q.shape[0])

    def backward_relative_derivative(self, t: float, dt_steps: int = 1):
        """Ensemble estimate of the backward quotient of xi_t(s) at s = t;
        the present sigma-algebra is trivial there, so the plain mean applies."""
        dt = self.ensemble.dt * dt_steps
        m = np.stack(self.grid.coords)
        b = self.xi_t_field(t, t - dt)
        q = (m[None] - b) / dt
        return q.mean(axis=0), q.std(axis=0, ddof=1) / np.sqrt(q.shape[0])


def build_perturbed_flow(base: HopfSolution, ensemble: WienerEnsemble) -> PerturbedFlow:
    """Attach a Wiener ensemble to a solved base flow (see :class:`PerturbedFlow`)."""
    return PerturbedFlow(base, ensemble)
