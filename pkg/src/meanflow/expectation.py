"""Expectation fields over Wiener shifts and PDE residual diagnostics.

The central objects: the smoothed field E[X(m - sigma w(t))] (exactly a heat
semigroup on band-limited fields, or a Monte Carlo mean of spectral shifts),
the fluctuation field around it, the Reynolds stress of the fluctuations,
and residual evaluators for the Burgers, Reynolds-type and Navier-Stokes
equations that the smoothed fields are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .brownian import WienerEnsemble
from .errors import ConfigurationError, DomainError, EstimationError
from .torus import (
    TorusGrid,
    advect,
    laplacian,
    leray_project,
    l2_norm,
    linf_norm,
    max_divergence,
    shift_each,
    to_real,
    to_spectral,
)

_CHUNK = 256


# ---------------------------------------------------------------------------
# smoothing by expectation over the Wiener shift
# ---------------------------------------------------------------------------

def heat_multiplier(grid: TorusGrid, sigma: float, t: float) -> np.ndarray:
    """Spectral multiplier of X -> E[X(. - sigma w(t))]: exp(-(sigma^2 t / 2) |2 pi k|^2)."""
    return np.exp(-0.5 * sigma**2 * t * grid.ksq)


def smooth_by_expectation(grid: TorusGrid, X: np.ndarray, sigma: float, t: float,
                          method: str = "heat_kernel",
                          ensemble: WienerEnsemble | None = None,
                          return_se: bool = False):
    """E[X(m - sigma w(t))] for a deterministic field X.

    ``heat_kernel``: exact Gaussian averaging via the spectral multiplier.
    ``monte_carlo``: mean over the ensemble's paths of the spectrally shifted
    field; with ``return_se`` also returns the pointwise standard error.
    """
    if t < 0:
        raise DomainError("negative time in smooth_by_expectation")
    if method == "heat_kernel":
        out = to_real(grid, to_spectral(grid, X) * heat_multiplier(grid, sigma, t))
        return (out, np.zeros_like(out)) if return_se else out
    if method == "monte_carlo":
        if ensemble is None:
            raise ConfigurationError("monte_carlo smoothing requires an ensemble")
        mean, se = shifted_mean(grid, X, sigma, t, ensemble)
        return (mean, se) if return_se else mean
    raise ConfigurationError(f"unknown smoothing method {method!r}")


def shifted_mean(grid: TorusGrid, X: np.ndarray, sigma: float, t: float,
                 ensemble: WienerEnsemble, chunk: int = _CHUNK):
    """Monte Carlo mean and pointwise SE of shift(X, -sigma w(t)) over paths."""
    w = ensemble.value_at(t)
    M = len(w)
    Xh = to_spectral(grid, X)
    s = np.zeros_like(X)
    s2 = np.zeros_like(X)
    for lo in range(0, M, chunk):
        ws = w[lo:lo + chunk]
        fields = shift_each(grid, np.broadcast_to(Xh, (len(ws),) + Xh.shape),
                            -sigma * ws)
        s += fields.sum(axis=0)
        s2 += (fields**2).sum(axis=0)
    mean = s / M
    var = np.maximum(s2 / M - mean**2, 0.0) * (M / max(M - 1, 1))
    return mean, np.sqrt(var / M)


def fluctuation_field(grid: TorusGrid, X: np.ndarray, sigma: float, w_t,
                      mean: np.ndarray) -> np.ndarray:
    """One realization of the fluctuation X(m - sigma w(t)) - E[X(m - sigma w(t))].

    ``mean`` must be the matching expectation of X (heat-kernel or ensemble
    mean); divergence-free X gives a divergence-free fluctuation.
    """
    w_t = np.asarray(w_t, dtype=float)
    if w_t.ndim == 1:
        shifted = shift_each(grid, to_spectral(grid, X)[None], -sigma * w_t[None])[0]
        return shifted - mean
    shifted = shift_each(grid, np.broadcast_to(to_spectral(grid, X),
                                               (len(w_t),) + to_spectral(grid, X).shape),
                         -sigma * w_t)
    return shifted - mean[None]


# ---------------------------------------------------------------------------
# Reynolds stress of the fluctuations
# ---------------------------------------------------------------------------

def reynolds_stress(grid: TorusGrid, X: np.ndarray, sigma: float, t: float,
                    ensemble: WienerEnsemble, mean: np.ndarray | None = None,
                    project: bool = False, chunk: int = _CHUNK):
    """Ensemble mean of (U'_w . grad) U'_w for the fluctuations of X.

    ``X`` is a single field (identical realizations, centered on the exact
    heat-kernel mean by default) or a stack of per-path fields
    ``(M, dim, *sizes)`` (centered on the ensemble mean of the shifted
    fields). Returns ``(stress, se)``; ``project`` applies the Leray
    projection to the stress (SE is reported for the unprojected estimator).
    """
    w = ensemble.value_at(t)
    M = len(w)
    if M < 2:
        raise EstimationError("reynolds_stress needs at least 2 paths")
    per_path = X.ndim == grid.dim + 2
    if per_path and len(X) != M:
        raise ConfigurationError("per-path field count does not match the ensemble")

    if mean is None:
        if per_path:
            mean = ensemble_mean_shifted_fields(grid, X, sigma, w, chunk=chunk)
        else:
            mean = smooth_by_expectation(grid, X, sigma, t)

    shape = (grid.dim,) + grid.sizes
    s = np.zeros(shape)
    s2 = np.zeros(shape)
    Xh_single = None if per_path else to_spectral(grid, X)
    for lo in range(0, M, chunk):
        ws = w[lo:lo + chunk]
        if per_path:
            fh = to_spectral(grid, X[lo:lo + chunk])
        else:
            fh = np.broadcast_to(Xh_single, (len(ws),) + Xh_single.shape)
        fluct = shift_each(grid, fh, -sigma * ws) - mean[None]
        adv = _batched_self_advection(grid, fluct)
        s += adv.sum(axis=0)
        s2 += (adv**2).sum(axis=0)
    stress = s / M
    var = np.maximum(s2 / M - stress**2, 0.0) * (M / (M - 1))
    se = np.sqrt(var / M)
    if project:
        stress = leray_project(grid, stress).solenoidal
    return stress, se


def _batched_self_advection(grid: TorusGrid, u: np.ndarray) -> np.ndarray:
    """(u_b . grad) u_b per batch item; inputs (B, dim, *sizes), dealiased."""
    uh = to_spectral(grid, u) * grid.dealias_mask
    u_d = to_real(grid, uh)
    out = np.zeros_like(u_d)
    for j in range(grid.dim):
        dj = to_real(grid, 2j * np.pi * grid.wavevectors[j] * uh)
        out += u_d[:, j:j + 1] * dj
    return to_real(grid, to_spectral(grid, out) * grid.dealias_mask)


def ensemble_mean_shifted_fields(grid: TorusGrid, fields: np.ndarray, sigma: float,
                                 w: np.ndarray, chunk: int = _CHUNK) -> np.ndarray:
    """Mean over paths of shift(field_w, -sigma w), for per-path fields."""
    M = len(fields)
    s = np.zeros(fields.shape[1:])
    for lo in range(0, M, chunk):
        fh = to_spectral(grid, fields[lo:lo + chunk])
        s += shift_each(grid, fh, -sigma * w[lo:lo + chunk]).sum(axis=0)
    return s / M


# ---------------------------------------------------------------------------
# the expected-advection decomposition (Reynolds identity)
# ---------------------------------------------------------------------------

@dataclass
class AdvectionDecomposition:
    """E[((u.grad)u)(m - sigma w)] = (U.grad)U + E[(U'.grad)U'] with SEs."""

    expected_advection: np.ndarray
    mean_advection: np.ndarray
    stress: np.ndarray
    se_expected: np.ndarray
    se_stress: np.ndarray
    mean_field: np.ndarray

    @property
    def defect(self) -> np.ndarray:
        return self.expected_advection - self.mean_advection - self.stress


def decompose_expected_advection(grid: TorusGrid, u: np.ndarray, sigma: float,
                                 t: float, ensemble: WienerEnsemble,
                                 chunk: int = _CHUNK) -> AdvectionDecomposition:
    """Split the shifted advection expectation into mean flow and stress.

    Both stochastic terms are evaluated by direct Monte Carlo over the same
    paths; the mean field U is the exact heat-kernel expectation, so the
    identity holds within Monte Carlo tolerance, not by construction.
    """
    adv = advect(grid, u, u)
    first, se_first = shifted_mean(grid, adv, sigma, t, ensemble, chunk=chunk)
    U = smooth_by_expectation(grid, u, sigma, t)
    second = advect(grid, U, U)
    third, se_third = reynolds_stress(grid, u, sigma, t, ensemble, mean=U, chunk=chunk)
    return AdvectionDecomposition(first, second, third, se_first, se_third, U)


# ---------------------------------------------------------------------------
# residual reports
# ---------------------------------------------------------------------------

@dataclass
class ResidualReport:
    """Time series of norms measuring how well a field satisfies a target PDE."""

    equation: str
    orientation: str
    times: np.ndarray
    l2: np.ndarray
    linf: np.ndarray
    grid_sizes: tuple[int, ...]
    dt: float
    M: int
    sigma: float
    nu: float
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.l2 = np.asarray(self.l2, dtype=float)
        self.linf = np.asarray(self.linf, dtype=float)
        if np.any(self.l2 < 0) or np.any(self.linf < 0):
            raise ValueError("residual norms must be nonnegative")

    @property
    def max_linf(self) -> float:
        return float(np.max(self.linf)) if len(self.linf) else 0.0

    @property
    def max_l2(self) -> float:
        return float(np.max(self.l2)) if len(self.l2) else 0.0


def _check_uniform(times: np.ndarray) -> float:
    times = np.asarray(times, dtype=float)
    if len(times) < 3:
        raise ConfigurationError("need at least 3 time samples for residuals")
    steps = np.diff(times)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * steps[0]:
        raise ConfigurationError("residual evaluation expects a uniform time grid")
    return float(steps[0])


def _time_derivatives(times: np.ndarray, fields: list[np.ndarray]):
    """2nd-order d/dt per sample: central in the interior, one-sided at ends."""
    h = _check_uniform(times)
    n = len(fields)
    out = []
    for i in range(n):
        if i == 0:
            d = (-3.0 * fields[0] + 4.0 * fields[1] - fields[2]) / (2.0 * h)
        elif i == n - 1:
            d = (3.0 * fields[-1] - 4.0 * fields[-2] + fields[-3]) / (2.0 * h)
        else:
            d = (fields[i + 1] - fields[i - 1]) / (2.0 * h)
        out.append(d)
    return out


def _norms(grid: TorusGrid, fields: list[np.ndarray]):
    return (np.array([l2_norm(grid, f) for f in fields]),
            np.array([linf_norm(f) for f in fields]))


def burgers_residual(grid: TorusGrid, times, V_fields: list[np.ndarray], nu: float,
                     orientation: str = "reversed", M: int = 0,
                     sigma: float | None = None) -> ResidualReport:
    """Residual of the viscous Burgers operator on a field series.

    ``reversed`` evaluates dV/dtau + (V . grad) V - nu lap V on the series in
    its own time variable tau. ``forward`` evaluates the reversed-time field
    W(t) = V(T - t) in t, i.e. the equation literally as the time-reversed
    claim is written. Both orientations are recorded by the runner because
    the reversed-time sign convention is measured, not assumed.
    """
    if orientation not in ("forward", "reversed"):
        raise ConfigurationError(f"unknown orientation {orientation!r}")
    times = np.asarray(times, dtype=float)
    h = _check_uniform(times)
    fields = list(V_fields)
    if orientation == "forward":
        fields = fields[::-1]
        times = times[-1] - times[::-1]
    dV = _time_derivatives(times, fields)
    residuals = [dV[i] + advect(grid, fields[i], fields[i]) - nu * laplacian(grid, fields[i])
                 for i in range(len(fields))]
    l2, linf = _norms(grid, residuals)
    return ResidualReport("burgers", orientation, times, l2, linf, grid.sizes,
                          h, M, np.sqrt(2 * nu) if sigma is None else sigma, nu,
                          extras={"time_fd_order": 2})


def ito_transport_check(grid: TorusGrid, times, v_fields: list[np.ndarray],
                        sigma: float, base: str = "hopf") -> ResidualReport:
    """Transport identity for the time-dependent smoothing:

        d/dt [ H_t v(t) ] = H_t [ dv/dt ] + (sigma^2/2) lap H_t v(t)

    with H_t the heat kernel at variance sigma^2 t and dv/dt taken from the
    base equation (Hopf: -(v.grad)v; Euler: -P[(u.grad)u]). Must vanish to
    the order of the time differences.
    """
    times = np.asarray(times, dtype=float)
    h = _check_uniform(times)
    smoothed = [smooth_by_expectation(grid, v, sigma, float(t))
                for t, v in zip(times, v_fields)]
    dS = _time_derivatives(times, smoothed)
    residuals = []
    for i, (t, v) in enumerate(zip(times, v_fields)):
        if base == "hopf":
            dv = -advect(grid, v, v)
        elif base == "euler":
            dv = -leray_project(grid, advect(grid, v, v)).solenoidal
        else:
            raise ConfigurationError(f"unknown base {base!r}")
        r = dS[i] - smooth_by_expectation(grid, dv, sigma, float(t)) \
            - 0.5 * sigma**2 * laplacian(grid, smoothed[i])
        residuals.append(r)
    l2, linf = _norms(grid, residuals)
    return ResidualReport("ito-transport", "n/a", times, l2, linf, grid.sizes,
                          h, 0, sigma, 0.5 * sigma**2, extras={"time_fd_order": 2,
                                                               "base": base})


def reynolds_residual(grid: TorusGrid, times, U_fields: list[np.ndarray],
                      u_fields: list[np.ndarray], sigma: float,
                      ensemble: WienerEnsemble, form: str = "raw",
                      chunk: int = _CHUNK) -> ResidualReport:
    """Residual of the Reynolds-type equation for U = E[u(m - sigma w)].

    raw form:      dU/dt + E[((u.grad)u)(m - sigma w)] - nu lap U - grad p
    standard form: dU/dt + (U.grad)U - nu lap U - grad p + E[(U'.grad)U']

    with grad p the potential part of the expected advection term in both
    cases. Norms are reported on interior samples (central differences);
    extras carry the Monte Carlo SE level and a Richardson estimate of the
    time-differencing error.
    """
    if form not in ("raw", "standard"):
        raise ConfigurationError(f"unknown form {form!r}")
    if len(U_fields) != len(u_fields):
        raise ConfigurationError("U and u series must be aligned")
    times = np.asarray(times, dtype=float)
    h = _check_uniform(times)
    nu = 0.5 * sigma**2
    dU = _time_derivatives(times, U_fields)

    residuals, se_levels, rtimes = [], [], []
    for i in range(1, len(times) - 1):
        t = float(times[i])
        U, u = U_fields[i], u_fields[i]
        if form == "raw":
            adv = advect(grid, u, u)
            A, seA = shifted_mean(grid, adv, sigma, t, ensemble, chunk=chunk)
            PA = leray_project(grid, A).solenoidal
            r = dU[i] + PA - nu * laplacian(grid, U)
            se_levels.append(float(np.max(seA)))
        else:
            dec = decompose_expected_advection(grid, u, sigma, t, ensemble, chunk=chunk)
            grad_p = dec.expected_advection - leray_project(grid, dec.expected_advection).solenoidal
            r = dU[i] + dec.mean_advection - nu * laplacian(grid, U) - grad_p + dec.stress
            se_levels.append(float(np.max(np.sqrt(dec.se_expected**2 + dec.se_stress**2))))
        residuals.append(r)
        rtimes.append(t)

    l2, linf = _norms(grid, residuals)
    extras = {
        "time_fd_order": 2,
        "max_se": max(se_levels) if se_levels else 0.0,
        "fd_error_estimate": _fd_error_estimate(grid, times, U_fields),
    }
    return ResidualReport(f"reynolds-{form}", "n/a", np.array(rtimes), l2, linf,
                          grid.sizes, h, ensemble.n_paths, sigma, nu, extras=extras)


def ns_residual(grid: TorusGrid, times, U_fields: list[np.ndarray], nu: float,
                M: int = 0, se_dt_fields: list[np.ndarray] | None = None,
                divfree_tol: float = 1e-8) -> ResidualReport:
    """Residual of incompressible Navier-Stokes on a divergence-free series:

        dU/dt + P[(U.grad)U] - nu lap U

    (grad p_1 is the potential part of the advection, so it drops under the
    projection). Interior samples only; optional per-time SE fields of the
    time-derivative estimator enter the extras as the noise level.
    """
    times = np.asarray(times, dtype=float)
    h = _check_uniform(times)
    for U in U_fields:
        d = max_divergence(grid, U)
        if d > divfree_tol:
            raise ConfigurationError(f"series is not divergence-free: max |div| = {d:.3e}")
    dU = _time_derivatives(times, U_fields)
    residuals, rtimes = [], []
    for i in range(1, len(times) - 1):
        U = U_fields[i]
        r = dU[i] + leray_project(grid, advect(grid, U, U)).solenoidal - nu * laplacian(grid, U)
        residuals.append(r)
        rtimes.append(float(times[i]))
    l2, linf = _norms(grid, residuals)
    extras = {
        "time_fd_order": 2,
        "fd_error_estimate": _fd_error_estimate(grid, times, U_fields),
    }
    if se_dt_fields is not None:
        extras["max_se"] = float(max(np.max(s) for s in se_dt_fields))
    return ResidualReport("navier-stokes", "n/a", np.array(rtimes), l2, linf,
                          grid.sizes, h, M, np.sqrt(2 * nu), nu, extras=extras)


def _fd_error_estimate(grid: TorusGrid, times: np.ndarray, fields: list[np.ndarray]) -> float:
    """Richardson estimate of the central-difference error: compare d/dt at
    spacing h and 2h on the middle sample; the 2nd-order error is ~ the
    difference / 3."""
    if len(fields) < 5:
        return float("nan")
    i = len(fields) // 2
    h = float(times[1] - times[0])
    d1 = (fields[i + 1] - fields[i - 1]) / (2 * h)
    d2 = (fields[i + 2] - fields[i - 2]) / (4 * h)
    return float(np.max(np.abs(d1 - d2)) / 3.0)
