"""Experiment configuration: a flat INI file with one section per concern.

Grammar (all keys lowercase; semicolon comments allowed)::

    [scenario]
    name = estimators | burgers-diffuse | reynolds-euler | meanfield-ns | invariants

    [torus]
    dim = 1 | 2
    size = <points per axis, power of two >= 8>

    [time]
    horizon = <T>
    dt = <step>

    [stochastic]
    nu = <viscosity>          ; exactly one of nu | sigma (nu = sigma^2 / 2)
    sigma = <noise amplitude>
    M = <path / realization count>
    master_seed = <integer>

    [initial]
    preset = constant | sine | taylor_green | random_band
    amplitude = <scale>       ; optional, default 1
    values = <c1[,c2]>        ; constant preset
    mode = <k>                ; sine preset, default 1
    kmax = <k>                ; random_band preset
    seed = <integer>          ; random_band preset

    [output]
    directory = <path>        ; optional, default "out"
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import presets
from .errors import ConfigurationError
from .inviscid import SHOCK_SAFETY, shock_time
from .torus import TorusGrid

SCENARIOS = ("estimators", "burgers-diffuse", "reynolds-euler", "meanfield-ns",
             "invariants")
PRESETS = ("constant", "sine", "taylor_green", "random_band")


@dataclass
class ExperimentConfig:
    scenario: str
    dim: int
    size: int
    horizon: float
    dt: float
    sigma: float
    nu: float
    M: int
    master_seed: int
    preset: str
    amplitude: float = 1.0
    values: tuple[float, ...] = ()
    mode: int = 1
    kmax: int = 8
    preset_seed: int = 0
    out_dir: str = "out"

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid((self.size,) * self.dim)

    def initial_field(self) -> np.ndarray:
        g = self.grid
        if self.preset == "constant":
            vals = self.values if self.values else (self.amplitude,) * self.dim
            return presets.constant_field(g, vals)
        if self.preset == "sine":
            return presets.sine_field(g, self.amplitude, self.mode)
        if self.preset == "taylor_green":
            return presets.taylor_green(g, self.amplitude)
        if self.preset == "random_band":
            return presets.random_band(g, self.kmax, self.preset_seed, self.amplitude)
        raise ConfigurationError(f"unknown preset {self.preset!r}")

    def params(self) -> dict:
        return {
            "scenario": self.scenario, "dim": self.dim, "size": self.size,
            "horizon": self.horizon, "dt": self.dt, "sigma": repr(self.sigma),
            "nu": repr(self.nu), "M": self.M, "master_seed": self.master_seed,
            "preset": self.preset, "amplitude": repr(self.amplitude),
            "values": ",".join(repr(v) for v in self.values),
            "mode": self.mode, "kmax": self.kmax, "preset_seed": self.preset_seed,
        }


def load_config(path) -> ExperimentConfig:
    """Parse and validate a config file; raises ConfigurationError on any
    problem, before any computation."""
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"config file not found: {p}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read(p)
    except configparser.Error as e:
        raise ConfigurationError(f"{p}: {e}") from None

    def get(section, key, cast, default=None):
        try:
            raw = cp.get(section, key)
        except (configparser.NoSectionError, configparser.NoOptionError):
            if default is not None:
                return default
            raise ConfigurationError(f"{p}: missing [{section}] {key}") from None
        try:
            return cast(raw)
        except ValueError:
            raise ConfigurationError(f"{p}: bad value for [{section}] {key}: {raw!r}") from None

    scenario = get("scenario", "name", str)
    if scenario not in SCENARIOS:
        raise ConfigurationError(f"{p}: unknown scenario {scenario!r}; "
                                 f"choose from {', '.join(SCENARIOS)}")
    dim = get("torus", "dim", int)
    size = get("torus", "size", int)
    horizon = get("time", "horizon", float)
    dt = get("time", "dt", float)

    has_nu = cp.has_option("stochastic", "nu")
    has_sigma = cp.has_option("stochastic", "sigma")
    if has_nu == has_sigma:
        raise ConfigurationError(f"{p}: specify exactly one of [stochastic] nu | sigma")
    if has_nu:
        nu = get("stochastic", "nu", float)
        if nu < 0:
            raise ConfigurationError(f"{p}: nu must be >= 0")
        sigma = float(np.sqrt(2.0 * nu))
    else:
        sigma = get("stochastic", "sigma", float)
        if sigma < 0:
            raise ConfigurationError(f"{p}: sigma must be >= 0")
        nu = 0.5 * sigma**2
    M = get("stochastic", "m", int)
    master_seed = get("stochastic", "master_seed", int)

    preset = get("initial", "preset", str)
    if preset not in PRESETS:
        raise ConfigurationError(f"{p}: unknown preset {preset!r}")
    values = ()
    if cp.has_option("initial", "values"):
        values = tuple(float(v) for v in cp.get("initial", "values").split(","))

    cfg = ExperimentConfig(
        scenario=scenario, dim=dim, size=size, horizon=horizon, dt=dt,
        sigma=sigma, nu=nu, M=M, master_seed=master_seed, preset=preset,
        amplitude=get("initial", "amplitude", float, 1.0),
        values=values,
        mode=get("initial", "mode", int, 1),
        kmax=get("initial", "kmax", int, 8),
        preset_seed=get("initial", "seed", int, 0),
        out_dir=get("output", "directory", str, "out"),
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    """Scenario-specific preconditions, checked before any compute."""
    try:
        grid = cfg.grid
    except Exception as e:
        raise ConfigurationError(str(e)) from None
    if cfg.horizon <= 0 or cfg.dt <= 0:
        raise ConfigurationError("horizon and dt must be positive")
    n_steps = int(round(cfg.horizon / cfg.dt))
    if abs(n_steps * cfg.dt - cfg.horizon) > 1e-9 * cfg.horizon:
        raise ConfigurationError("horizon must be an integer number of dt steps")
    if cfg.M < 1:
        raise ConfigurationError("M must be >= 1")

    if cfg.scenario == "burgers-diffuse":
        if cfg.dim != 1:
            raise ConfigurationError("burgers-diffuse is a 1D scenario")
        v0 = cfg.initial_field()
        tstar = shock_time(grid, v0)
        if cfg.horizon >= SHOCK_SAFETY * tstar:
            raise ConfigurationError(
                f"horizon {cfg.horizon} is not pre-shock: needs < {SHOCK_SAFETY} * {tstar:.6g}")
    if cfg.scenario in ("reynolds-euler", "meanfield-ns"):
        if cfg.dim != 2:
            raise ConfigurationError(f"{cfg.scenario} is a 2D scenario")
        u0 = cfg.initial_field()
        from .torus import max_divergence

        if max_divergence(grid, u0) > 1e-8:
            raise ConfigurationError("fluid scenarios need a divergence-free preset")
        umax = float(np.max(np.abs(u0)))
        limit = 0.5 * grid.spacing / max(umax, 1e-300)
        if cfg.dt > limit:
            raise ConfigurationError(
                f"dt = {cfg.dt} violates CFL 0.5 for the initial data (max {limit:.3e})")
    if cfg.scenario == "meanfield-ns" and cfg.M < 2:
        raise ConfigurationError("meanfield-ns: the stress estimator is undefined for M = 1")
