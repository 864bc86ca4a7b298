"""Flat ``key = value`` experiment configuration with lossless round-tripping."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, fields

from .lattice import GaussianPacketSpec, SpatialGrid

SCENARIOS = ("traversal", "paradox", "zeno", "absorb", "firstcross", "oracle")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _strs(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class ExperimentConfig:
    """Every knob of every scenario; unused keys are ignored by a scenario."""

    scenario: str = "paradox"
    # packet and grid
    mass: float = 1.0
    x0: float = -20.0
    k0: float = 5.0
    sigma: float = 2.0
    x_min: float = -80.0
    x_max: float = 80.0
    n_x: int = 2049
    t: float = 10.0
    # traversal
    v_max_factor: float = 40.0
    window_factor: float = 2.0
    sum_rule_tol: float = 1e-3
    paradox_tol: float = 0.02
    constituent_tol: float = 0.01
    unitarity_tol: float = 1e-6
    # meter
    filter_shape: str = "gaussian"
    filter_width: float = 1.0
    alpha: float = 1.0
    zeno_alphas: tuple = (1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6, 1e7)
    zeno_shapes: tuple = ("gaussian", "boxcar")
    zeno_window: float = 3.0
    zeno_slope: float = -1.0
    zeno_slope_tol: float = 0.05
    zeno_mass_tol: float = 0.01
    zeno_shape_tol: float = 0.02
    # absorber
    U: tuple = (0.01, 0.1, 1.0, 100.0)
    absorb_tol: float = 2e-3
    absorb_large_ut: float = 1000.0
    survival_min: float = 0.99
    overlap_min: float = 0.995
    # first crossing
    crossing_times: tuple = (5.0, 10.0, 15.0)
    n_tau: int = 200
    completeness_tol: float = 2e-3
    leak_times: tuple = (0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)
    leak_width: float = 1.0
    leak_precontact_tol: float = 1e-6
    leak_contact_min: float = 1e-3
    # path-sum oracle
    dim: int = 2
    K: int = 12
    oracle_t: float = 1.0
    seeds: tuple = (0, 1, 2, 3, 4)
    oracle_tol: float = 1e-3
    trotter_tol: float = 1e-10
    seed: int = 0

    # ------------------------------------------------------------ io

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        types = {f.name: f for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            default = types[key].default
            try:
                if isinstance(default, tuple):
                    parse = _strs if default and isinstance(default[0], str) else _ints if default and isinstance(default[0], int) else _floats
                    values[key] = parse(val)
                elif isinstance(default, bool):
                    values[key] = val.lower() in ("1", "true", "yes")
                elif isinstance(default, int):
                    values[key] = int(val)
                elif isinstance(default, float):
                    values[key] = float(val)
                else:
                    values[key] = val
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from exc
        return cls(**values)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def items(self):
        for f in fields(self):
            yield f.name, getattr(self, f.name)

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.items())

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # ------------------------------------------------------------ derived objects

    def packet(self) -> GaussianPacketSpec:
        return GaussianPacketSpec(self.x0, self.k0, self.sigma, self.mass)

    def grid(self) -> SpatialGrid:
        return SpatialGrid(self.x_min, self.x_max, self.n_x)

    def validate(self) -> None:
        """Check every precondition a scenario relies on; raises ConfigError."""
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.n_x < 3 or self.n_x % 2 == 0:
            raise ConfigError(f"n_x must be odd and >= 3 so the grid contains x = 0, got {self.n_x}")
        positive = ["mass", "sigma", "t", "v_max_factor", "filter_width", "zeno_window", "leak_width", "oracle_t", "n_tau"]
        for key in positive:
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive")
        if self.window_factor < 1:
            raise ConfigError("window_factor must be >= 1 so the tau window covers [0, t]")
        if self.alpha < 1:
            raise ConfigError("alpha must be >= 1")
        for shape in (self.filter_shape, *self.zeno_shapes):
            if shape not in ("gaussian", "exponential", "boxcar"):
                raise ConfigError(f"unknown filter shape {shape!r}")
        try:
            grid = self.grid()
            spec = self.packet()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if grid.x_min > spec.x0 - 8 * spec.sigma_x or grid.x_max < abs(spec.x0) + 8 * spec.sigma_x:
            raise ConfigError("grid must span [x0 - 8 sigma, |x0| + 8 sigma]")
        if not grid.symmetric:
            raise ConfigError("grid must be symmetric about x = 0 (image construction)")
        k_nyq = 3.141592653589793 / grid.dx
        if self.k0 + 8 / (2 * self.sigma) > 0.5 * k_nyq:
            raise ConfigError("grid too coarse for the packet momentum (k0 + 4/sigma must stay below half the Nyquist wavenumber)")
        if self.scenario == "zeno":
            a = sorted(self.zeno_alphas)
            if len(a) < 3 or a[0] < 1 or a[-1] / a[0] < 1e3 * (1 - 1e-9):
                raise ConfigError("zeno_alphas need >= 3 values, all >= 1, spanning at least three decades")
        if self.scenario == "absorb" and (not self.U or min(self.U) < 0):
            raise ConfigError("U must be a non-empty list of values >= 0")
        if self.scenario == "firstcross":
            if not self.crossing_times or min(self.crossing_times) <= 0:
                raise ConfigError("crossing_times must be positive")
            if not self.leak_times or min(self.leak_times) <= 0:
                raise ConfigError("leak_times must be positive (t = 0 is excluded)")
        if self.scenario == "oracle":
            if not 1 <= self.dim <= 6:
                raise ConfigError("dim must be between 1 and 6")
            if self.K < 1 or float(self.dim) ** (self.K + 1) > 1e7:
                raise ConfigError("dim^(K+1) must not exceed 1e7 paths")
            if not self.seeds:
                raise ConfigError("seeds must not be empty")
