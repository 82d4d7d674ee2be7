"""Flat TOML run configuration and analytic field generators."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import tomli

from .grid import DiskRegion, Grid, RectRegion
from .nonsmooth import beta_from_name
from .optimizer import OptimizerConfig

__all__ = ["ConfigError", "RunConfig", "load_config", "make_grid", "make_field", "GENERATORS"]

GENERATORS = ("constant", "gaussian", "disk", "rect", "manufactured", "shape_state", "csv")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass
class RunConfig:
    # geometry
    n: int = 64
    extent: list = field(default_factory=lambda: [0.0, 1.0, 0.0, 1.0])
    e_region: str = "rect"
    e_params: list = field(default_factory=lambda: [0.4, 0.6, 0.4, 0.6])
    # problem data
    beta: str = "max0"
    beta_params: list = field(default_factory=list)
    alpha: float = 1e-3
    eps_source: bool = True
    f: str = "constant"
    f_params: list = field(default_factory=lambda: [1.0])
    f_path: str = ""
    y_d: str = "constant"
    y_d_params: list = field(default_factory=lambda: [0.0])
    y_d_path: str = ""
    anchor: str = ""
    anchor_params: list = field(default_factory=list)
    anchor_path: str = ""
    control: str = "disk"
    control_params: list = field(default_factory=lambda: [0.5, 0.5, 0.3])
    control_path: str = ""
    truth: str = ""
    truth_params: list = field(default_factory=list)
    truth_path: str = ""
    # solvers
    eps: float = 1e-3
    tol: float = 1e-10
    target_rel: float = 0.05
    # optimizer
    max_iters: int = 100
    c1: float = 1e-4
    shrink: float = 0.5
    growth: float = 2.0
    t_max: float = 1.0
    step_floor: float = 1e-10
    grad_tol: float = 1e-9
    ball_radius: float = 0.0  # 0 means unbounded
    eps0: float = 0.1
    rho: float = 0.5
    eps_min: float = 1e-4
    certify_tol: float = 1e-2
    # run
    seed: int = 0
    out: str = "out"
    base_dir: str = "."

    def optimizer_config(self) -> OptimizerConfig:
        try:
            return OptimizerConfig(
                max_iters=self.max_iters, c1=self.c1, shrink=self.shrink, growth=self.growth,
                t_max=self.t_max, step_floor=self.step_floor, grad_tol=self.grad_tol,
                ball_radius=self.ball_radius or None, eps0=self.eps0, rho=self.rho,
                eps_min=self.eps_min, certify_tol=self.certify_tol,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self):
        if self.n < 5:
            raise ConfigError("n must be at least 5")
        if len(self.extent) != 4:
            raise ConfigError("extent takes [x0, x1, y0, y1]")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be nonnegative, got {self.alpha}")
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not self.target_rel > 0:
            raise ConfigError("target_rel must be positive")
        if self.ball_radius < 0:
            raise ConfigError("ball_radius must be nonnegative")
        if self.e_region not in ("rect", "disk"):
            raise ConfigError("e_region must be 'rect' or 'disk'")
        for name in ("f", "y_d", "anchor", "control", "truth"):
            kind = getattr(self, name)
            if kind and kind not in GENERATORS:
                raise ConfigError(f"{name}: unknown generator {kind!r}")
            if kind == "csv" and not getattr(self, f"{name}_path"):
                raise ConfigError(f"{name}: csv generator needs {name}_path")
        try:
            beta_from_name(self.beta, self.beta_params)
        except ValueError as exc:
            raise ConfigError(f"beta: {exc}") from exc
        self.optimizer_config()
        try:
            make_grid(self)
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from exc
        return self

    def resolve(self, path):
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig) if f.name != "base_dir"}


def _coerce(name, value):
    default = RunConfig().__getattribute__(name)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name}: expected a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{name}: expected a string")
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(f"{name}: expected a list of numbers")
        return [float(v) for v in value]
    raise ConfigError(f"{name}: unsupported type")


def load_config(path=None, **overrides) -> RunConfig:
    """Parse a flat TOML file; unknown keys and ill-typed values are rejected."""
    raw = {}
    base = "."
    if path is not None:
        p = Path(path)
        try:
            raw = tomli.loads(p.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        base = str(p.parent)
    unknown = sorted(set(raw) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values = {k: _coerce(k, v) for k, v in raw.items()}
    for k, v in overrides.items():
        if v is not None:
            values[k] = _coerce(k, v)
    return RunConfig(base_dir=base, **values).validate()


def make_grid(cfg: RunConfig) -> Grid:
    if cfg.e_region == "rect":
        if len(cfg.e_params) != 4:
            raise ValueError("rect E takes [x0, x1, y0, y1]")
        region = RectRegion(*cfg.e_params)
    else:
        if len(cfg.e_params) != 3:
            raise ValueError("disk E takes [cx, cy, r]")
        region = DiskRegion(*cfg.e_params)
    return Grid(cfg.n, cfg.n, extent=tuple(cfg.extent), e_region=region)


def _signed_rect(X, Y, x0, x1, y0, y1):
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    qx = np.abs(X - cx) - 0.5 * (x1 - x0)
    qy = np.abs(Y - cy) - 0.5 * (y1 - y0)
    outside = np.hypot(np.maximum(qx, 0), np.maximum(qy, 0))
    return outside + np.minimum(np.maximum(qx, qy), 0.0)


def manufactured_solution(grid):
    """``sin(pi x') sin(pi y')`` in coordinates scaled to the domain; zero on its boundary."""
    x0, x1, y0, y1 = grid.extent
    return np.sin(np.pi * (grid.X - x0) / (x1 - x0)) * np.sin(np.pi * (grid.Y - y0) / (y1 - y0))


def manufactured_source(grid, beta, eps, eps_source=True):
    """Source giving ``manufactured_solution`` for the control ``g = -1`` (no penalty)."""
    x0, x1, y0, y1 = grid.extent
    u = manufactured_solution(grid)
    lap = (np.pi / (x1 - x0)) ** 2 + (np.pi / (y1 - y0)) ** 2
    f = lap * u + beta.apply(u)
    if eps_source:
        f = f + eps  # cancels eps * g with g = -1
    return f


def make_field(cfg: RunConfig, grid, name, beta=None, f=None):
    """Evaluate the generator configured for ``name`` on ``grid``."""
    from .fieldio import read_field_csv

    kind = getattr(cfg, name)
    params = list(getattr(cfg, f"{name}_params"))
    X, Y = grid.X, grid.Y

    def need(k, what):
        if len(params) != k:
            raise ConfigError(f"{name}: {kind} takes {what}")

    if kind == "constant":
        need(1, "[value]")
        return np.full(grid.shape, params[0])
    if kind == "gaussian":
        need(5, "[amplitude, cx, cy, sigma, offset]")
        a, cx, cy, sig, off = params
        return a * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * sig**2)) + off
    if kind == "disk":
        need(3, "[cx, cy, r]")
        cx, cy, r = params
        return np.hypot(X - cx, Y - cy) - r
    if kind == "rect":
        need(4, "[x0, x1, y0, y1]")
        return _signed_rect(X, Y, *params)
    if kind == "manufactured":
        if name == "f":
            return manufactured_source(grid, beta, cfg.eps, cfg.eps_source)
        if name == "control":
            return np.full(grid.shape, -1.0)
        return manufactured_solution(grid)
    if kind == "shape_state":
        need(3, "[cx, cy, r]")
        from .pde import solve_masked
        from .shapes import extract_shape

        cx, cy, r = params
        mask = extract_shape(grid, np.hypot(X - cx, Y - cy) - r)
        return solve_masked(grid, beta, mask, f).y
    if kind == "csv":
        path = cfg.resolve(getattr(cfg, f"{name}_path"))
        if not path.exists():
            raise ConfigError(f"{name}: file not found: {path}")
        try:
            return read_field_csv(path, grid)
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from exc
    raise ConfigError(f"{name}: no generator configured")


def optional_field(cfg, grid, name, beta=None, f=None) -> Optional[np.ndarray]:
    return make_field(cfg, grid, name, beta, f) if getattr(cfg, name) else None
