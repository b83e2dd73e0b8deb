"""Flat ``key = value`` run configuration."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .initdata import ILL_FAMILIES, WELL_FAMILIES
from .spectral import Grid
from .thermo import ScalingParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    nx: int = 64
    ny: int = 64
    nz: int = 1
    lx: float = 2 * math.pi
    ly: float = 2 * math.pi
    a: float = 1.0
    gamma: float = 2.0
    rho_bar: float = 1.0
    epsilons: tuple = (0.4, 0.2, 0.1, 0.05)
    t_end: float = 0.5
    cfl: float = 0.5
    family: str = "well"
    data: str = "two_mode"
    amplitude: float = 0.05
    delta: float | None = None
    hyperviscosity: bool = False
    symmetry: bool = True
    convention: str = "balanced"
    sample_interval: float = 0.05
    seed: int = 0
    out: str = "out"
    decay_window: float | None = None

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        if not eps or any(e <= 0 for e in eps):
            raise ConfigError("epsilon list must be non-empty and positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("epsilon list must be strictly decreasing")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if not 0 < self.cfl <= 1:
            raise ConfigError("cfl must lie in (0, 1]")
        if self.family not in ("well", "ill"):
            raise ConfigError(f"family must be 'well' or 'ill', got {self.family!r}")
        known = WELL_FAMILIES if self.family == "well" else ILL_FAMILIES
        if self.data not in known:
            raise ConfigError(f"data family {self.data!r} not available for {self.family}-prepared runs")
        if self.convention not in ("balanced", "unscaled"):
            raise ConfigError(f"unknown convention {self.convention!r}")
        if self.delta is not None and not self.delta > 0:
            raise ConfigError("delta must be positive")
        if not self.sample_interval > 0:
            raise ConfigError("sample_interval must be positive")
        try:
            self.grid
            self.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def grid(self) -> Grid:
        return Grid(self.nx, self.ny, self.nz, self.lx, self.ly)

    def params(self, epsilon: float | None = None) -> ScalingParams:
        return ScalingParams(self.epsilons[0] if epsilon is None else epsilon,
                             self.a, self.gamma, self.rho_bar)

    def with_(self, **kw) -> "RunConfig":
        return replace(self, **kw)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ", ".join(repr(x) for x in v)
            elif v is None:
                continue
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_PI = re.compile(r"^\s*([-+]?[0-9.]*(?:[eE][-+]?\d+)?)\s*\*?\s*pi\s*$")


def _number(text: str) -> float:
    m = _PI.match(text)
    if m:
        coef = m.group(1)
        return (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
    return float(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


_CONVERT = {
    "nx": int, "ny": int, "nz": int, "seed": int,
    "lx": _number, "ly": _number, "a": _number, "gamma": _number, "rho_bar": _number,
    "t_end": _number, "cfl": _number, "amplitude": _number, "delta": _number,
    "sample_interval": _number, "decay_window": _number,
    "hyperviscosity": _bool, "symmetry": _bool,
    "family": str, "data": str, "out": str, "convention": str,
    "epsilons": lambda s: tuple(_number(x) for x in s.split(",") if x.strip()),
}
_ALIASES = {"epsilon": "epsilons", "eps": "epsilons"}


def parse_config(text: str, **overrides) -> RunConfig:
    kw = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in _CONVERT:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            kw[key] = _CONVERT[key](value)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    kw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**kw)
    except ConfigError:
        raise
    except Exception as exc:  # e.g. Grid validation
        raise ConfigError(str(exc)) from None


def load_config(path, **overrides) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, **overrides)
