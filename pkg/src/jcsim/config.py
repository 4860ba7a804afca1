"""Scenario configuration: flat ``key = value`` files with ``#`` comments.

Precedence, highest first: command-line flag, ``SIM_FOCK_DIM`` environment
variable (``n_fock`` only), config file, built-in default.

Drive lists (``f_grid``, ``f_list``) are either comma-separated values or a
``start:stop:num`` triple expanded with ``numpy.linspace``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

import numpy as np

from .hilbert import HilbertDims
from .params import SystemParams

SCENARIOS = ("steady-sweep", "evolve", "mf-branches", "entropy-dynamics")
FOCK_ENV = "SIM_FOCK_DIM"


def parse_floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:num, got {text!r}")
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        return tuple(float(x) for x in np.linspace(start, stop, num))
    return tuple(float(x) for x in text.split(","))


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class ScenarioConfig:
    scenario: str = "steady-sweep"
    delta: float = 0.0
    g: float = 1.0
    kappa: float = 0.4
    gamma1: float = 0.5
    f: float | None = None          # quench amplitude for `evolve`; defaults to g
    f_grid: tuple = field(default_factory=lambda: parse_floats("0:10:101"))
    f_list: tuple = (0.1, 0.75, 1.5, 5.0)
    t_max: float = 20.0
    t_samples: int = 400
    n_fock: int = 40
    tol: float = 1e-9               # absolute integrator tolerance
    rtol: float = 1e-7
    convergence_tol: float = 1e-4
    check_convergence: bool = True
    march_fraction: float = 0.1
    out_path: str | None = None
    threads: int | None = None

    def validate(self) -> "ScenarioConfig":
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.kappa <= 0 or self.gamma1 <= 0:
            raise ValueError("kappa and gamma1 must be positive")
        if self.g < 0 or (self.f is not None and self.f < 0):
            raise ValueError("g and f must be non-negative")
        if any(np.diff(self.f_grid) <= 0):
            raise ValueError("f_grid must be strictly ascending")
        if any(x < 0 for x in (*self.f_grid, *self.f_list)):
            raise ValueError("drive amplitudes must be non-negative")
        if self.t_max <= 0 or self.t_samples < 2:
            raise ValueError("t_max must be positive and t_samples >= 2")
        HilbertDims(self.n_fock)
        if not 0.0 <= self.march_fraction <= 1.0:
            raise ValueError("march_fraction must lie in [0, 1]")
        return self

    @property
    def quench_amplitude(self) -> float:
        return self.g if self.f is None else self.f

    def params(self, n_fock: int | None = None) -> SystemParams:
        return SystemParams(delta=self.delta, g=self.g, kappa=self.kappa, gamma1=self.gamma1,
                            f=self.quench_amplitude,
                            dims=HilbertDims(self.n_fock if n_fock is None else n_fock))

    def echo(self) -> dict:
        """Physical and numerical settings, for the metadata block."""
        skip = {"out_path", "threads"}
        out = {}
        for fl in fields(self):
            if fl.name in skip:
                continue
            v = getattr(self, fl.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            out[fl.name] = v
        return out


def _coerce(name: str, raw: str):
    if name in ("f_grid", "f_list"):
        return parse_floats(raw)
    if name in ("n_fock", "t_samples", "threads"):
        return int(raw)
    if name == "check_convergence":
        return _parse_bool(raw)
    if name in ("scenario", "out_path"):
        return raw.strip()
    return float(raw)


CONFIG_KEYS = tuple(fl.name for fl in fields(ScenarioConfig))


def read_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, raw)
    return values


def load_config(path: str | None = None, overrides: dict | None = None,
                env: dict | None = None) -> ScenarioConfig:
    """Merge defaults < file < environment < explicit overrides."""
    env = os.environ if env is None else env
    values = read_config_file(path) if path else {}
    if env.get(FOCK_ENV):
        values["n_fock"] = int(env[FOCK_ENV])
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        values[key] = _coerce(key, raw) if isinstance(raw, str) else raw
    return ScenarioConfig(**values).validate()
