"""Physical parameters and drive protocols.

Rates and energies are angular frequencies in rad/us; times are in us.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .hilbert import HilbertDims

DEFAULT_N_FOCK = 40


@dataclass(frozen=True)
class SystemParams:
    """Driven, damped qubit-cavity system in the frame rotating with the drive.

    Defaults are the resonant case with cavity decay 0.4 and qubit decay 0.5.
    """

    delta: float = 0.0
    g: float = 1.0
    kappa: float = 0.4
    gamma1: float = 0.5
    f: float = 0.0
    dims: HilbertDims = field(default_factory=lambda: HilbertDims(DEFAULT_N_FOCK))

    def __post_init__(self):
        for name in ("delta", "g", "kappa", "gamma1", "f"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.kappa <= 0 or self.gamma1 <= 0:
            raise ValueError("kappa and gamma1 must be positive")
        if self.g < 0 or self.f < 0:
            raise ValueError("g and f must be non-negative")

    @property
    def n_fock(self) -> int:
        return self.dims.n_fock

    def with_(self, **changes) -> "SystemParams":
        if "n_fock" in changes:
            changes["dims"] = HilbertDims(int(changes.pop("n_fock")))
        return replace(self, **changes)


@dataclass(frozen=True)
class DriveProtocol:
    """Drive envelope: ``constant`` everywhere, or a ``step`` switched on at ``t_on``."""

    kind: str = "constant"
    amplitude: float = 0.0
    t_on: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "step"):
            raise ValueError(f"unknown drive kind {self.kind!r}")
        if self.amplitude < 0:
            raise ValueError("drive amplitude must be non-negative")

    def __call__(self, t: float) -> float:
        if self.kind == "step" and t < self.t_on:
            return 0.0
        return self.amplitude

    def breakpoints(self, t0: float, t1: float) -> list[float]:
        """Split ``[t0, t1]`` at the switching time, if it falls inside."""
        if self.kind == "step" and t0 < self.t_on < t1:
            return [t0, self.t_on, t1]
        return [t0, t1]

    @classmethod
    def quench(cls, amplitude: float, t_on: float = 0.0) -> "DriveProtocol":
        return cls("step", amplitude, t_on)
