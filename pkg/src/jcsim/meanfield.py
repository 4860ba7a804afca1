"""Maxwell-Bloch (factorized) dynamics and its stationary branches.

State variables are the averages ``a = <a>``, ``sp = <sigma_+>`` (with
``<sigma_-> = conj(sp)``) and ``sz = <sigma_z>``.  The equations of motion are

    da/dt  = -(kappa/2) a - i g sm
    dsp/dt = (i delta - gamma1/2) sp - i (f/2 + g conj(a)) sz
    dsz/dt = -gamma1 (sz + 1) + 2 i g (conj(a) sm - a sp) + i f (sm - sp)

The closed-form stationary relations (amplitudes, drive as a function of the
qubit occupation, branch extrema) hold for the resonant case ``delta = 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NotSettledError, SimulationError, StiffIntegrationError
from .lindblad import DEFAULT_ATOL, DEFAULT_RTOL
from .params import DriveProtocol, SystemParams

log = logging.getLogger(__name__)

STABILITY_MARGIN = 1e-12
FIXED_POINT_TOL = 1e-8
ROOT_TOL = 1e-8


@dataclass(frozen=True)
class MBState:
    a: complex = 0j
    sp: complex = 0j
    sz: float = -1.0

    @property
    def n_ph(self) -> float:
        return abs(self.a) ** 2

    @property
    def n_q(self) -> float:
        return 0.5 * (self.sz + 1.0)

    @property
    def bloch_vector(self) -> np.ndarray:
        # sigma_x = sigma_+ + sigma_-, sigma_y = -i (sigma_+ - sigma_-)
        return np.array([2.0 * self.sp.real, 2.0 * self.sp.imag, self.sz])

    def to_real(self) -> np.ndarray:
        return np.array([self.a.real, self.a.imag, self.sp.real, self.sp.imag, self.sz])

    @classmethod
    def from_real(cls, x) -> "MBState":
        return cls(complex(x[0], x[1]), complex(x[2], x[3]), float(x[4]))

    @classmethod
    def ground(cls) -> "MBState":
        return cls(0j, 0j, -1.0)


def _derivatives(s: MBState, p: SystemParams, f_now: float) -> tuple[complex, complex, complex]:
    a, sp, sz = s.a, s.sp, s.sz
    sm = sp.conjugate()
    da = -0.5 * p.kappa * a - 1j * p.g * sm
    dsp = (1j * p.delta - 0.5 * p.gamma1) * sp - 1j * (0.5 * f_now + p.g * a.conjugate()) * sz
    dsz = (-p.gamma1 * (sz + 1.0)
           + 2j * p.g * (a.conjugate() * sm - a * sp)
           + 1j * f_now * (sm - sp))
    return da, dsp, dsz


def mb_rhs(s: MBState, p: SystemParams, f_now: float | None = None) -> MBState:
    """Time derivative of the mean-field state, packed as an ``MBState``."""
    f_now = p.f if f_now is None else f_now
    da, dsp, dsz = _derivatives(s, p, f_now)
    return MBState(complex(da), complex(dsp), float(dsz.real))


def _real_rhs(p: SystemParams, f_now: float):
    k2, g, gam, dl = 0.5 * p.kappa, p.g, p.gamma1, p.delta

    def rhs(_t, x):
        ar, ai, pr, pi, z = x
        return [
            -k2 * ar - g * pi,
            -k2 * ai - g * pr,
            -0.5 * gam * pr - dl * pi - g * ai * z,
            dl * pr - 0.5 * gam * pi - 0.5 * f_now * z - g * ar * z,
            -gam * (z + 1.0) + 4.0 * g * (ar * pi + ai * pr) + 2.0 * f_now * pi,
        ]

    return rhs


def jacobian(s: MBState, p: SystemParams, f_now: float | None = None) -> np.ndarray:
    """Analytic Jacobian in coordinates ``(Re a, Im a, Re sp, Im sp, sz)``."""
    f_now = p.f if f_now is None else f_now
    ar, ai, pr, pi, z = s.to_real()
    k2, g, gam, dl = 0.5 * p.kappa, p.g, p.gamma1, p.delta
    return np.array([
        [-k2, 0.0, 0.0, -g, 0.0],
        [0.0, -k2, -g, 0.0, 0.0],
        [0.0, -g * z, -0.5 * gam, -dl, -g * ai],
        [-g * z, 0.0, dl, -0.5 * gam, -0.5 * f_now - g * ar],
        [4 * g * pi, 4 * g * pr, 4 * g * ai, 4 * g * ar + 2 * f_now, -gam],
    ])


@dataclass
class MBTrajectory:
    times: np.ndarray
    a: np.ndarray
    sp: np.ndarray
    sz: np.ndarray

    @property
    def n_ph(self) -> np.ndarray:
        return np.abs(self.a) ** 2

    @property
    def n_q(self) -> np.ndarray:
        return 0.5 * (self.sz + 1.0)

    def state(self, i: int) -> MBState:
        return MBState(complex(self.a[i]), complex(self.sp[i]), float(self.sz[i]))

    @property
    def final(self) -> MBState:
        return self.state(-1)


def mb_evolve(s0: MBState, p: SystemParams, drive: DriveProtocol, t_grid,
              atol: float = DEFAULT_ATOL, rtol: float = DEFAULT_RTOL) -> MBTrajectory:
    """Adaptive Dormand-Prince 5(4) integration of the Maxwell-Bloch equations."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a non-empty strictly ascending sequence")
    out = np.empty((len(t_grid), 5))
    out[0] = s0.to_real()
    y = out[0].copy()
    shrink = 1.0 / np.sqrt(y.size)  # per-component tolerance from the RMS error norm
    cuts = drive.breakpoints(t_grid[0], t_grid[-1])
    for t0, t1 in zip(cuts[:-1], cuts[1:]):
        mask = (t_grid > t0) & (t_grid <= t1)
        t_eval = np.union1d(t_grid[mask], [t1])
        sol = solve_ivp(_real_rhs(p, drive(0.5 * (t0 + t1))), (t0, t1), y,
                        method="RK45", t_eval=t_eval, atol=atol * shrink, rtol=rtol * shrink)
        if sol.status != 0:
            if "step size" in sol.message:
                raise StiffIntegrationError(sol.message)
            raise SimulationError(sol.message)
        out[mask] = sol.y.T[np.isin(t_eval, t_grid[mask])]
        y = sol.y[:, -1]
    return MBTrajectory(t_grid, out[:, 0] + 1j * out[:, 1], out[:, 2] + 1j * out[:, 3], out[:, 4])


def relax(s0: MBState, p: SystemParams, f_now: float, horizon: float | None = None,
          max_chunks: int = 60, tol: float = 1e-10) -> MBState:
    """Integrate at constant drive until ``max |d state/dt| < tol * rate``.

    ``rate`` is the largest frequency scale in the problem (at least 1), which
    keeps the criterion above the integrator's round-off floor.
    """
    horizon = 50.0 / min(p.kappa, p.gamma1) if horizon is None else horizon
    limit = tol * max(1.0, f_now, p.g, p.kappa, p.gamma1, abs(p.delta))
    s = s0
    drive = DriveProtocol("constant", f_now)
    for _ in range(max_chunks):
        s = mb_evolve(s, p, drive, [0.0, horizon], atol=1e-12, rtol=1e-10).final
        if np.abs(_real_rhs(p, f_now)(0.0, s.to_real())).max() < limit:
            return s
    raise NotSettledError(f"mean-field state did not settle at f={f_now:g}")


def _require_resonance(p: SystemParams):
    if p.delta != 0:
        raise ValueError("closed-form stationary relations require delta = 0")


def steady_amplitudes(n_q: float, p: SystemParams, f: float) -> tuple[complex, complex]:
    """Stationary ``(<sigma_+>, <a>)`` on the branch with qubit occupation ``n_q``."""
    _require_resonance(p)
    s = 2.0 * n_q - 1.0
    den = 4.0 * p.g ** 2 * s - p.gamma1 * p.kappa
    if den == 0:
        raise ZeroDivisionError("singular denominator 4 g^2 (2 n_q - 1) - gamma1 kappa")
    sp = 1j * f * s * p.kappa / den
    a = -2.0 * f * p.g * s / den
    return complex(sp), complex(a)


def drive_of_nq(n_q: float, p: SystemParams) -> float:
    _require_resonance(p)
    if not 0.0 <= n_q < 0.5:
        raise ValueError(f"n_q must lie in [0, 1/2), got {n_q!r}")
    lin = abs(p.gamma1 * p.kappa - 4.0 * p.g ** 2 * (2.0 * n_q - 1.0)) / p.kappa
    return lin * math.sqrt(n_q / (1.0 - 2.0 * n_q))


def photons_of_nq(n_q: float, p: SystemParams) -> float:
    return -4.0 * n_q * (2.0 * n_q - 1.0) * p.g ** 2 / p.kappa ** 2


def branch_polynomial(f: float, p: SystemParams) -> np.ndarray:
    """Coefficients (highest first) of the cubic in ``n_q`` from squaring the drive relation.

    ``f^2 kappa^2 (1 - 2 n) = n (gamma1 kappa - 4 g^2 (2n - 1))^2``
    """
    c, h = p.gamma1 * p.kappa, 4.0 * p.g ** 2
    fk2 = (f * p.kappa) ** 2
    return np.array([4.0 * h * h, -4.0 * h * (c + h), (c + h) ** 2 + 2.0 * fk2, -fk2])


@dataclass(frozen=True)
class SteadyBranch:
    n_q: float
    n_ph: float
    a: complex
    sp: complex
    stable: bool

    @property
    def sz(self) -> float:
        return 2.0 * self.n_q - 1.0

    @property
    def state(self) -> MBState:
        return MBState(self.a, self.sp, self.sz)


def _polish(coeffs: np.ndarray, x: float, steps: int = 8) -> float:
    dcoeffs = np.polyder(coeffs)
    for _ in range(steps):
        d = np.polyval(dcoeffs, x)
        if d == 0:
            break
        step = np.polyval(coeffs, x) / d
        x -= step
        if abs(step) < 1e-16:
            break
    return x


def steady_branches(f: float, p: SystemParams) -> list[SteadyBranch]:
    """All stationary mean-field solutions at drive ``f``, sorted by ``n_q``.

    Roots of the cubic come from companion-matrix eigenvalues (``np.roots``),
    are Newton-polished, restricted to ``[0, 1/2)`` and validated against the
    unsquared drive relation.
    """
    _require_resonance(p)
    if f < 0:
        raise ValueError("f must be non-negative")
    coeffs = branch_polynomial(f, p)
    found = []
    for r in np.roots(coeffs):
        if abs(r.imag) > 1e-6:
            continue
        n = _polish(coeffs, float(r.real))
        if not 0.0 <= n < 0.5:
            if -1e-14 < n < 0.0:
                n = 0.0
            else:
                continue
        f_back = drive_of_nq(n, p)
        if abs(f_back - f) > ROOT_TOL * max(f, 1.0):
            continue
        found.append(float(n))
    found.sort()
    branches = []
    for n in found:
        sp, a = steady_amplitudes(n, p, f)
        provisional = SteadyBranch(n, photons_of_nq(n, p), a, sp, False)
        branches.append(SteadyBranch(n, provisional.n_ph, a, sp,
                                     classify_stability(provisional, p, f)))
    return branches


def classify_stability(branch: SteadyBranch, p: SystemParams, f: float) -> bool:
    """Linear stability of a fixed point; marginal cases count as unstable."""
    s = branch.state
    resid = np.abs(_real_rhs(p, f)(0.0, s.to_real())).max()
    if resid > FIXED_POINT_TOL:
        raise SimulationError(f"not a fixed point (residual {resid:.3e})")
    top = np.linalg.eigvals(jacobian(s, p, f)).real.max()
    if abs(top) <= STABILITY_MARGIN:
        log.warning("marginal fixed point at f=%g, n_q=%g", f, branch.n_q)
        return False
    return bool(top < -STABILITY_MARGIN)


def nq_extrema(p: SystemParams) -> tuple[float, float] | None:
    """Turning points of the drive-occupation relation, descending; ``None`` if absent."""
    if p.g == 0:
        return None
    disc = 1.0 - 2.0 * p.gamma1 * p.kappa / p.g ** 2
    if disc < 0:
        return None
    r = math.sqrt(disc)
    return (3.0 + r) / 8.0, (3.0 - r) / 8.0


def bistable(p: SystemParams) -> bool:
    return p.g > math.sqrt(2.0 * p.gamma1 * p.kappa)


def bistable_window(p: SystemParams) -> tuple[float, float] | None:
    """Drive interval with three stationary solutions, or ``None``."""
    if not bistable(p):
        return None
    lo, hi = sorted(drive_of_nq(n, p) for n in nq_extrema(p))
    return lo, hi


@dataclass
class HysteresisSweep:
    f: np.ndarray
    forward: list[MBState]
    backward: list[MBState]

    @property
    def n_ph_forward(self) -> np.ndarray:
        return np.array([s.n_ph for s in self.forward])

    @property
    def n_ph_backward(self) -> np.ndarray:
        return np.array([s.n_ph for s in self.backward])

    @property
    def n_q_forward(self) -> np.ndarray:
        return np.array([s.n_q for s in self.forward])

    @property
    def n_q_backward(self) -> np.ndarray:
        return np.array([s.n_q for s in self.backward])


def hysteresis_sweep(p: SystemParams, f_grid, horizon: float | None = None) -> HysteresisSweep:
    """Adiabatic up- and down-sweeps of the drive with warm-started relaxation.

    The forward pass starts from the ground state; the backward pass starts
    from the last forward state.  Both curves are returned aligned with the
    ascending ``f_grid``.
    """
    f_grid = np.asarray(f_grid, dtype=float)
    if np.any(np.diff(f_grid) <= 0):
        raise ValueError("f_grid must be strictly ascending")
    s = MBState.ground()
    forward = []
    for f in f_grid:
        s = relax(s, p, f, horizon)
        forward.append(s)
    backward = []
    for f in f_grid[::-1]:
        s = relax(s, p, f, horizon)
        backward.append(s)
    return HysteresisSweep(f_grid, forward, backward[::-1])


def perturbative_correlator(n_q: float, n_ph: float, a: complex, p: SystemParams, f: float) -> complex:
    """Leading-order estimate of ``<da dsigma_+>`` around a stationary branch."""
    g, k, gam = p.g, p.kappa, p.gamma1
    return (2j * k * g * (2 * n_q - 1) * (2 * g * n_ph + f * a) / ((2 * k + gam) * gam)
            - 2j * g * n_q / (2 * k + gam))


@dataclass(frozen=True)
class StrongDriveLimits:
    n_ph_inf: float
    sigma_magnitude: float
    f_star: float
    correlator_inf: complex


def strong_drive_limits(p: SystemParams) -> StrongDriveLimits:
    """Closed-form large-drive asymptotes and the threshold-drive estimate."""
    return StrongDriveLimits(
        n_ph_inf=(p.g / p.kappa) ** 2,
        sigma_magnitude=0.5,
        f_star=max(p.gamma1, p.g ** 2 / p.kappa),
        correlator_inf=-1j * p.g / (2 * p.kappa + p.gamma1),
    )
