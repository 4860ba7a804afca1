"""Exact dynamics of the driven, damped qubit-cavity system.

The master equation is

    d rho/dt = -i [H, rho] + kappa D[a] rho + gamma1 D[sigma_-] rho,
    H = delta sigma_+ sigma_- + g (a sigma_+ + a^dag sigma_-) + (f/2) sigma_x,

with ``D[L] rho = L rho L^dag - {L^dag L, rho}/2``.  Superoperators act on
column-stacked density matrices, ``vec(rho) = rho.reshape(-1, order="F")``,
so that ``vec(A X B) = (B^T kron A) vec(X)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sps
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import (DegenerateSteadyState, InvariantViolation, NotSettledError, SimulationError,
                     StiffIntegrationError)
from .hilbert import HilbertDims, JointOperators, check_density_matrix, ground_state, joint_operators
from .params import DriveProtocol, SystemParams

log = logging.getLogger(__name__)

DEFAULT_ATOL = 1e-9
DEFAULT_RTOL = 1e-7
TRACE_DRIFT_TOL = 1e-8
HERMITICITY_LIMIT = 1e-9
POSITIVITY_LIMIT = 1e-7
STATIONARY_TOL = 1e-9
# stationarity at STATIONARY_TOL is below the noise floor of the default tolerances
MARCH_ATOL = 1e-12
MARCH_RTOL = 1e-10
DENSE_SVD_MAX_DIM = 24


@lru_cache(maxsize=8)
def _operators(dims: HilbertDims) -> JointOperators:
    ops = joint_operators(dims)
    for arr in (ops.a, ops.sm, ops.sp, ops.sz, ops.sx):
        arr.flags.writeable = False
    return ops


def build_hamiltonian(p: SystemParams, f_now: float | None = None) -> np.ndarray:
    """Rotating-frame Hamiltonian on the joint space; ``f_now`` defaults to ``p.f``."""
    f_now = p.f if f_now is None else f_now
    o = _operators(p.dims)
    return (p.delta * (o.sp @ o.sm)
            + p.g * (o.a @ o.sp + o.ad @ o.sm)
            + 0.5 * f_now * o.sx)


def _collapse(p: SystemParams) -> list[tuple[float, np.ndarray]]:
    o = _operators(p.dims)
    return [(p.kappa, o.a), (p.gamma1, o.sm)]


def dissipator(rho: np.ndarray, p: SystemParams) -> np.ndarray:
    out = np.zeros_like(rho, dtype=complex)
    for rate, c in _collapse(p):
        cd = c.conj().T
        cdc = cd @ c
        out += rate * (c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc))
    return out


def lindblad_rhs(rho: np.ndarray, p: SystemParams, f_now: float | None = None) -> np.ndarray:
    """``d rho / dt = -i [H, rho] + Gamma[rho]``."""
    h = build_hamiltonian(p, f_now)
    return -1j * (h @ rho - rho @ h) + dissipator(rho, p)


def liouvillian(p: SystemParams, f_now: float | None = None, sparse: bool = False):
    """Matrix ``L`` with ``vec(d rho/dt) = L vec(rho)`` (column stacking)."""
    d = p.dims.total_dim
    eye = sps.identity(d, dtype=complex, format="csr")
    h = sps.csr_matrix(build_hamiltonian(p, f_now))
    out = -1j * (sps.kron(eye, h) - sps.kron(h.T, eye))
    for rate, c in _collapse(p):
        c = sps.csr_matrix(c)
        cdc = c.conj().T @ c
        out = out + rate * (sps.kron(c.conj(), c)
                            - 0.5 * sps.kron(eye, cdc)
                            - 0.5 * sps.kron(cdc.T, eye))
    out = out.tocsc()
    return out if sparse else out.toarray()


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape(d, d, order="F")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dims: HilbertDims
    trace_drift: float = 0.0
    renormalized: bool = False
    max_hermiticity_dev: float = 0.0
    min_eigenvalue: float = 0.0
    nfev: int = 0

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _hermitian_rhs(p: SystemParams, f_now: float):
    # For Hermitian rho, M + M^dag equals the Lindblad generator, with
    # M = -i H_eff rho + (1/2) sum_k r_k L_k rho L_k^dag.  The result is Hermitian by
    # construction, so the integrator never creates an anti-Hermitian part.
    d = p.dims.total_dim
    h_eff = build_hamiltonian(p, f_now).astype(complex)
    jumps = []
    for rate, c in _collapse(p):
        h_eff = h_eff - 0.5j * rate * (c.conj().T @ c)
        jumps.append((0.5 * rate, c, c.conj().T))
    mh = -1j * h_eff

    def rhs(_t, y):
        rho = y.reshape(d, d)
        m = mh @ rho
        for w, c, cd in jumps:
            m += w * (c @ rho @ cd)
        return (m + m.conj().T).ravel()

    return rhs


def evolve(rho0: np.ndarray, p: SystemParams, drive: DriveProtocol, t_grid,
           atol: float = DEFAULT_ATOL, rtol: float = DEFAULT_RTOL,
           check: bool = True) -> Trajectory:
    """Integrate the master equation with an adaptive Dormand-Prince 5(4) pair.

    ``atol`` and ``rtol`` hold for each matrix entry separately.

    ``rho0`` is the state at ``t_grid[0]``; states are returned on ``t_grid``.
    The integration is split at the drive's switching time.  With ``check``
    the trajectory is screened for Hermiticity and positivity loss.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a non-empty strictly ascending sequence")
    d = p.dims.total_dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (d, d):
        raise ValueError(f"rho0 has shape {rho0.shape}, expected {(d, d)}")
    # accept anything this function itself may return, so runs can be chained
    check_density_matrix(rho0, pos_tol=POSITIVITY_LIMIT)

    states = np.empty((len(t_grid), d, d), dtype=complex)
    states[0] = rho0
    y = rho0.ravel().copy()
    nfev = 0
    # solve_ivp bounds the RMS of the scaled error; dividing by sqrt(n) turns
    # that into a bound on every matrix entry
    shrink = 1.0 / np.sqrt(y.size)
    cuts = drive.breakpoints(t_grid[0], t_grid[-1])
    for t0, t1 in zip(cuts[:-1], cuts[1:]):
        mask = (t_grid > t0) & (t_grid <= t1)
        t_eval = np.union1d(t_grid[mask], [t1])
        rhs = _hermitian_rhs(p, drive(0.5 * (t0 + t1)))
        sol = solve_ivp(rhs, (t0, t1), y, method="RK45", t_eval=t_eval,
                        atol=atol * shrink, rtol=rtol * shrink)
        nfev += sol.nfev
        if sol.status != 0:
            if "step size" in sol.message:
                raise StiffIntegrationError(sol.message)
            raise SimulationError(sol.message)
        ys = sol.y.T.reshape(-1, d, d)
        states[mask] = ys[np.isin(t_eval, t_grid[mask])]
        y = sol.y[:, -1]

    traces = np.einsum("tii->t", states)
    drift = float(np.abs(traces - 1.0).max())
    renorm = drift > TRACE_DRIFT_TOL
    if renorm:
        log.warning("trace drift %.3e exceeds %.1e; renormalizing", drift, TRACE_DRIFT_TOL)
        states /= traces[:, None, None]
    herm = float(np.abs(states - states.conj().transpose(0, 2, 1)).max())
    traj = Trajectory(t_grid, states, p.dims, trace_drift=drift, renormalized=renorm,
                      max_hermiticity_dev=herm, nfev=nfev)
    if check:
        traj.min_eigenvalue = float(min(np.linalg.eigvalsh(s)[0] for s in states))
        if herm > HERMITICITY_LIMIT:
            raise InvariantViolation(f"Hermiticity deviation {herm:.3e}")
        if traj.min_eigenvalue < -POSITIVITY_LIMIT:
            raise InvariantViolation(f"negative eigenvalue {traj.min_eigenvalue:.3e}")
    return traj


def propagate_exact(rho0: np.ndarray, p: SystemParams, f_now: float, times) -> np.ndarray:
    """Reference propagation ``exp(L t) vec(rho0)`` by diagonalizing ``L``.

    Only meant for small cutoffs, as a cross-check of :func:`evolve`.
    """
    d = p.dims.total_dim
    lmat = liouvillian(p, f_now)
    w, v = np.linalg.eig(lmat)
    c = np.linalg.solve(v, vec(rho0))
    out = [unvec(v @ (np.exp(w * t) * c), d) for t in np.asarray(times, dtype=float)]
    return np.array(out)


def propagate_expm(rho0: np.ndarray, p: SystemParams, f_now: float, times) -> np.ndarray:
    d = p.dims.total_dim
    lmat = liouvillian(p, f_now)
    return np.array([unvec(scipy.linalg.expm(lmat * t) @ vec(rho0), d)
                     for t in np.asarray(times, dtype=float)])


def _normalize(rho: np.ndarray) -> np.ndarray:
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def steady_state_nullspace(p: SystemParams, f_now: float | None = None, method: str = "auto",
                           null_tol: float = 1e-10, check_unique: bool = True) -> np.ndarray:
    """Unique stationary state, ``L vec(rho) = 0`` with unit trace.

    ``method="svd"`` takes the right singular vector of the smallest singular
    value of the dense Liouvillian and reports a degenerate null space when the
    second-smallest singular value is below ``null_tol * s_max``.
    ``method="sparse"`` solves the Liouvillian with one row replaced by the
    trace condition (sparse LU); uniqueness is then checked with a
    shift-invert Arnoldi estimate of the two eigenvalues nearest zero.
    ``"auto"`` uses the SVD for small spaces.
    """
    f_now = p.f if f_now is None else f_now
    d = p.dims.total_dim
    if method == "auto":
        method = "svd" if d <= DENSE_SVD_MAX_DIM else "sparse"

    if method == "svd":
        lmat = liouvillian(p, f_now)
        _, s, vh = np.linalg.svd(lmat)
        if check_unique and s[-2] < null_tol * s[0]:
            raise DegenerateSteadyState(
                f"second-smallest singular value {s[-2]:.3e} below {null_tol:.0e} * {s[0]:.3e}")
        rho = _normalize(unvec(vh[-1].conj(), d))
        resid = np.linalg.norm(lmat @ vec(rho))
        scale = s[0]
    elif method == "sparse":
        lmat = liouvillian(p, f_now, sparse=True)
        bordered = lmat.tolil()
        trace_row = np.zeros(d * d, dtype=complex)
        trace_row[:: d + 1] = 1.0
        bordered[0, :] = trace_row
        rhs = np.zeros(d * d, dtype=complex)
        rhs[0] = 1.0
        x = spla.spsolve(bordered.tocsc(), rhs)
        if not np.all(np.isfinite(x)):
            raise DegenerateSteadyState("bordered Liouvillian is singular")
        rho = _normalize(unvec(x, d))
        scale = spla.norm(lmat)
        resid = np.linalg.norm(lmat @ vec(rho))
        if check_unique:
            gap = liouvillian_gap(p, f_now, lmat)
            if gap < null_tol * scale:
                raise DegenerateSteadyState(f"Liouvillian gap {gap:.3e} is numerically zero")
    else:
        raise ValueError(f"unknown method {method!r}")

    if resid > null_tol * scale:
        raise SimulationError(f"steady-state residual {resid:.3e} exceeds {null_tol:.0e} * ||L||")
    return rho


def liouvillian_gap(p: SystemParams, f_now: float | None = None, lmat=None) -> float:
    """Magnitude of the second eigenvalue of ``L`` closest to zero."""
    if lmat is None:
        lmat = liouvillian(p, f_now, sparse=True)
    shift = 1e-3 * min(p.kappa, p.gamma1)
    w = spla.eigs(lmat, k=2, sigma=shift, which="LM", return_eigenvectors=False, tol=1e-12)
    return float(np.sort(np.abs(w))[1])


def steady_state_marching(p: SystemParams, f_now: float | None = None, rho0=None,
                          horizon: float | None = None, max_chunks: int = 20,
                          stationary_tol: float = STATIONARY_TOL,
                          atol: float = MARCH_ATOL, rtol: float = MARCH_RTOL) -> np.ndarray:
    """Long-time limit of :func:`evolve` under a constant drive.

    Integrates in chunks of ``horizon`` (default ``50 max(1/kappa, 1/gamma1)``)
    until ``max |d rho/dt| < stationary_tol``.
    """
    f_now = p.f if f_now is None else f_now
    horizon = 50.0 * max(1.0 / p.kappa, 1.0 / p.gamma1) if horizon is None else horizon
    rho = ground_state(p.dims) if rho0 is None else np.asarray(rho0, dtype=complex)
    drive = DriveProtocol("constant", f_now)
    for _ in range(max_chunks):
        rho = evolve(rho, p, drive, [0.0, horizon], atol=atol, rtol=rtol, check=False).final
        rho = _normalize(rho)
        if np.abs(lindblad_rhs(rho, p, f_now)).max() < stationary_tol:
            return rho
    raise NotSettledError(f"no stationarity after {max_chunks} x {horizon:g} us")
