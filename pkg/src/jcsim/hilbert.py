"""Truncated qubit x Fock space: operators and density-matrix primitives.

Conventions used everywhere in the package:

* joint space is ``qubit (x) Fock``, built with ``np.kron(op_qubit, op_fock)``;
* qubit basis is ordered ``(excited, ground)``, so ``sigma_z = diag(+1, -1)``;
* Fock basis is ``|0>, ..., |n_fock - 1>``.

A joint basis index is therefore ``q * n_fock + n`` with ``q = 0`` for the
excited state and ``q = 1`` for the ground state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EXCITED = 0
GROUND = 1

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8


@dataclass(frozen=True)
class HilbertDims:
    n_fock: int

    def __post_init__(self):
        if int(self.n_fock) != self.n_fock or self.n_fock < 2:
            raise ValueError(f"n_fock must be an integer >= 2, got {self.n_fock!r}")

    @property
    def total_dim(self) -> int:
        return 2 * self.n_fock


def fock_annihilation(dims: HilbertDims) -> np.ndarray:
    """Annihilation operator on the Fock factor alone, ``<n-1|a|n> = sqrt(n)``."""
    return np.diag(np.sqrt(np.arange(1, dims.n_fock, dtype=float)), 1).astype(complex)


def qubit_ops() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(sigma_minus, sigma_plus, sigma_z, sigma_x)`` in the (e, g) basis."""
    sm = np.zeros((2, 2), dtype=complex)
    sm[GROUND, EXCITED] = 1.0
    sp = sm.conj().T
    sz = np.diag([1.0, -1.0]).astype(complex)
    sx = sp + sm
    return sm, sp, sz, sx


def embed(op_qubit: np.ndarray | None, op_fock: np.ndarray | None,
          dims: HilbertDims) -> np.ndarray:
    """Kronecker product ``op_qubit (x) op_fock``; ``None`` stands for identity."""
    q = np.eye(2, dtype=complex) if op_qubit is None else np.asarray(op_qubit)
    b = np.eye(dims.n_fock, dtype=complex) if op_fock is None else np.asarray(op_fock)
    if q.shape != (2, 2):
        raise ValueError(f"qubit factor must be 2x2, got {q.shape}")
    if b.shape != (dims.n_fock, dims.n_fock):
        raise ValueError(f"Fock factor must be {dims.n_fock}x{dims.n_fock}, got {b.shape}")
    return np.kron(q, b)


@dataclass(frozen=True)
class JointOperators:
    """All elementary operators embedded on the joint space of ``dims``."""

    dims: HilbertDims
    a: np.ndarray
    sm: np.ndarray
    sp: np.ndarray
    sz: np.ndarray
    sx: np.ndarray

    @property
    def ad(self) -> np.ndarray:
        return self.a.conj().T

    @property
    def n_photon(self) -> np.ndarray:
        return self.ad @ self.a

    @property
    def n_qubit(self) -> np.ndarray:
        return self.sp @ self.sm


def joint_operators(dims: HilbertDims) -> JointOperators:
    sm, sp, sz, sx = qubit_ops()
    return JointOperators(
        dims=dims,
        a=embed(None, fock_annihilation(dims), dims),
        sm=embed(sm, None, dims),
        sp=embed(sp, None, dims),
        sz=embed(sz, None, dims),
        sx=embed(sx, None, dims),
    )


def basis_index(dims: HilbertDims, qubit: str, n: int) -> int:
    """Joint index of ``|qubit, n>`` with ``qubit`` in ``{"e", "g"}``."""
    q = {"e": EXCITED, "g": GROUND}[qubit]
    if not 0 <= n < dims.n_fock:
        raise ValueError(f"Fock index {n} outside 0..{dims.n_fock - 1}")
    return q * dims.n_fock + n


def basis_projector(dims: HilbertDims, qubit: str, n: int) -> np.ndarray:
    """Pure product state ``|qubit, n><qubit, n|``."""
    rho = np.zeros((dims.total_dim, dims.total_dim), dtype=complex)
    i = basis_index(dims, qubit, n)
    rho[i, i] = 1.0
    return rho


def ground_state(dims: HilbertDims) -> np.ndarray:
    return basis_projector(dims, "g", 0)


def partial_trace(rho: np.ndarray, keep: str, dims: HilbertDims) -> np.ndarray:
    """Reduced density matrix of ``keep`` (``"qubit"`` or ``"photon"``)."""
    t = np.asarray(rho).reshape(2, dims.n_fock, 2, dims.n_fock)
    if keep == "qubit":
        return np.einsum("injn->ij", t)
    if keep == "photon":
        return np.einsum("iaib->ab", t)
    raise ValueError(f"keep must be 'qubit' or 'photon', got {keep!r}")


def hermitian_eigenvalues(m: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix."""
    m = np.asarray(m)
    dev = np.abs(m - m.conj().T).max() if m.size else 0.0
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian (max |M - M^dag| = {dev:.3e})")
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))


def check_density_matrix(rho: np.ndarray, *, herm_tol: float = HERMITIAN_TOL,
                         trace_tol: float = TRACE_TOL,
                         pos_tol: float = POSITIVITY_TOL) -> None:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit-trace and positive."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > herm_tol:
        raise ValueError(f"density matrix not Hermitian: deviation {herm:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {tr:.12g} differs from 1")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lam < -pos_tol:
        raise ValueError(f"density matrix has negative eigenvalue {lam:.3e}")
