"""Observables evaluated on either engine's output: occupations, correlators, entropies."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .hilbert import HilbertDims, joint_operators, partial_trace
from .meanfield import MBState

NEGATIVE_EIG_LIMIT = 1e-6
BLOCH_TOL = 1e-6


def expectation(rho: np.ndarray, op: np.ndarray) -> complex:
    rho, op = np.asarray(rho), np.asarray(op)
    if rho.shape != op.shape:
        raise ValueError(f"shape mismatch: rho {rho.shape} vs operator {op.shape}")
    # Tr(rho O) without forming the product
    return complex(np.einsum("ij,ji->", rho, op))


def fluctuation_correlator(rho: np.ndarray, a_op: np.ndarray, b_op: np.ndarray) -> complex:
    """``<A B> - <A><B>``, with ``A`` to the left."""
    return expectation(rho, a_op @ b_op) - expectation(rho, a_op) * expectation(rho, b_op)


def _entropy_of_spectrum(lam: np.ndarray) -> float:
    if lam.size and lam.min() < -NEGATIVE_EIG_LIMIT:
        raise ValueError(f"density matrix has eigenvalue {lam.min():.3e}")
    lam = np.clip(lam, 0.0, 1.0)
    lam = lam[lam > 0]
    return float(max(-(lam * np.log(lam)).sum(), 0.0)) + 0.0


def von_neumann_entropy(rho: np.ndarray) -> float:
    """``-Tr rho ln rho`` in nats."""
    rho = np.asarray(rho)
    return _entropy_of_spectrum(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)))


def meanfield_entropy(rho: np.ndarray, dims: HilbertDims) -> float:
    """Entropy of the product of ``rho``'s own reduced states, ``S(rho_q) + S(rho_ph)``."""
    return (von_neumann_entropy(partial_trace(rho, "qubit", dims))
            + von_neumann_entropy(partial_trace(rho, "photon", dims)))


def meanfield_entropy_mb(s: MBState) -> float:
    """Entropy of a factorized mean-field state.

    The cavity of the Maxwell-Bloch picture is a coherent state (entropy 0),
    so only the qubit contributes, with eigenvalues ``(1 +- |r|)/2`` for
    Bloch vector ``r``.
    """
    r = float(np.linalg.norm(s.bloch_vector))
    if r > 1.0 + BLOCH_TOL:
        raise ValueError(f"Bloch vector norm {r:.8f} exceeds 1")
    r = min(r, 1.0)
    return _entropy_of_spectrum(np.array([0.5 * (1 + r), 0.5 * (1 - r)]))


def entanglement_gap(rho: np.ndarray, dims: HilbertDims) -> float:
    """Qubit-photon mutual information ``S(rho_q) + S(rho_ph) - S(rho)``."""
    return meanfield_entropy(rho, dims) - von_neumann_entropy(rho)


@dataclass
class ObservableRecord:
    x: float
    n_ph: float
    n_q: float
    corr_a_sp: complex
    corr_a_sz: complex
    entropy: float
    entropy_mf: float
    source: str

    def validate(self, total_dim: int | None = None) -> None:
        if not -1e-8 <= self.n_q <= 1 + 1e-8:
            raise ValueError(f"n_q={self.n_q} outside [0, 1]")
        if self.n_ph < -1e-8:
            raise ValueError(f"n_ph={self.n_ph} is negative")
        top = math.log(total_dim) if total_dim else math.inf
        for name in ("entropy", "entropy_mf"):
            v = getattr(self, name)
            if not -1e-10 <= v <= top + 1e-10:
                raise ValueError(f"{name}={v} outside [0, ln dim]")

    def as_dict(self) -> dict:
        return asdict(self)


class LindbladObservables:
    """Evaluates all records for density matrices on one Fock cutoff."""

    def __init__(self, dims: HilbertDims):
        self.dims = dims
        o = joint_operators(dims)
        self.a = o.a
        self.sp = o.sp
        self.sz = o.sz
        self.n_photon = o.n_photon
        self.n_qubit = o.n_qubit

    def n_ph(self, rho) -> float:
        return expectation(rho, self.n_photon).real

    def n_q(self, rho) -> float:
        return expectation(rho, self.n_qubit).real

    def record(self, rho, x: float) -> ObservableRecord:
        rec = ObservableRecord(
            x=x,
            n_ph=self.n_ph(rho),
            n_q=self.n_q(rho),
            corr_a_sp=fluctuation_correlator(rho, self.a, self.sp),
            corr_a_sz=fluctuation_correlator(rho, self.a, self.sz),
            entropy=von_neumann_entropy(rho),
            entropy_mf=meanfield_entropy(rho, self.dims),
            source="lindblad",
        )
        rec.validate(self.dims.total_dim)
        return rec


def meanfield_record(s: MBState, x: float) -> ObservableRecord:
    """Record for a factorized state; its correlators vanish identically."""
    s_mf = meanfield_entropy_mb(s)
    rec = ObservableRecord(x=x, n_ph=s.n_ph, n_q=s.n_q, corr_a_sp=0j, corr_a_sz=0j,
                           entropy=s_mf, entropy_mf=s_mf, source="meanfield")
    rec.validate()
    return rec
