"""Linear reconstructors and their M x M factor Q(Xi).

Every reconstructor here factors as R(Xi) = A(Xi) Q(Xi), so solves stay in the
M x M Gram domain and reconstructions live in the span of the sampled atoms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourier import Signal, gram_closed_form, nuft_matrix

BACK_PROJECTION = "back_projection"
PSEUDO_INVERSE = "pseudo_inverse"
TIKHONOV = "tikhonov"
KINDS = (BACK_PROJECTION, PSEUDO_INVERSE, TIKHONOV)

# Relative eigenvalue cutoff for the pseudo-inverse: eigenvalues below
# PINV_RCUT * max eigenvalue are treated as zero so that colliding sampling
# points degrade gracefully instead of producing infinities.
PINV_RCUT = 1e-10


@dataclass(frozen=True)
class Reconstructor:
    """One of back-projection, pseudo-inverse, or Tikhonov-regularized inverse.

    ``bias_correct`` keeps the (1+lam) factor that compensates the shrinkage
    of the regularized solve; pass False for the plain ridge solver.
    """

    kind: str
    lam: float = 0.0
    bias_correct: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown reconstructor kind: {self.kind!r}")
        if self.kind == TIKHONOV and not self.lam > 0:
            raise ValueError("tikhonov requires lam > 0 (pseudo_inverse is the lam->0 limit)")
        if self.kind != TIKHONOV and self.lam:
            raise ValueError(f"lam is only meaningful for tikhonov, got {self.lam}")


def back_projection() -> Reconstructor:
    return Reconstructor(BACK_PROJECTION)


def pseudo_inverse() -> Reconstructor:
    return Reconstructor(PSEUDO_INVERSE)


def tikhonov(lam: float, bias_correct: bool = True) -> Reconstructor:
    return Reconstructor(TIKHONOV, lam=lam, bias_correct=bias_correct)


def q_eigenvalues(rec: Reconstructor, tau: np.ndarray) -> np.ndarray:
    """Map Gram eigenvalues tau to eigenvalues of Q(Xi) (same eigenvectors)."""
    tau = np.asarray(tau, dtype=float)
    if rec.kind == BACK_PROJECTION:
        return np.ones_like(tau)
    if rec.kind == PSEUDO_INVERSE:
        cut = PINV_RCUT * max(tau.max(), 0.0)
        with np.errstate(divide="ignore"):
            inv = np.where(tau > cut, 1.0 / np.where(tau > cut, tau, 1.0), 0.0)
        return inv
    factor = 1.0 + rec.lam if rec.bias_correct else 1.0
    return factor / (tau + rec.lam)


def rr_eigenvalues(rec: Reconstructor, tau: np.ndarray) -> np.ndarray:
    """Eigenvalues of R(Xi)^* R(Xi) = Q^* L Q, namely tau * q(tau)^2."""
    q = q_eigenvalues(rec, tau)
    return np.asarray(tau, dtype=float) * q * q


def _eig_rebuild(eigvecs: np.ndarray, diag: np.ndarray) -> np.ndarray:
    out = (eigvecs * diag) @ eigvecs.conj().T
    return 0.5 * (out + out.conj().T)


def q_factor(rec: Reconstructor, gram: np.ndarray) -> np.ndarray:
    """Hermitian M x M factor Q(Xi) for a given Gram matrix."""
    if rec.kind == BACK_PROJECTION:
        return np.eye(gram.shape[0], dtype=np.complex128)
    tau, vecs = np.linalg.eigh(gram)
    return _eig_rebuild(vecs, q_eigenvalues(rec, tau))


def rr_factor(rec: Reconstructor, gram: np.ndarray) -> np.ndarray:
    """Hermitian PSD matrix R(Xi)^* R(Xi) = Q^* L Q."""
    if rec.kind == BACK_PROJECTION:
        return gram.copy()
    tau, vecs = np.linalg.eigh(gram)
    return _eig_rebuild(vecs, rr_eigenvalues(rec, tau))


def reconstruct(rec: Reconstructor, y, freqs, n_len: int) -> Signal:
    """Reconstruct a signal from measurements: A(Xi) Q(Xi) y.

    Never forms an N x N system; all linear algebra is M x M.
    """
    y = np.asarray(y, dtype=np.complex128)
    gram = gram_closed_form(freqs, n_len)
    q = q_factor(rec, gram)
    return Signal(nuft_matrix(freqs, n_len) @ (q @ y))
