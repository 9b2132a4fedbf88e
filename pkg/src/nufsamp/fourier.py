"""Signals, sampling schemes and nonuniform Fourier operators on the period-N torus.

A signal is a complex vector of even length N.  Storage slot ``k`` holds the
sample at grid index ``n = k - N/2``, so the index range is
``n = -N/2 .. N/2 - 1``.  A sampling scheme is an ordered vector of M real
frequencies measured in index cycles over the period-N torus; frequencies are
kept unreduced by callers (optimizer trajectories live on the unwrapped axis)
and every operator reduces them mod N internally, which also makes all
operators exactly N-periodic in each frequency.

Sign conventions: the sampling atom is a(xi)[n] = exp(+2i pi xi n / N)/sqrt(N)
while the transform uses the negative exponent, so that the transform of u at
the scheme equals A(Xi)^* u.  The two signs are deliberately paired; tests pin
the pairing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# |sin(pi d / N)| below this triggers the removable-singularity branch of the
# Dirichlet kernel (d within ~4e-13*N of a multiple of N).
SINGULARITY_TOL = 1e-12


def sample_indices(n_len: int) -> np.ndarray:
    """Grid indices n = -N/2 .. N/2-1 in storage order."""
    return np.arange(n_len) - n_len // 2


@dataclass(frozen=True)
class Signal:
    """Complex vector of even length N, immutable after construction."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128).copy()
        if values.ndim != 1 or values.size == 0 or values.size % 2:
            raise ValueError("signal must be a 1D complex vector of even length")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n_len(self) -> int:
        return self.values.size

    def norm_sq(self) -> float:
        return float(np.vdot(self.values, self.values).real)


def canonicalize(freqs, n_len: int) -> np.ndarray:
    """Reduce frequencies mod N into [-N/2, N/2)."""
    f = np.asarray(freqs, dtype=float)
    return ((f + n_len / 2) % n_len) - n_len / 2


def torus_dist(xi1: float, xi2: float, n_len: int) -> float:
    """Distance between two frequencies on the period-N torus, in [0, N/2]."""
    if n_len < 2:
        raise ValueError("n_len must be >= 2")
    return float(np.abs(canonicalize(np.asarray(xi1) - np.asarray(xi2), n_len)))


def min_distance(freqs, n_len: int) -> float:
    """Smallest pairwise torus distance of a scheme.

    For M = 1 there is no pair constraint and the value is defined as N/2
    (the largest possible torus distance); callers relying on separation
    bounds get the weakest-possible but well-defined number.
    """
    f = np.asarray(freqs, dtype=float)
    if f.ndim != 1 or f.size < 1:
        raise ValueError("scheme must hold at least one frequency")
    if f.size == 1:
        return n_len / 2
    diffs = np.abs(canonicalize(f[:, None] - f[None, :], n_len))
    iu = np.triu_indices(f.size, k=1)
    return float(diffs[iu].min())


def atom(xi: float, n_len: int) -> np.ndarray:
    """Unit-norm sampling atom a(xi) with entries exp(2i pi xi n / N)/sqrt(N)."""
    xi_c = canonicalize(xi, n_len)
    n = sample_indices(n_len)
    return np.exp(2j * np.pi * xi_c * n / n_len) / np.sqrt(n_len)


def nuft_matrix(freqs, n_len: int) -> np.ndarray:
    """N x M matrix A(Xi) whose columns are the atoms a(xi_m).

    The phase is associated exactly as in ``atom`` so each column is
    bit-identical to an independent atom evaluation.
    """
    f = canonicalize(freqs, n_len)
    n = sample_indices(n_len)
    return np.exp((2j * np.pi * f)[None, :] * n[:, None] / n_len) / np.sqrt(n_len)


def nuft_adjoint(u: Signal, freqs) -> np.ndarray:
    """Transform of u at the scheme: component m is
    (1/sqrt(N)) sum_n u_n exp(-2i pi xi_m n / N)."""
    return _adjoint_values(u.values, freqs)


def _adjoint_values(values: np.ndarray, freqs) -> np.ndarray:
    n_len = values.size
    f = canonicalize(freqs, n_len)
    n = sample_indices(n_len)
    return np.exp(-2j * np.pi * np.outer(f, n) / n_len) @ values / np.sqrt(n_len)


def nuft_adjoint_deriv(u: Signal, freqs) -> np.ndarray:
    """Exact frequency derivative of the transform (factor -2i pi n / N per term)."""
    return _adjoint_deriv_values(u.values, freqs)


def _adjoint_deriv_values(values: np.ndarray, freqs) -> np.ndarray:
    n_len = values.size
    n = sample_indices(n_len)
    return _adjoint_values(values * (-2j * np.pi * n / n_len), freqs)


def nuft_forward(y, freqs, n_len: int) -> Signal:
    """Apply A(Xi) to a measurement vector, producing a signal."""
    y = np.asarray(y, dtype=np.complex128)
    return Signal(nuft_matrix(freqs, n_len) @ y)


def gram_kernel(delta, n_len: int) -> np.ndarray:
    """Off-diagonal Gram entry as a function of the frequency difference.

    kernel(d) = (1/N) exp(i pi d / N) sin(pi d)/sin(pi d / N), with the
    removable singularity at d in N*Z evaluated as its limit 1, and exact 0
    at the remaining integers so that subgrids produce an exact identity.
    """
    d = canonicalize(delta, n_len)
    scalar = d.ndim == 0
    d = np.atleast_1d(d)
    out = np.empty(d.shape, dtype=np.complex128)
    s = np.sin(np.pi * d / n_len)
    limit = np.abs(s) < SINGULARITY_TOL
    rounded = np.round(d)
    exact_int = (d == rounded) & ~limit
    generic = ~(limit | exact_int)
    out[limit] = 1.0
    out[exact_int] = np.where(rounded[exact_int] % n_len == 0, 1.0, 0.0)
    dg = d[generic]
    sg = s[generic]
    phase = np.cos(np.pi * dg / n_len) + 1j * sg
    out[generic] = phase * np.sin(np.pi * dg) / (n_len * sg)
    return out[0] if scalar else out


def gram_kernel_deriv(delta, n_len: int) -> np.ndarray:
    """Derivative of ``gram_kernel`` in the frequency difference.

    The limit at d in N*Z is i pi / N.  This is the pointwise derivative of
    the kernel function; note the Gram matrix diagonal itself is constant.
    """
    d = canonicalize(delta, n_len)
    scalar = d.ndim == 0
    out = gram_kernel_with_deriv(np.atleast_1d(d), n_len)[1]
    return out[0] if scalar else out


def gram_kernel_with_deriv(delta, n_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Kernel and its derivative together, sharing the trigonometric work.

    The kernel uses the generic formula everywhere except the singularity
    branch (no exact-integer snap), which is what iterative solvers want:
    values vary smoothly across integer differences.
    """
    d = canonicalize(delta, n_len)
    s = np.sin(np.pi * d / n_len)
    c = np.cos(np.pi * d / n_len)
    sin_d = np.sin(np.pi * d)
    cos_d = np.cos(np.pi * d)
    limit = np.abs(s) < SINGULARITY_TOL
    s_safe = np.where(limit, 1.0, s)
    phase = c + 1j * s
    ratio = sin_d / s_safe
    kernel = np.where(limit, 1.0 + 0j, phase * ratio / n_len)
    ratio_deriv = (
        np.pi * cos_d * s_safe - (np.pi / n_len) * sin_d * c
    ) / s_safe**2
    deriv = np.where(
        limit,
        1j * np.pi / n_len,
        phase * ((1j * np.pi / n_len) * ratio + ratio_deriv) / n_len,
    )
    return kernel, deriv


def gram_closed_form(freqs, n_len: int) -> np.ndarray:
    """M x M Gram matrix A(Xi)^* A(Xi) from the closed-form kernel.

    Built from the strict lower triangle so the result is exactly Hermitian
    with an exactly unit diagonal.
    """
    f = np.asarray(freqs, dtype=float)
    m = f.size
    gram = np.eye(m, dtype=np.complex128)
    il, jl = np.tril_indices(m, k=-1)
    vals = gram_kernel(f[il] - f[jl], n_len)
    gram[il, jl] = vals
    gram[jl, il] = np.conj(vals)
    return gram


def gram_partial(freqs, n_len: int, m: int, m_prime: int) -> complex:
    """Partial derivative of Gram entry (m, m') with respect to xi_m.

    The diagonal is rejected rather than reported as zero: its entry is the
    constant 1 and asking for its derivative is almost always a bug.
    Satisfies |value| <= pi/N + 4/dist(xi_m, xi_m').
    """
    if m == m_prime:
        raise ValueError("gram_partial is undefined on the diagonal (entry is constant 1)")
    f = np.asarray(freqs, dtype=float)
    return complex(gram_kernel_deriv(f[m] - f[m_prime], n_len))
