"""Spurious-minimizer certificates, landscape scans and spectral densities.

The certificate machinery turns the combinatorial lower bound on local
minimizers into a machine check: given candidate maximizers Z of the
(average) squared transform modulus, a radius r and a curvature c, it
verifies separation, local concavity on a fine grid, and the smallness
condition

    c r^2 / 2 > (b + 2a) ||uhat(any M-subset of Z)||^2 + b M sigma^2

with (a, b) the reconstructor-dependent deviation constants at
eps = 1/(md(Z) - 2r).  When everything holds, the cost function has at least
binom(K, M) * M! local minimizers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fourier import (
    Signal,
    _adjoint_values,
    canonicalize,
    gram_kernel,
    min_distance,
    sample_indices,
)
from .reconstruct import BACK_PROJECTION, PINV_RCUT, PSEUDO_INVERSE, Reconstructor

LANDSCAPE_TERMS = ("J1", "J2", "J3", "G1", "G2", "negF")


def deviation_constants(rec: Reconstructor, eps: float) -> tuple[float, float]:
    """Spectral deviation radii (a, b) of Q - Id and R^*R - Id at eps = 1/md.

    Only meaningful for eps < 1; larger eps makes the bounds vacuous and is
    rejected.
    """
    if not 0 < eps < 1:
        raise ValueError("deviation constants require 0 < eps < 1")
    if rec.kind == BACK_PROJECTION:
        return 0.0, eps
    if rec.kind == PSEUDO_INVERSE:
        return eps / (1 - eps), eps / (1 - eps)
    return eps / (1 - eps), 4 * eps / (1 - eps) ** 2


def _mean_power(signals: Sequence[Signal], points: np.ndarray) -> np.ndarray:
    """Average squared transform modulus of the family at the given points.

    Signals are processed in blocks through one matrix product per block
    (deterministic summation order, bounded memory).
    """
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    n_len = signals[0].n_len
    ker = np.exp(
        -2j * np.pi * np.outer(canonicalize(pts, n_len), sample_indices(n_len)) / n_len
    ) / np.sqrt(n_len)
    acc = np.zeros(pts.shape, dtype=float)
    block = max(1, 2**22 // max(pts.size, 1))
    for start in range(0, len(signals), block):
        u_mat = np.stack([s.values for s in signals[start : start + block]], axis=1)
        acc += np.sum(np.abs(ker @ u_mat) ** 2, axis=1)
    acc /= len(signals)
    return acc if np.ndim(points) else acc[0]


@dataclass
class Certificate:
    candidates: np.ndarray  # Z
    radius: float
    curvature: float
    separation: float  # md(Z)
    m_samples: int
    sigma: float
    kind: str
    holds: bool
    reason: str
    eps: float | None = None
    worst_energy: float | None = None
    condition_lhs: float | None = None
    condition_rhs: float | None = None
    count_lower_bound: int | None = None


def certify_spurious_minima(
    signals,
    candidates,
    radius: float,
    curvature: float,
    m_samples: int,
    sigma: float,
    rec: Reconstructor,
    concavity_steps: int = 100,
) -> Certificate:
    """Check the spurious-minimizer hypotheses for a maximizer set Z.

    ``signals`` may be a single Signal or a family; for a family the squared
    modulus is replaced by the average power spectral density.  The energy of
    the worst M-subset is bounded by the sum of the M largest candidate
    energies, giving one certificate valid for every subset.  Local concavity
    is verified numerically on a grid of step radius/concavity_steps over
    each [zeta - radius, zeta + radius].
    """
    if isinstance(signals, Signal):
        signals = (signals,)
    signals = tuple(signals)
    n_len = signals[0].n_len
    z = np.asarray(candidates, dtype=float)
    if radius <= 0 or curvature <= 0:
        raise ValueError("radius and curvature must be positive")
    k_count = z.size
    sep = min_distance(z, n_len) if k_count > 1 else n_len / 2
    base = Certificate(
        candidates=z,
        radius=radius,
        curvature=curvature,
        separation=sep,
        m_samples=m_samples,
        sigma=sigma,
        kind=rec.kind,
        holds=False,
        reason="",
    )
    if np.unique(np.sort(canonicalize(z, n_len))).size != k_count:
        base.reason = "candidate points are not pairwise distinct mod N"
        return base
    if k_count < m_samples:
        base.reason = f"need at least M={m_samples} candidates, got K={k_count}"
        return base
    if not sep > 1 + 2 * radius:
        base.reason = f"separation md(Z)={sep:g} must exceed 1 + 2r = {1 + 2 * radius:g}"
        return base

    power_at_z = _mean_power(signals, z)
    h = np.linspace(-radius, radius, 2 * concavity_steps + 1)
    for zeta, p_zeta in zip(z, power_at_z):
        prof = _mean_power(signals, zeta + h)
        if np.any(prof > p_zeta - 0.5 * curvature * h**2):
            base.reason = f"local concavity with c={curvature:g} fails near {zeta:g}"
            return base

    eps = 1.0 / (sep - 2 * radius)
    a, b = deviation_constants(rec, eps)
    worst = float(np.sort(power_at_z)[::-1][:m_samples].sum())
    lhs = 0.5 * curvature * radius**2
    rhs = (b + 2 * a) * worst + b * m_samples * sigma**2
    base.eps = eps
    base.worst_energy = worst
    base.condition_lhs = lhs
    base.condition_rhs = rhs
    if lhs > rhs:
        base.holds = True
        base.reason = "all hypotheses verified"
        base.count_lower_bound = math.comb(k_count, m_samples) * math.factorial(m_samples)
    else:
        base.reason = (
            f"smallness condition fails: c r^2/2 = {lhs:g} <= {rhs:g}"
        )
    return base


@dataclass(frozen=True)
class CountScaling:
    eta: float  # value used for M (quoted special cases where applicable)
    eta_formula: float  # the displayed closed form, reported side by side
    m_samples: int
    k_candidates: int
    lower_bound: float  # (1/(2 eta))^(eta sqrt(N))
    exact_count: int  # binom(K, M) * M!


def minimizer_count_scaling(n_len: int, sigma: float, rec: Reconstructor) -> CountScaling:
    """Scaling constants for the combinatorial minimizer count at size N.

    Returns both the quoted constants (0.109 for noiseless back-projection,
    3e-3 for sigma <= 1) and the displayed closed-form value
    pi^2 sqrt(2) / (256 (20 + 16 sigma^2)); the two are reported side by side
    because they do not coincide.
    """
    if n_len % 4:
        raise ValueError("n_len must be a multiple of 4")
    eta_formula = np.pi**2 * np.sqrt(2) / (256 * (20 + 16 * sigma**2))
    if sigma == 0 and rec.kind == BACK_PROJECTION:
        eta = 0.109
    elif sigma <= 1:
        eta = 3e-3
    else:
        eta = eta_formula
    sqrt_n = math.sqrt(n_len)
    m_samples = int(eta * sqrt_n)
    spacing = 2 * math.isqrt(n_len)
    k_candidates = n_len // spacing
    lower_bound = (1.0 / (2 * eta)) ** (eta * sqrt_n)
    exact = (
        math.comb(k_candidates, m_samples) * math.factorial(m_samples)
        if m_samples <= k_candidates
        else 0
    )
    return CountScaling(
        eta=eta,
        eta_formula=float(eta_formula),
        m_samples=m_samples,
        k_candidates=k_candidates,
        lower_bound=float(lower_bound),
        exact_count=exact,
    )


# ---------------------------------------------------------------------------
# grid scans


def _plateau_collapse(cand: np.ndarray, values: np.ndarray, offsets) -> list[tuple]:
    """Keep one representative per connected equal-valued candidate plateau.

    Representatives are the lexicographically smallest coordinates, and the
    returned list is sorted.
    """
    cand_set = set(zip(*np.nonzero(cand)))
    shape = values.shape
    seen = set()
    reps = []
    for node in sorted(cand_set):
        if node in seen:
            continue
        stack, comp = [node], [node]
        seen.add(node)
        val = values[node]
        while stack:
            cur = stack.pop()
            for off in offsets:
                nb = tuple((c + o) % s for c, o, s in zip(cur, off, shape))
                if nb in cand_set and nb not in seen and values[nb] == val:
                    seen.add(nb)
                    stack.append(nb)
                    comp.append(nb)
        reps.append(min(comp))
    return sorted(reps)


_OFFSETS_2D = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]
_OFFSETS_1D = [(-1,), (1,)]


def grid_local_minima(values: np.ndarray) -> list[tuple[int, int]]:
    """Local minima of a periodic 2D grid.

    A node qualifies if it is <= all 8 neighbors (periodic wrap) and < at
    least one of them; plateaus of equal qualifying nodes collapse to their
    lexicographically smallest node.
    """
    le_all = np.ones(values.shape, dtype=bool)
    lt_any = np.zeros(values.shape, dtype=bool)
    for di, dj in _OFFSETS_2D:
        nb = np.roll(np.roll(values, di, axis=0), dj, axis=1)
        le_all &= values <= nb
        lt_any |= values < nb
    return _plateau_collapse(le_all & lt_any, values, _OFFSETS_2D)


def grid_local_maxima_1d(values: np.ndarray) -> list[int]:
    """Local maxima of a periodic 1D grid, same plateau rule as the 2D scan."""
    le_all = np.ones(values.shape, dtype=bool)
    lt_any = np.zeros(values.shape, dtype=bool)
    for (d,) in _OFFSETS_1D:
        nb = np.roll(values, d)
        le_all &= values >= nb
        lt_any |= values > nb
    reps = _plateau_collapse(le_all & lt_any, -values, _OFFSETS_1D)
    return [i for (i,) in reps]


@dataclass
class LandscapeGrid:
    term: str
    n_len: int
    res: int
    axis: np.ndarray  # res grid coordinates covering [-N/2, N/2)
    values: np.ndarray  # values[i, j] = term(xi1=axis[i], xi2=axis[j])
    minima: list = field(default_factory=list)  # grid coordinates (i, j)

    def minima_coords(self) -> np.ndarray:
        if not self.minima:
            return np.zeros((0, 2))
        idx = np.asarray(self.minima)
        return np.stack([self.axis[idx[:, 0]], self.axis[idx[:, 1]]], axis=1)


def scan_landscape(
    signals,
    term: str,
    n_len: int,
    res: int = 256,
    sigma: float = 0.0,
    lam: float | None = None,
    bias_correct: bool = True,
) -> LandscapeGrid:
    """Evaluate a two-point cost term over a res x res periodic grid.

    Supported terms: J1, J2, J3 (full costs for the three reconstructors),
    G1, G2 (interference terms) and negF (negative captured energy).  J3
    requires lam > 0.  The grid covers [-N/2, N/2)^2 and local minima are
    detected with the periodic 8-neighbor plateau rule.
    """
    if term not in LANDSCAPE_TERMS:
        raise ValueError(f"unknown term {term!r}; expected one of {LANDSCAPE_TERMS}")
    if res < 8:
        raise ValueError("res must be at least 8")
    if term == "J3":
        if lam is None or not lam > 0:
            raise ValueError("term J3 requires lam > 0")
    if isinstance(signals, Signal):
        signals = (signals,)
    signals = tuple(signals)
    if any(s.n_len != n_len for s in signals):
        raise ValueError("signal length must match n_len")

    axis = -n_len / 2 + np.arange(res) * (n_len / res)
    kernel = gram_kernel(axis[:, None] - axis[None, :], n_len)
    values = np.zeros((res, res))
    for s in signals:
        values += _two_point_term(
            s, axis, kernel, term, sigma, lam, bias_correct
        )
    values /= len(signals)
    if term in ("J1", "J2", "J3"):
        values += _two_point_noise(kernel, term, sigma, lam, bias_correct)
    grid = LandscapeGrid(term=term, n_len=n_len, res=res, axis=axis, values=values)
    grid.minima = grid_local_minima(values)
    return grid


def _pinv_split(kernel: np.ndarray, uh1: np.ndarray, uh2: np.ndarray):
    """Eigen data of the 2x2 Gram over the whole grid.

    Eigenvalues are 1 +- |k|; projections p_pm onto the eigenvectors come in
    closed form, with the small eigenvalue dropped below the pseudo-inverse
    cutoff.
    """
    mod = np.abs(kernel)
    phase = np.where(mod > 0, kernel / np.where(mod > 0, mod, 1.0), 1.0)
    tau_hi = 1.0 + mod
    tau_lo = 1.0 - mod
    p_hi = (np.conj(phase) * uh1 + uh2) / np.sqrt(2)
    p_lo = (np.conj(phase) * uh1 - uh2) / np.sqrt(2)
    keep_lo = tau_lo > PINV_RCUT * tau_hi
    return tau_hi, tau_lo, np.abs(p_hi) ** 2, np.abs(p_lo) ** 2, keep_lo


def _two_point_term(s, axis, kernel, term, sigma, lam, bias_correct):
    uh = _adjoint_values(s.values, axis)
    uh1 = uh[:, None]
    uh2 = uh[None, :]
    energy = np.abs(uh1) ** 2 + np.abs(uh2) ** 2
    cross = np.real(kernel * uh2 * np.conj(uh1))
    if term == "negF":
        return -0.5 * energy
    if term == "G1":
        return cross
    if term == "J1":
        return 0.5 * s.norm_sq() - 0.5 * energy + cross
    ones = np.ones_like(kernel.real)
    tau_hi, tau_lo, ph, pl, keep = _pinv_split(kernel, uh1 * ones, uh2 * ones)
    if term in ("G2", "J2"):
        quad = ph / tau_hi + np.where(keep, pl / np.where(keep, tau_lo, 1.0), 0.0)
        if term == "G2":
            return 0.5 * (energy - quad)
        return 0.5 * s.norm_sq() - 0.5 * quad
    # J3
    factor = 1.0 + lam if bias_correct else 1.0
    q_hi = factor / (tau_hi + lam)
    q_lo = factor / (tau_lo + lam)
    quad_q = q_hi * ph + q_lo * pl
    quad_rr = tau_hi * q_hi**2 * ph + tau_lo * q_lo**2 * pl
    return 0.5 * s.norm_sq() - quad_q + 0.5 * quad_rr


def _two_point_noise(kernel, term, sigma, lam, bias_correct):
    if sigma == 0:
        return 0.0
    if term == "J1":
        return sigma**2  # trace(L) = M = 2, halved
    mod = np.abs(kernel)
    tau_hi, tau_lo = 1.0 + mod, 1.0 - mod
    if term == "J2":
        keep = tau_lo > PINV_RCUT * tau_hi
        tr = 1.0 / tau_hi + np.where(keep, 1.0 / np.where(keep, tau_lo, 1.0), 0.0)
    else:
        factor = 1.0 + lam if bias_correct else 1.0
        tr = tau_hi * (factor / (tau_hi + lam)) ** 2 + tau_lo * (factor / (tau_lo + lam)) ** 2
    return 0.5 * sigma**2 * tr


# ---------------------------------------------------------------------------
# average power spectral density


@dataclass
class PsdProfile:
    n_len: int
    grid: np.ndarray
    rho: np.ndarray
    maxima: list  # grid indices

    def maxima_coords(self) -> np.ndarray:
        return self.grid[np.asarray(self.maxima, dtype=int)] if self.maxima else np.zeros(0)

    def max_curvatures(self) -> np.ndarray:
        """Centered-second-difference curvature magnitude at each maximum."""
        if not self.maxima:
            return np.zeros(0)
        h = self.grid[1] - self.grid[0]
        idx = np.asarray(self.maxima, dtype=int)
        second = (
            np.roll(self.rho, 1)[idx] - 2 * self.rho[idx] + np.roll(self.rho, -1)[idx]
        ) / h**2
        return -second


def average_psd(signals, grid_points: int = 20) -> PsdProfile:
    """Average power spectral density on a uniform grid of grid_points*N samples.

    Maxima are detected with the 1D periodic plateau rule.
    """
    if isinstance(signals, Signal):
        signals = (signals,)
    signals = tuple(signals)
    if not signals:
        raise ValueError("need at least one signal")
    n_len = signals[0].n_len
    total = grid_points * n_len
    grid = -n_len / 2 + np.arange(total) / grid_points
    rho = _mean_power(signals, grid)
    return PsdProfile(
        n_len=n_len, grid=grid, rho=rho, maxima=grid_local_maxima_1d(rho)
    )
