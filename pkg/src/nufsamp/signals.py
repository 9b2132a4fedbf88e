"""Generators for the signal families used in the experiments.

All RNG goes through numpy's default ``Generator`` (PCG64) seeded explicitly,
so datasets are reproducible byte-for-byte given (seed, index).  Dataset
export is a plain columnar text file (one signal per row, each complex entry
as two floats) with a JSON sidecar recording the model parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fourier import Signal, sample_indices


def high_freq_cosine(n_len: int) -> Signal:
    """Two impulses of height sqrt(N)/2 at n = +-N/4.

    The transform is exactly cos(pi xi / 2): maximal modulus at every even
    integer, which is the canonical landscape full of spurious minimizers.
    """
    if n_len % 4:
        raise ValueError("n_len must be a multiple of 4")
    values = np.zeros(n_len, dtype=np.complex128)
    half = np.sqrt(n_len) / 2
    values[n_len // 2 + n_len // 4] = half
    values[n_len // 2 - n_len // 4] = half
    return Signal(values)


def low_freq_sine(n_len: int) -> Signal:
    """Antisymmetric two-point signal at n = +-1, unit norm.

    Its transform is sqrt(2/N) sin(2 pi xi / N): a single slow oscillation
    over the torus, maximal modulus only at xi = +-N/4.
    """
    values = np.zeros(n_len, dtype=np.complex128)
    values[n_len // 2 + 1] = 1j / np.sqrt(2)
    values[n_len // 2 - 1] = -1j / np.sqrt(2)
    return Signal(values)


def gaussian_bump(n_len: int, width: float | None = None) -> Signal:
    """Unit-norm sampled Gaussian u[n] ~ exp(-n^2 / (2 width^2)).

    Default width is N/8.  Note the transform of a *truncated* Gaussian has
    exponentially small oscillatory tails; widths around 1-1.5 keep the
    transform modulus strictly unimodal on the whole torus, wider bumps do
    not.
    """
    if width is None:
        width = n_len / 8
    if not width > 0:
        raise ValueError("width must be positive")
    n = sample_indices(n_len)
    values = np.exp(-(n.astype(float) ** 2) / (2 * width**2))
    return Signal(values / np.linalg.norm(values))


@dataclass(frozen=True)
class RectangleModel:
    """Random rectangles: u[n] is the overlap of [n-1/2, n+1/2] with [a, b].

    a and b are drawn uniformly in [-N/2+1, N/2-1] and swapped into order;
    coinciding draws are rejected and redrawn so the zero signal is never
    emitted.  Signals are renormalized to unit l2 norm.
    """

    n_len: int

    def draw(self, rng: np.random.Generator) -> Signal:
        lo, hi = -self.n_len / 2 + 1, self.n_len / 2 - 1
        while True:
            a, b = rng.uniform(lo, hi, size=2)
            if a > b:
                a, b = b, a
            if a == b:
                continue
            values = self.box_signal(a, b)
            norm = np.linalg.norm(values)
            if norm > 0:
                return Signal(values / norm)

    def box_signal(self, a: float, b: float) -> np.ndarray:
        """Unnormalized overlap lengths of the cells [n-1/2, n+1/2] with [a, b]."""
        n = sample_indices(self.n_len).astype(float)
        return (
            np.clip(np.minimum(b, n + 0.5) - np.maximum(a, n - 0.5), 0.0, None)
        ).astype(np.complex128)



def rectangle_dataset(n_len: int, count: int, seed: int) -> list[Signal]:
    """Reproducible dataset of rectangle signals.

    Drawn sequentially from one seeded generator, so the first P signals of a
    larger dataset with the same seed form exactly the smaller dataset.
    """
    model = RectangleModel(n_len)
    rng = np.random.default_rng(seed)
    return [model.draw(rng) for _ in range(count)]


def save_dataset(directory, signals, meta: dict) -> None:
    """Write signals.csv (one row per signal, re/im interleaved) + sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    u_mat = np.stack([s.values for s in signals])
    flat = np.empty((u_mat.shape[0], 2 * u_mat.shape[1]))
    flat[:, 0::2] = u_mat.real
    flat[:, 1::2] = u_mat.imag
    np.savetxt(directory / "signals.csv", flat, fmt="%.17g", delimiter=",")
    sidecar = dict(meta)
    sidecar.setdefault("n_len", signals[0].n_len)
    sidecar.setdefault("count", len(signals))
    (directory / "signals.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))


def load_dataset(directory) -> tuple[list[Signal], dict]:
    directory = Path(directory)
    meta = json.loads((directory / "signals.json").read_text())
    flat = np.loadtxt(directory / "signals.csv", delimiter=",", ndmin=2)
    values = flat[:, 0::2] + 1j * flat[:, 1::2]
    return [Signal(row) for row in values], meta
