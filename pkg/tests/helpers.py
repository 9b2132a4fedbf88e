"""Shared draw helpers for the randomized tests."""

import numpy as np

from nufsamp import Signal


def random_signal(rng, n_len, unit=True):
    values = rng.normal(size=n_len) + 1j * rng.normal(size=n_len)
    if unit:
        values /= np.linalg.norm(values)
    return Signal(values)


def separated_scheme(rng, n_len, m, gap=1.05):
    """Scheme with md(Xi) >= gap by construction: gaps drawn on the circle."""
    gaps = rng.dirichlet(np.ones(m)) * (n_len - gap * m) + gap
    pos = np.cumsum(gaps) - n_len / 2 + rng.uniform(0, n_len)
    return ((pos + n_len / 2) % n_len) - n_len / 2


def random_subgrid(rng, n_len, m, dyadic_offset=True):
    """Distinct integers plus a shared dyadic offset: differences stay exact."""
    ints = rng.choice(n_len, size=m, replace=False) - n_len // 2
    offset = rng.integers(0, 8) / 8.0 if dyadic_offset else 0.0
    return ints.astype(float) + offset
