"""Seeded random-matrix samplers (Haar unitaries, GUE, complex Hadamard matrices).

Every sampler takes either an integer seed or a ``numpy.random.Generator``;
none touches global RNG state.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng", "haar_unitary", "gue_matrix", "dft_matrix", "random_complex_hadamard"]


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator for an int seed; generators pass through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def _complex_gaussian(rng, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def haar_unitary(D: int, seed=None) -> np.ndarray:
    """Haar-distributed D x D unitary.

    QR of a complex Ginibre matrix with the phases of diag(R) absorbed into Q,
    which makes the distribution exactly Haar (Mezzadri 2007).
    """
    rng = make_rng(seed)
    Z = _complex_gaussian(rng, (D, D))
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))


def gue_matrix(D: int, seed=None) -> np.ndarray:
    """GUE matrix with density proportional to exp(-D Tr H^2 / 2).

    The semicircle then has support [-2, 2].
    """
    rng = make_rng(seed)
    A = _complex_gaussian(rng, (D, D))
    return (A + A.conj().T) / (2.0 * np.sqrt(D)) * np.sqrt(2.0)


def dft_matrix(D: int) -> np.ndarray:
    """X_kn = D^-1/2 exp(-2 pi i k n / D)."""
    k = np.arange(D)
    return np.exp(-2j * np.pi * np.outer(k, k) / D) / np.sqrt(D)


def random_complex_hadamard(D: int, seed=None) -> np.ndarray:
    """Random-phase dressing diag(a) F diag(b) of the DFT matrix.

    Still unitary with |X_kn|^2 = 1/D, but not equivalent to F itself.
    """
    rng = make_rng(seed)
    a = np.exp(2j * np.pi * rng.random(D))
    b = np.exp(2j * np.pi * rng.random(D))
    return (a[:, None] * dft_matrix(D)) * b[None, :]
