"""
Spectrum-level quantities.

Diagonalization of Hermitian operators, the per-level density of states and
its Fourier transform N~(t) = D^-1 sum_n exp(-i E_n t), the spectral form
factor K(t) = |N~(t)|^2, the spectral variance, the Mandelstam-Tamm type
envelope cos^2(sigma_E t), DOS histograms and their Gaussian smoothing, and
a numerical check of Fourier non-negativity.

Conventions
-----------
hbar = 1. N~ is normalized per level, so N~(0) = 1 and K(0) = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionZero,
    GridTooNarrow,
    InputError,
    NonHermitianInput,
    NonpositiveBinWidth,
    NonpositiveSigma,
)

__all__ = [
    "SpectralDecomposition",
    "TimeSeries",
    "WindowedSeries",
    "DosHistogram",
    "FourierPositivityReport",
    "diagonalize",
    "spectrum_only",
    "dos_fourier",
    "sff_from_spectrum",
    "sff_plateau",
    "spectral_variance",
    "mt_envelope",
    "dos_histogram",
    "gaussian_smooth_dos",
    "check_fourier_nonnegativity",
    "HERMIT_RTOL",
    "NONNEG_TOL",
]

HERMIT_RTOL = 1e-10
NONNEG_TOL = 1e-8

# rows of the (times x levels) phase matrix evaluated per block; bounds memory
_PHASE_BLOCK_ELEMENTS = 1 << 21


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian operator.

    Columns of ``eigenvectors`` are the eigenstates |E_n>.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        E = np.asarray(self.eigenvalues, dtype=float)
        W = np.asarray(self.eigenvectors, dtype=complex)
        if E.ndim != 1 or W.shape != (E.size, E.size):
            raise InputError(
                f"eigenvalues shape {E.shape} incompatible with eigenvectors shape {W.shape}"
            )
        if E.size == 0:
            raise DimensionZero("spectral decomposition of a zero-dimensional space")
        if np.any(np.diff(E) < 0):
            raise InputError("eigenvalues must be sorted ascending")
        E.setflags(write=False)
        W.setflags(write=False)
        object.__setattr__(self, "eigenvalues", E)
        object.__setattr__(self, "eigenvectors", W)

    @property
    def dimension(self) -> int:
        return int(self.eigenvalues.size)

    def reconstruct(self) -> np.ndarray:
        W = self.eigenvectors
        return (W * self.eigenvalues) @ W.conj().T

    def unitarity_residual(self) -> float:
        W = self.eigenvectors
        return float(np.abs(W.conj().T @ W - np.eye(self.dimension)).max())


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Values sampled on a strictly increasing time grid."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values)
        if t.ndim != 1 or v.shape[:1] != t.shape:
            raise InputError(f"times {t.shape} and values {v.shape} lengths differ")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise InputError("times must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.times.size)

    def window(self, t_lo: float, t_hi: float) -> "TimeSeries":
        m = (self.times >= t_lo) & (self.times <= t_hi)
        return TimeSeries(self.times[m], self.values[m])


@dataclass(frozen=True, eq=False)
class WindowedSeries(TimeSeries):
    """A time series with a per-point validity flag."""

    in_window: np.ndarray = None

    def __post_init__(self):
        super().__post_init__()
        flags = np.asarray(self.in_window, dtype=bool)
        if flags.shape != self.times.shape:
            raise InputError("in_window must have one flag per time point")
        flags.setflags(write=False)
        object.__setattr__(self, "in_window", flags)


@dataclass(frozen=True, eq=False)
class DosHistogram:
    """Density of states per level, piecewise constant on bins."""

    bin_edges: np.ndarray
    densities: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        dens = np.asarray(self.densities, dtype=float)
        if edges.ndim != 1 or dens.shape != (edges.size - 1,):
            raise InputError("need exactly one density per bin")
        if np.any(np.diff(edges) <= 0):
            raise InputError("bin edges must be strictly increasing")
        if np.any(dens < 0):
            raise InputError("densities must be non-negative")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "densities", dens)

    @property
    def bin_widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.densities * self.bin_widths))


@dataclass(frozen=True)
class FourierPositivityReport:
    min_density: float
    nonneg: bool
    energies: np.ndarray
    densities: np.ndarray


def diagonalize(H, hermit_tol: float | None = None) -> SpectralDecomposition:
    """Diagonalize a Hermitian matrix.

    Parameters
    ----------
    H : array_like, shape (D, D)
        Complex Hermitian matrix.
    hermit_tol : float, optional
        Maximum allowed entrywise |H - H^dagger|. Defaults to
        ``1e-10 * max|H|``.

    Raises
    ------
    DimensionZero
        If D = 0.
    NonHermitianInput
        If H deviates from Hermiticity by more than ``hermit_tol``.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InputError(f"expected a square matrix, got shape {H.shape}")
    if H.shape[0] == 0:
        raise DimensionZero("cannot diagonalize a 0x0 matrix")
    scale = float(np.abs(H).max())
    tol = HERMIT_RTOL * scale if hermit_tol is None else hermit_tol
    dev = float(np.abs(H - H.conj().T).max())
    if dev > tol:
        raise NonHermitianInput(f"max|H - H^dagger| = {dev:.3e} exceeds tolerance {tol:.3e}")
    E, W = np.linalg.eigh(H)
    return SpectralDecomposition(E, W)


def spectrum_only(eigenvalues) -> SpectralDecomposition:
    """Decomposition of diag(eigenvalues) in its own eigenbasis (sorted)."""
    E = np.sort(np.asarray(eigenvalues, dtype=float).ravel())
    return SpectralDecomposition(E, np.eye(E.size, dtype=complex))


def _as_times(times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.ndim != 1:
        raise InputError("times must be one-dimensional")
    return t


def phase_sums(energies, times, weights=None) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(centered, carrier)`` with sum_n w_n exp(-i E_n t) = carrier * centered.

    ``centered`` uses energies shifted by their mean, which keeps the phases
    small for long times; ``carrier`` is the unit-modulus factor exp(-i Ebar t).
    Each time point is reduced independently with numpy's row reduction, so the
    result does not depend on how the time grid is partitioned.
    """
    E = np.asarray(energies, dtype=float)
    t = _as_times(times)
    Ebar = float(E.mean())
    Ec = E - Ebar
    w = None if weights is None else np.asarray(weights)
    out = np.empty(t.size, dtype=complex)
    rows = max(1, _PHASE_BLOCK_ELEMENTS // max(E.size, 1))
    for s in range(0, t.size, rows):
        ph = np.exp(-1j * np.multiply.outer(t[s:s + rows], Ec))
        if w is not None:
            ph *= w
        out[s:s + rows] = ph.sum(axis=1)
    return out, np.exp(-1j * Ebar * t)


def dos_fourier(spec: SpectralDecomposition, times) -> TimeSeries:
    """Fourier transform of the per-level density of states, N~(t) = D^-1 Tr exp(-iHt)."""
    t = _as_times(times)
    centered, carrier = phase_sums(spec.eigenvalues, t)
    return TimeSeries(t, carrier * (centered / spec.dimension))


def sff_from_spectrum(spec: SpectralDecomposition, times) -> TimeSeries:
    """Spectral form factor K(t) = |N~(t)|^2."""
    t = _as_times(times)
    centered, _ = phase_sums(spec.eigenvalues, t)
    z = centered / spec.dimension
    return TimeSeries(t, z.real**2 + z.imag**2)


def sff_plateau(spec: SpectralDecomposition, degeneracy_tol: float = 1e-9) -> float:
    """Infinite-time average of K(t): sum over distinct levels of (multiplicity / D)^2.

    Eigenvalues closer than ``degeneracy_tol`` (relative to the spectral width,
    absolute for a degenerate spectrum) count as one level.
    """
    E = spec.eigenvalues
    width = float(E[-1] - E[0])
    tol = degeneracy_tol * (width if width > 0 else 1.0)
    breaks = np.flatnonzero(np.diff(E) > tol)
    sizes = np.diff(np.concatenate(([0], breaks + 1, [E.size])))
    return float(np.sum(sizes.astype(float) ** 2) / E.size**2)


def spectral_variance(spec: SpectralDecomposition) -> float:
    """Population variance of the eigenvalues, sigma_E^2 = -K''(0)/2."""
    return float(np.var(spec.eigenvalues))


def mt_envelope(sigma_E: float, times) -> WindowedSeries:
    """cos^2(sigma_E t) inside |t| < pi/(2 sigma_E), zero outside.

    ``in_window`` marks the points where the bound is non-vacuous.
    """
    if not sigma_E > 0:
        raise NonpositiveSigma(f"sigma_E must be positive, got {sigma_E}")
    t = _as_times(times)
    inside = np.abs(t) < np.pi / (2.0 * sigma_E)
    vals = np.where(inside, np.cos(sigma_E * t) ** 2, 0.0)
    return WindowedSeries(t, vals, in_window=inside)


def dos_histogram(spec: SpectralDecomposition, bin_width: float) -> DosHistogram:
    """Histogram of eigenvalues normalized to unit mass.

    Bins are ``[E_min + i w, E_min + (i+1) w)``; the last bin also holds its
    right edge. There are ``floor((E_max - E_min)/w) + 1`` bins.
    """
    if not bin_width > 0:
        raise NonpositiveBinWidth(f"bin_width must be positive, got {bin_width}")
    E = spec.eigenvalues
    lo = float(E[0])
    nbins = int(np.floor((E[-1] - lo) / bin_width)) + 1
    idx = np.minimum(np.floor((E - lo) / bin_width).astype(np.int64), nbins - 1)
    counts = np.bincount(idx, minlength=nbins)
    edges = lo + bin_width * np.arange(nbins + 1)
    return DosHistogram(edges, counts / (E.size * bin_width))


def gaussian_smooth_dos(hist: DosHistogram, sigma: float, truncate: float = 8.0) -> DosHistogram:
    """Convolve a uniform-bin histogram with a normalized Gaussian of width ``sigma``.

    The grid is padded by ``ceil(truncate * sigma / w)`` bins on each side so
    no mass leaves the histogram.
    """
    if not sigma > 0:
        raise NonpositiveSigma(f"sigma must be positive, got {sigma}")
    widths = hist.bin_widths
    w = float(widths[0])
    if not np.allclose(widths, w, rtol=1e-9, atol=0):
        raise InputError("gaussian_smooth_dos requires uniform bins")
    pad = int(np.ceil(truncate * sigma / w))
    offsets = w * np.arange(-pad, pad + 1)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    kernel /= kernel.sum()
    dens = np.convolve(hist.densities, kernel, mode="full")
    lo = hist.bin_edges[0] - pad * w
    edges = lo + w * np.arange(dens.size + 1)
    return DosHistogram(edges, np.clip(dens, 0.0, None))


def check_fourier_nonnegativity(
    n_tilde: TimeSeries,
    energy_grid,
    nonneg_tol: float = NONNEG_TOL,
    endpoint_tol: float = 1e-3,
) -> FourierPositivityReport:
    """Invert N~(t) onto ``energy_grid`` and test N(E) >= 0.

    N(E) = (1/2pi) int dt N~(t) exp(iEt), evaluated with the trapezoidal rule
    on the supplied time grid. The grid should be symmetric about t = 0 and
    wide enough for |N~| to have decayed (below ~1e-6) at the ends.

    Raises
    ------
    GridTooNarrow
        If |N~| at either end of the grid exceeds ``endpoint_tol``.
    """
    t = n_tilde.times
    f = np.asarray(n_tilde.values, dtype=complex)
    edge = max(abs(f[0]), abs(f[-1]))
    if edge > endpoint_tol:
        raise GridTooNarrow(
            f"|N~| = {edge:.3e} at the grid ends; truncation would corrupt the transform"
        )
    E = np.atleast_1d(np.asarray(energy_grid, dtype=float))
    dens = np.empty(E.size)
    rows = max(1, _PHASE_BLOCK_ELEMENTS // max(t.size, 1))
    for s in range(0, E.size, rows):
        integrand = f * np.exp(1j * np.multiply.outer(E[s:s + rows], t))
        dens[s:s + rows] = np.trapezoid(integrand, t, axis=1).real / (2.0 * np.pi)
    mn = float(dens.min())
    return FourierPositivityReport(mn, bool(mn >= -nonneg_tol), E, dens)
