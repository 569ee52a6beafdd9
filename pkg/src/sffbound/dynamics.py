"""
Time evolution by quantum channels rho -> sum_r A_r(t) rho A_r(t)^dagger.

Three channel kinds are supported:

``UnitaryChannel``
    A_1(t) = exp(-iHt) from a spectral decomposition.
``FilteredUnitaryChannel``
    A_1(t) = g(H) exp(-iHt) with real weights g(E_n) stored per eigenvalue.
``KrausChannel``
    Arbitrary time-dependent Kraus family supplied by a provider ``t -> [A_r]``.

The generalized spectral form factor is K(t) = D^-2 sum_r |Tr A_r(t)|^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, DimensionTooLarge, InputError, NonIsometry
from .randommatrix import haar_unitary
from .spectra import SpectralDecomposition, TimeSeries, _as_times, phase_sums

__all__ = [
    "QuantumChannel",
    "UnitaryChannel",
    "FilteredUnitaryChannel",
    "KrausChannel",
    "ChannelReport",
    "unitary_at",
    "generalized_sff",
    "evolve_projector",
    "tfd_return_probability",
    "validate_channel",
    "depolarizing_channel",
    "random_kraus_channel",
    "dephasing_channel",
    "KRAUS_PROVIDERS",
    "CHANNEL_TOL",
    "TFD_MAX_DIM",
]

CHANNEL_TOL = 1e-8
TFD_MAX_DIM = 64
ISOMETRY_TOL = 1e-10

KrausProvider = Callable[[float], Sequence[np.ndarray]]


def unitary_at(spec: SpectralDecomposition, t: float) -> np.ndarray:
    """exp(-iHt) = W diag(exp(-i E_n t)) W^dagger."""
    W = spec.eigenvectors
    return (W * np.exp(-1j * spec.eigenvalues * float(t))) @ W.conj().T


class QuantumChannel:
    """Common interface. Subclasses are immutable dataclasses."""

    kind: str = "abstract"

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    @property
    def kraus_count(self) -> int:
        raise NotImplementedError

    def kraus(self, t: float) -> list[np.ndarray]:
        """Kraus operators A_r(t) as dense D x D arrays."""
        raise NotImplementedError

    def traces(self, times) -> np.ndarray:
        """Tr A_r(t) for every time, shape (len(times), M)."""
        t = _as_times(times)
        return np.array([[np.trace(A) for A in self.kraus(ti)] for ti in t], dtype=complex)


@dataclass(frozen=True, eq=False)
class UnitaryChannel(QuantumChannel):
    spec: SpectralDecomposition
    kind = "unitary"

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    @property
    def kraus_count(self) -> int:
        return 1

    @property
    def weights(self) -> np.ndarray:
        return np.ones(self.dimension)

    def kraus(self, t):
        return [unitary_at(self.spec, t)]

    def traces(self, times):
        centered, carrier = phase_sums(self.spec.eigenvalues, times)
        return (carrier * centered)[:, None]


@dataclass(frozen=True, eq=False)
class FilteredUnitaryChannel(QuantumChannel):
    """A(t) = g(H) exp(-iHt). Weights are used verbatim; no normalization."""

    spec: SpectralDecomposition
    filter_weights: np.ndarray
    kind = "filtered"

    def __post_init__(self):
        g = np.asarray(self.filter_weights)
        if np.iscomplexobj(g):
            raise InputError("filter weights must be real")
        g = g.astype(float)
        if g.shape != (self.spec.dimension,):
            raise DimensionMismatch(
                f"need one filter weight per eigenvalue ({self.spec.dimension}), got {g.shape}"
            )
        g.setflags(write=False)
        object.__setattr__(self, "filter_weights", g)

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    @property
    def kraus_count(self) -> int:
        return 1

    @property
    def weights(self) -> np.ndarray:
        return self.filter_weights

    def kraus(self, t):
        W = self.spec.eigenvectors
        d = self.filter_weights * np.exp(-1j * self.spec.eigenvalues * float(t))
        return [(W * d) @ W.conj().T]

    def traces(self, times):
        centered, carrier = phase_sums(self.spec.eigenvalues, times, self.filter_weights)
        return (carrier * centered)[:, None]


@dataclass(frozen=True, eq=False)
class KrausChannel(QuantumChannel):
    """General channel from a deterministic provider ``t -> [A_1(t), ..., A_M(t)]``.

    ``trace_preserving`` is a declaration; :func:`validate_channel` checks it.
    """

    provider: KrausProvider
    dim: int
    count: int
    trace_preserving: bool = True
    name: str = "custom"
    params: dict = field(default_factory=dict)
    kind = "general"

    @property
    def dimension(self) -> int:
        return self.dim

    @property
    def kraus_count(self) -> int:
        return self.count

    def kraus(self, t):
        ops = [np.asarray(A, dtype=complex) for A in self.provider(float(t))]
        if len(ops) != self.count:
            raise DimensionMismatch(f"provider returned {len(ops)} Kraus operators, expected {self.count}")
        for A in ops:
            if A.shape != (self.dim, self.dim):
                raise DimensionMismatch(f"Kraus operator shape {A.shape}, expected {(self.dim, self.dim)}")
        return ops


def generalized_sff(channel: QuantumChannel, times) -> TimeSeries:
    """K(t) = D^-2 sum_r |Tr A_r(t)|^2."""
    t = _as_times(times)
    tr = channel.traces(t)
    K = np.sum(tr.real**2 + tr.imag**2, axis=1) / channel.dimension**2
    return TimeSeries(t, K)


def _check_isometry(P: np.ndarray, D: int) -> np.ndarray:
    P = np.asarray(P, dtype=complex)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2 or P.shape[0] != D:
        raise DimensionMismatch(f"isometry has shape {P.shape}, channel dimension is {D}")
    dev = np.abs(P.conj().T @ P - np.eye(P.shape[1])).max()
    if dev > ISOMETRY_TOL:
        raise NonIsometry(f"P^dagger P deviates from identity by {dev:.3e}")
    return P


def evolve_projector(channel: QuantumChannel, P, t: float) -> np.ndarray:
    """Pi(t) = sum_r A_r(t) P P^dagger A_r(t)^dagger for an isometry P (D x d)."""
    P = _check_isometry(P, channel.dimension)
    out = np.zeros((channel.dimension, channel.dimension), dtype=complex)
    for A in channel.kraus(t):
        X = A @ P
        out += X @ X.conj().T
    return out


def tfd_return_probability(channel: QuantumChannel, t: float) -> float:
    """Return probability of the maximally entangled state under A_r(t) (x) 1.

    Builds |Psi> = D^-1/2 sum_k |k>|k> in the doubled space explicitly and
    returns sum_r |<Psi| A_r (x) 1 |Psi>|^2. Test-scale oracle only.
    """
    D = channel.dimension
    if D > TFD_MAX_DIM:
        raise DimensionTooLarge(f"TFD oracle limited to D <= {TFD_MAX_DIM}, got {D}")
    psi = np.zeros(D * D, dtype=complex)
    psi[np.arange(D) * D + np.arange(D)] = 1.0 / np.sqrt(D)
    eye = np.eye(D)
    total = 0.0
    for A in channel.kraus(t):
        amp = np.vdot(psi, np.kron(A, eye) @ psi)
        total += abs(amp) ** 2
    return float(total)


@dataclass(frozen=True)
class ChannelReport:
    kind: str
    max_deviation: float
    trace_preserving: bool
    tol: float
    sample_times: np.ndarray

    @property
    def ok(self) -> bool:
        return self.trace_preserving


def validate_channel(channel: QuantumChannel, sample_times, tol: float = CHANNEL_TOL) -> ChannelReport:
    """Max over sample times of |sum_r A_r^dagger A_r - 1|; flags non-trace-preserving channels."""
    t = _as_times(sample_times)
    eye = np.eye(channel.dimension)
    dev = 0.0
    for ti in t:
        S = sum(A.conj().T @ A for A in channel.kraus(ti))
        dev = max(dev, float(np.abs(S - eye).max()))
    return ChannelReport(channel.kind, dev, dev <= tol, tol, t)


# --- stock Kraus providers -------------------------------------------------


def _weyl_operators(D: int) -> list[np.ndarray]:
    """Clock-and-shift unitaries X^a Z^b, a, b = 0..D-1."""
    shift = np.roll(np.eye(D), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(D) / D))
    ops = []
    Xa = np.eye(D, dtype=complex)
    for _ in range(D):
        Zb = np.eye(D, dtype=complex)
        for _ in range(D):
            ops.append(Xa @ Zb)
            Zb = Zb @ clock
        Xa = Xa @ shift
    return ops


def depolarizing_channel(spec: SpectralDecomposition, rate: float) -> KrausChannel:
    """Hamiltonian evolution followed by depolarization with p(t) = 1 - exp(-rate |t|).

    A_0 = sqrt(1-p) U(t), A_ab = sqrt(p)/D X^a Z^b U(t); M = D^2 + 1.
    """
    D = spec.dimension
    weyl = _weyl_operators(D)

    def provider(t):
        U = unitary_at(spec, t)
        p = 1.0 - np.exp(-rate * abs(t))
        return [np.sqrt(1.0 - p) * U] + [np.sqrt(p) / D * (P @ U) for P in weyl]

    return KrausChannel(provider, D, D * D + 1, True, "depolarizing", {"rate": rate})


def dephasing_channel(spec: SpectralDecomposition, rate: float) -> KrausChannel:
    """Energy-basis dephasing: A_+- = sqrt((1 +- e^{-rate|t|})/2) Z_E U(t)^{0,1}, Z_E = sign-alternating in |E_n>."""
    D = spec.dimension
    W = spec.eigenvectors
    Z = (W * np.where(np.arange(D) % 2 == 0, 1.0, -1.0)) @ W.conj().T

    def provider(t):
        U = unitary_at(spec, t)
        e = np.exp(-rate * abs(t))
        return [np.sqrt((1 + e) / 2) * U, np.sqrt((1 - e) / 2) * (Z @ U)]

    return KrausChannel(provider, D, 2, True, "dephasing", {"rate": rate})


def random_kraus_channel(spec: SpectralDecomposition, kraus_count: int, seed=None) -> KrausChannel:
    """A_r(t) = U(t) B_r with {B_r} the D x D blocks of a Haar isometry (trace preserving)."""
    D = spec.dimension
    M = int(kraus_count)
    V = haar_unitary(M * D, seed)[:, :D]
    blocks = [V[r * D:(r + 1) * D, :] for r in range(M)]

    def provider(t):
        U = unitary_at(spec, t)
        return [U @ B for B in blocks]

    return KrausChannel(provider, D, M, True, "random_kraus", {"kraus_count": M, "seed": seed})


KRAUS_PROVIDERS = {
    "depolarizing": depolarizing_channel,
    "dephasing": dephasing_channel,
    "random_kraus": random_kraus_channel,
}
