"""
Mean return probabilities and the bound P_S(t) >= K(t).

For a projector set {Pi_k = V_k V_k^dagger} and Kraus operators A_r(t),

    P_S(t) = D^-1 sum_r sum_k || V_k^dagger A_r(t) V_k ||_F^2 .

For unitary and filtered channels A(t) = W diag(phi(t)) W^dagger, so with
B_k = W^dagger V_k every block is B_j^dagger diag(phi) B_k and U(t) is never
formed. Two equivalent contractions are used:

* pair path, cost D * sum_k d_k^2 per time: C = Phi @ O with
  O[:, (a, b)] = conj(B_k[:, a]) * B_k[:, b];
* kernel path, cost D^2 per time: P_S = D^-1 Re[phi^T S conj(phi)] with
  S = sum_k |B_k B_k^dagger|^2 (elementwise modulus).

The cheaper one is chosen per set; both are exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import FilteredUnitaryChannel, QuantumChannel, UnitaryChannel, generalized_sff
from .errors import (
    DimensionMismatch,
    GridMismatch,
    HorizonOutsideGrid,
    IndexRange,
    InputError,
    WindowTooNarrow,
)
from .projectors import ProjectorSet
from .spectra import SpectralDecomposition, TimeSeries, _as_times, phase_sums

__all__ = [
    "BoundReport",
    "ChainReport",
    "PowerLawFit",
    "mean_return_probability",
    "reference_sff",
    "derivation_chain",
    "verify_speed_limit",
    "per_state_return",
    "cross_overlap",
    "overlap_matrix",
    "haar_prediction",
    "haar_fluctuation_scale",
    "scrambling_check",
    "sustained_scrambling_time",
    "powerlaw_fit",
    "upper_envelope",
    "first_dip_time",
    "ramp_onset_time",
    "VIOL_TOL",
    "MIN_FIT_POINTS",
]

VIOL_TOL = 1e-10
MIN_FIT_POINTS = 8

# time rows per contraction block; fixed so a given grid always reduces identically
_TIME_BLOCK = 128


# --- spectral engine ---------------------------------------------------------


def _spectral(channel: QuantumChannel):
    """(spec, weights) for unitary/filtered channels, else None."""
    if isinstance(channel, (UnitaryChannel, FilteredUnitaryChannel)):
        return channel.spec, channel.weights
    return None


def _check_dims(channel: QuantumChannel, pset: ProjectorSet) -> None:
    if channel.dimension != pset.total_dim:
        raise DimensionMismatch(
            f"channel dimension {channel.dimension} differs from projector dimension {pset.total_dim}"
        )


def _phase_block(E: np.ndarray, g: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Rows phi_n(t) = g_n exp(-i (E_n - Ebar) t); the global phase cancels in every |.|^2."""
    return np.exp(-1j * np.multiply.outer(t, E - E.mean())) * g


def _pair_operator(Bj: np.ndarray, Bk: np.ndarray) -> np.ndarray:
    """O[:, (a, b)] = conj(Bj[:, a]) * Bk[:, b], so (Phi @ O)[t] = vec(Bj^dag diag(phi_t) Bk)."""
    D = Bj.shape[0]
    return (Bj.conj()[:, :, None] * Bk[:, None, :]).reshape(D, -1)


def _sum_sq_rows(C: np.ndarray) -> np.ndarray:
    return np.sum(C.real**2 + C.imag**2, axis=1)


def _contract_pairs(E, g, t, O) -> np.ndarray:
    out = np.empty(t.size)
    for s in range(0, t.size, _TIME_BLOCK):
        out[s:s + _TIME_BLOCK] = _sum_sq_rows(_phase_block(E, g, t[s:s + _TIME_BLOCK]) @ O)
    return out


def _contract_kernel(E, g, t, S) -> np.ndarray:
    """Re[phi^T S conj(phi)] per time, S real symmetric."""
    out = np.empty(t.size)
    for s in range(0, t.size, _TIME_BLOCK):
        Phi = _phase_block(E, g, t[s:s + _TIME_BLOCK])
        re_, im_ = np.ascontiguousarray(Phi.real), np.ascontiguousarray(Phi.imag)
        out[s:s + _TIME_BLOCK] = np.sum(re_ * (re_ @ S) + im_ * (im_ @ S), axis=1)
    return out


def _return_kernel(B_blocks) -> np.ndarray:
    """S = sum_k |B_k B_k^dagger|^2 (elementwise)."""
    D = B_blocks[0].shape[0]
    if all(B.shape[1] == 1 for B in B_blocks):
        A = np.hstack([np.abs(B) ** 2 for B in B_blocks])
        return A @ A.T
    S = np.zeros((D, D))
    for B in B_blocks:
        P = B @ B.conj().T
        S += P.real**2 + P.imag**2
    return S


def _eigen_blocks(spec: SpectralDecomposition, pset: ProjectorSet) -> list[np.ndarray]:
    Wd = spec.eigenvectors.conj().T
    return [Wd @ V for V in pset.isometries]


def _spectral_return_sum(spec, g, pset, t) -> np.ndarray:
    """sum_k Tr[Pi_k(t) Pi_k] for a spectral channel."""
    B = _eigen_blocks(spec, pset)
    D = spec.dimension
    # complex pair contraction ~ 8 D sum d_k^2 flops per time, real kernel ~ 4 D^2
    if 2 * sum(b.shape[1] ** 2 for b in B) <= D:
        O = np.hstack([_pair_operator(b, b) for b in B])
        return _contract_pairs(spec.eigenvalues, g, t, O)
    return _contract_kernel(spec.eigenvalues, g, t, _return_kernel(B))


# --- general-channel engine --------------------------------------------------


def _block_sq_norms(X: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Matrix of squared Frobenius norms of the (j, k) blocks of X."""
    sq = X.real**2 + X.imag**2
    rows = np.add.reduceat(sq, offsets[:-1], axis=0)
    return np.add.reduceat(rows, offsets[:-1], axis=1)


def _kraus_overlaps(channel: QuantumChannel, pset: ProjectorSet, t: float) -> np.ndarray:
    """M[j, k] = Tr[Pi_k(t) Pi_j] = sum_r ||V_j^dag A_r V_k||^2."""
    V = pset.stacked
    Vd = V.conj().T
    off = pset.offsets
    out = np.zeros((pset.count, pset.count))
    for A in channel.kraus(t):
        out += _block_sq_norms(Vd @ A @ V, off)
    return out


def _kraus_pair(channel, Vj, Vk, t: float) -> float:
    Vjd = Vj.conj().T
    total = 0.0
    for A in channel.kraus(t):
        X = Vjd @ A @ Vk
        total += float(np.sum(X.real**2 + X.imag**2))
    return total


# --- public operations -------------------------------------------------------


def mean_return_probability(channel: QuantumChannel, pset: ProjectorSet, times) -> TimeSeries:
    """P_S(t) = D^-1 sum_k Tr[Pi_k(t) Pi_k], with D the dimension the set resolves.

    Raises
    ------
    DimensionMismatch
        If channel and set live in different spaces.
    """
    _check_dims(channel, pset)
    t = _as_times(times)
    Dsub = pset.subspace_dim
    sp = _spectral(channel)
    if sp is not None:
        vals = _spectral_return_sum(sp[0], sp[1], pset, t)
    else:
        V = pset.stacked
        Vd = V.conj().T
        off = pset.offsets
        vals = np.empty(t.size)
        for i, ti in enumerate(t):
            acc = 0.0
            for A in channel.kraus(ti):
                acc += float(np.trace(_block_sq_norms(Vd @ A @ V, off)))
            vals[i] = acc
    return TimeSeries(t, vals / Dsub)


def reference_sff(channel: QuantumChannel, pset: ProjectorSet, times) -> TimeSeries:
    """The K(t) that bounds P_S for this set.

    For sets resolving the full space this is :func:`generalized_sff`. For a
    set with support Q (D x D_sub) it is the SFF of the compressed operators
    Q^dagger A_r Q, i.e. D_sub^-2 sum_r |Tr[Q^dagger A_r Q]|^2.
    """
    _check_dims(channel, pset)
    if pset.support is None:
        return generalized_sff(channel, times)
    t = _as_times(times)
    Q = pset.support
    Dsub = pset.subspace_dim
    sp = _spectral(channel)
    if sp is not None:
        spec, g = sp
        occ = np.sum(np.abs(spec.eigenvectors.conj().T @ Q) ** 2, axis=1)
        centered, _ = phase_sums(spec.eigenvalues, t, g * occ)
        vals = centered.real**2 + centered.imag**2
    else:
        Qd = Q.conj().T
        vals = np.array(
            [sum(abs(np.trace(Qd @ A @ Q)) ** 2 for A in channel.kraus(ti)) for ti in t]
        )
    return TimeSeries(t, vals / Dsub**2)


@dataclass(frozen=True)
class ChainReport:
    """Stages of the lower-bound chain, each shape (T,).

    stage1  full double sum, = P_S(t)
    stage2  diagonal terms only, D^-1 sum |a_kl|^2
    stage3  squared mean modulus, (D^-1 sum |a_kl|)^2
    stage4  squared modulus of the mean, |D^-1 sum a_kl|^2 = K(t)

    with a_kl(t) = <k;l| U(t) |k;l> over the columns of every V_k.
    """

    times: np.ndarray
    stage1: np.ndarray
    stage2: np.ndarray
    stage3: np.ndarray
    stage4: np.ndarray

    def gaps(self) -> np.ndarray:
        """Consecutive differences stage_i - stage_{i+1}, shape (3, T)."""
        s = np.vstack([self.stage1, self.stage2, self.stage3, self.stage4])
        return s[:-1] - s[1:]

    def monotone(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.gaps() >= -tol))


def derivation_chain(spec, pset: ProjectorSet, times) -> ChainReport:
    """Evaluate the four-stage chain P_S >= ... >= K for a single unitary A(t).

    ``spec`` may be a :class:`SpectralDecomposition`, a :class:`UnitaryChannel`
    or any channel with one Kraus operator (evaluated densely per time).
    """
    if isinstance(spec, UnitaryChannel):
        spec = spec.spec
    if isinstance(spec, QuantumChannel) and not isinstance(spec, FilteredUnitaryChannel) and spec.kraus_count == 1:
        return _dense_chain(spec, pset, _as_times(times))
    if not isinstance(spec, SpectralDecomposition):
        raise InputError("derivation_chain needs a single unitary Kraus operator")
    channel = UnitaryChannel(spec)
    _check_dims(channel, pset)
    t = _as_times(times)
    Dsub = pset.subspace_dim
    stage1 = _spectral_return_sum(spec, channel.weights, pset, t) / Dsub
    Bsq = np.abs(spec.eigenvectors.conj().T @ pset.stacked) ** 2
    E = spec.eigenvalues
    g = np.ones(spec.dimension)
    stage2 = np.empty(t.size)
    stage3 = np.empty(t.size)
    stage4 = np.empty(t.size)
    for s in range(0, t.size, _TIME_BLOCK):
        a = _phase_block(E, g, t[s:s + _TIME_BLOCK]) @ Bsq
        mod = np.abs(a)
        stage2[s:s + _TIME_BLOCK] = np.sum(mod**2, axis=1) / Dsub
        stage3[s:s + _TIME_BLOCK] = (np.sum(mod, axis=1) / Dsub) ** 2
        stage4[s:s + _TIME_BLOCK] = np.abs(np.sum(a, axis=1) / Dsub) ** 2
    return ChainReport(t, stage1, stage2, stage3, stage4)


def _dense_chain(channel: QuantumChannel, pset: ProjectorSet, t: np.ndarray) -> ChainReport:
    _check_dims(channel, pset)
    V = pset.stacked
    Vd = V.conj().T
    off = pset.offsets
    Dsub = pset.subspace_dim
    stages = np.empty((4, t.size))
    for i, ti in enumerate(t):
        X = Vd @ channel.kraus(ti)[0] @ V
        a = np.diagonal(X)
        mod = np.abs(a)
        stages[:, i] = (
            float(np.trace(_block_sq_norms(X, off))) / Dsub,
            float(np.sum(mod**2)) / Dsub,
            (float(np.sum(mod)) / Dsub) ** 2,
            abs(np.sum(a) / Dsub) ** 2,
        )
    return ChainReport(t, *stages)


@dataclass(frozen=True)
class BoundReport:
    times: np.ndarray
    p_s: np.ndarray
    k: np.ndarray
    margin: np.ndarray
    min_margin: float
    violated: bool
    viol_tol: float

    def as_dict(self) -> dict:
        i = int(np.argmin(self.margin))
        return {
            "min_margin": self.min_margin,
            "argmin_time": float(self.times[i]),
            "violated": self.violated,
            "viol_tol": self.viol_tol,
        }


def verify_speed_limit(p_s: TimeSeries, k: TimeSeries, viol_tol: float = VIOL_TOL) -> BoundReport:
    """Compare P_S(t) with a lower bound K(t) on an identical grid.

    Raises
    ------
    GridMismatch
        If the two series are sampled on different grids.
    """
    if p_s.times.shape != k.times.shape or not np.array_equal(p_s.times, k.times):
        raise GridMismatch("P_S and K must share the same time grid")
    ps = np.asarray(p_s.values, dtype=float)
    kv = np.asarray(k.values, dtype=float)
    margin = ps - kv
    mn = float(margin.min())
    return BoundReport(p_s.times, ps, kv, margin, mn, bool(mn < -viol_tol), viol_tol)


def _check_index(pset: ProjectorSet, *idx: int) -> None:
    for i in idx:
        if not (isinstance(i, (int, np.integer)) and 0 <= i < pset.count):
            raise IndexRange(f"projector index {i} outside 0..{pset.count - 1}")


def _pair_series(channel, pset, k: int, j: int, t: np.ndarray) -> np.ndarray:
    """Tr[Pi_k(t) Pi_j] on the grid."""
    Vk, Vj = pset.isometries[k], pset.isometries[j]
    sp = _spectral(channel)
    if sp is not None:
        spec, g = sp
        Wd = spec.eigenvectors.conj().T
        return _contract_pairs(spec.eigenvalues, g, t, _pair_operator(Wd @ Vj, Wd @ Vk))
    return np.array([_kraus_pair(channel, Vj, Vk, ti) for ti in t])


def per_state_return(channel: QuantumChannel, pset: ProjectorSet, k_index: int, times) -> TimeSeries:
    """P_k(t) = d_k^-1 Tr[Pi_k(t) Pi_k]."""
    _check_dims(channel, pset)
    _check_index(pset, k_index)
    t = _as_times(times)
    return TimeSeries(t, _pair_series(channel, pset, k_index, k_index, t) / pset.dims[k_index])


def cross_overlap(channel: QuantumChannel, pset: ProjectorSet, k_index: int, j_index: int, times) -> TimeSeries:
    """Q_kj(t) = d_k^-1 Tr[Pi_k(t) Pi_j]; normalized so sum_j Q_kj = 1 for trace-preserving channels."""
    _check_dims(channel, pset)
    _check_index(pset, k_index, j_index)
    t = _as_times(times)
    return TimeSeries(t, _pair_series(channel, pset, k_index, j_index, t) / pset.dims[k_index])


def overlap_matrix(channel: QuantumChannel, pset: ProjectorSet, times) -> np.ndarray:
    """Array (T, D_S, D_S) with entry [t, k, j] = d_k^-1 Tr[Pi_k(t) Pi_j]."""
    _check_dims(channel, pset)
    t = _as_times(times)
    dims = np.asarray(pset.dims, dtype=float)
    out = np.empty((t.size, pset.count, pset.count))
    sp = _spectral(channel)
    if sp is not None:
        spec, g = sp
        B = spec.eigenvectors.conj().T @ pset.stacked
        Bd = B.conj().T
        off = pset.offsets
        for i, ti in enumerate(t):
            phi = _phase_block(spec.eigenvalues, g, np.array([ti]))[0]
            M = _block_sq_norms(Bd @ (phi[:, None] * B), off)  # [j, k]
            out[i] = M.T / dims[:, None]
    else:
        for i, ti in enumerate(t):
            out[i] = _kraus_overlaps(channel, pset, ti).T / dims[:, None]
    return out


def haar_prediction(k_value: float, D_S: int, same_index: bool) -> float:
    """Typical value of D_E^-1 Tr[Pi_k(t) Pi_j]: 1/D_S + (delta_kj - 1/D_S) K(t)."""
    if not 0.0 <= k_value <= 1.0:
        raise InputError(f"K must lie in [0, 1], got {k_value}")
    delta = 1.0 if same_index else 0.0
    return 1.0 / D_S + (delta - 1.0 / D_S) * k_value


def haar_fluctuation_scale(D_E: int) -> float:
    """D_E^-1/2, the size of the corrections to :func:`haar_prediction`."""
    return float(D_E) ** -0.5


def scrambling_check(p_s: TimeSeries, D_S: int, c_tol: float | None = None, D_E: int | None = None) -> np.ndarray:
    """Boolean per time: |D_S P_S(t) - 1| <= c_tol.

    ``c_tol`` defaults to ``3 * D_E**-0.5`` when only ``D_E`` is given.
    """
    if c_tol is None:
        if D_E is None:
            raise InputError("give c_tol or D_E")
        c_tol = 3.0 * haar_fluctuation_scale(D_E)
    if not c_tol > 0:
        raise InputError(f"c_tol must be positive, got {c_tol}")
    return np.abs(D_S * np.asarray(p_s.values, dtype=float) - 1.0) <= c_tol


def sustained_scrambling_time(k: TimeSeries, D_S: int, horizon_T: float) -> float | None:
    """Smallest grid time t* with max_{t* <= t <= T} K(t) <= 1/D_S, or None.

    Uses grid values only, so the answer is resolved to the grid spacing.

    Raises
    ------
    HorizonOutsideGrid
        If T is not inside the sampled range.
    """
    t = k.times
    if t.size == 0 or not (t[0] <= horizon_T <= t[-1]):
        raise HorizonOutsideGrid(f"horizon {horizon_T} outside grid [{t[0] if t.size else 'empty'}, ...]")
    m = t <= horizon_T
    vals = np.asarray(k.values, dtype=float)[m]
    suffix = np.maximum.accumulate(vals[::-1])[::-1]
    ok = np.flatnonzero(suffix <= 1.0 / D_S)
    if ok.size == 0:
        return None
    return float(t[m][ok[0]])


def upper_envelope(values) -> np.ndarray:
    """Running maximum taken from the right: env[i] = max(values[i:])."""
    v = np.asarray(values, dtype=float)
    return np.maximum.accumulate(v[::-1])[::-1]


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    r2: float
    n_points: int
    t_lo: float
    t_hi: float

    def as_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "prefactor": self.prefactor,
            "r2": self.r2,
            "n_points": self.n_points,
            "t_lo": self.t_lo,
            "t_hi": self.t_hi,
        }


def powerlaw_fit(k: TimeSeries, t_lo: float, t_hi: float) -> PowerLawFit:
    """Fit log env(t) = log c + alpha log t on [t_lo, t_hi].

    The envelope is the right-running maximum of K within the window, which
    for a decaying oscillation is the staircase through successive peaks.

    Raises
    ------
    WindowTooNarrow
        If fewer than 8 grid points fall in the window.
    """
    t = k.times
    m = (t >= t_lo) & (t <= t_hi)
    n = int(m.sum())
    if n < MIN_FIT_POINTS:
        raise WindowTooNarrow(f"{n} points in [{t_lo}, {t_hi}], need at least {MIN_FIT_POINTS}")
    if np.any(t[m] <= 0):
        raise InputError("power-law fit needs t > 0")
    env = upper_envelope(np.asarray(k.values, dtype=float)[m])
    if np.any(env <= 0):
        raise InputError("envelope must be positive on the fit window")
    x, y = np.log(t[m]), np.log(env)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(np.exp(icpt)), r2, n, float(t_lo), float(t_hi))


def _local_minima(v: np.ndarray) -> np.ndarray:
    return np.flatnonzero((v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:])) + 1


def first_dip_time(k: TimeSeries) -> float | None:
    """Time of the first interior local minimum of K."""
    mins = _local_minima(np.asarray(k.values, dtype=float))
    return float(k.times[mins[0]]) if mins.size else None


def ramp_onset_time(k: TimeSeries) -> float | None:
    """End of the decaying-oscillation regime.

    The series is split into oscillations at consecutive local minima. While
    the oscillation peaks keep decreasing K is in its slope regime; the
    returned time is the left minimum of the first oscillation whose peak is
    not lower than the one before it.
    """
    v = np.asarray(k.values, dtype=float)
    mins = _local_minima(v)
    prev = np.inf
    for a, b in zip(mins[:-1], mins[1:]):
        peak = v[a:b + 1].max()
        if peak >= prev:
            return float(k.times[a])
        prev = peak
    return None
