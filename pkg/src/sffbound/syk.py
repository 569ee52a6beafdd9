"""
SYK-q model in the complex-fermion Fock representation.

Conventions
-----------
* 2N Majoranas with {chi_i, chi_j} = delta_ij (so chi^2 = 1/2), indices 0..2N-1.
* Site j (0-based) carries c_j = (chi_{2j} - i chi_{2j+1}) / sqrt(2).
* H = -i^{q/2} sum_{j1<...<jq} J_{j1...jq} chi_{j1} ... chi_{jq}, each coupling
  Gaussian with variance (q-1)! J^2 / N^{q-1}.
* Majoranas come from a tensor-product ladder: site 0 starts as
  (sigma_x, sigma_y)/sqrt(2); adding a site right-multiplies every existing
  matrix by sigma_z and appends (1 (x) sigma_y, 1 (x) sigma_x)/sqrt(2). Site 0
  is the most significant qubit and the vacuum sits at 0-based index D/2.

Every Majorana is a scaled Pauli string, i.e. one nonzero per row. Products
are therefore tracked as (column map, values) pairs, which makes assembling
the Hamiltonian O(D q) per coupling.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import BadBit, BadSubsystemSize, DimensionMismatch, DimensionTooLarge, InputError, OddQ, QTooLarge, SffBoundError
from .projectors import ProjectorSet
from .randommatrix import make_rng
from .spectra import SpectralDecomposition, diagonalize

__all__ = [
    "SykCouplings",
    "SykModel",
    "majorana_matrices",
    "sample_couplings",
    "build_hamiltonian",
    "build_syk_model",
    "annihilation_operator",
    "number_operator",
    "total_number_operator",
    "parity_operator",
    "vacuum_index",
    "fock_state",
    "subsystem_fock_projectors",
    "coupling_variance",
    "MAX_SITES",
    "CONSTRUCTION_VERSION",
]

MAX_SITES = 14
CONSTRUCTION_VERSION = "majorana-ladder/1"
RNG_NAME = "numpy.PCG64"
HERMITIZE_TOL = 1e-12

_S = 1.0 / np.sqrt(2.0)


def _check_sites(N: int) -> int:
    N = int(N)
    if N < 1:
        raise InputError(f"need at least one site, got N = {N}")
    if N > MAX_SITES:
        raise DimensionTooLarge(f"N = {N} exceeds the dense-matrix limit N <= {MAX_SITES}")
    return N


# --- signed-permutation algebra ----------------------------------------------

# Pauli matrices as (cols, vals): M[r, cols[r]] = vals[r]
_ID = (np.array([0, 1]), np.array([1.0, 1.0], dtype=complex))
_SX = (np.array([1, 0]), np.array([1.0, 1.0], dtype=complex))
_SY = (np.array([1, 0]), np.array([-1j, 1j]))
_SZ = (np.array([0, 1]), np.array([1.0, -1.0], dtype=complex))


def _kron(a, b):
    (ac, av), (bc, bv) = a, b
    nb = bc.size
    return (ac[:, None] * nb + bc[None, :]).ravel(), (av[:, None] * bv[None, :]).ravel()


def _scale(a, s):
    return a[0], a[1] * s


def _majorana_perms(N: int) -> list:
    chis = [_scale(_SX, _S), _scale(_SY, _S)]
    for j in range(1, N):
        ident = (np.arange(2**j), np.ones(2**j, dtype=complex))
        chis = [_kron(m, _SZ) for m in chis]
        chis += [_kron(ident, _scale(_SY, _S)), _kron(ident, _scale(_SX, _S))]
    return chis


def _perm_to_sparse(rep) -> sp.csr_matrix:
    cols, vals = rep
    D = cols.size
    return sp.csr_matrix((vals, (np.arange(D), cols)), shape=(D, D))


def majorana_matrices(N: int) -> list[sp.csr_matrix]:
    """The 2N Majorana operators as sparse 2^N x 2^N matrices.

    Raises
    ------
    DimensionTooLarge
        If N > 14.
    """
    N = _check_sites(N)
    return [_perm_to_sparse(m) for m in _majorana_perms(N)]


# --- couplings -----------------------------------------------------------------


def coupling_variance(N: int, q: int, J: float) -> float:
    """(q-1)! J^2 / N^(q-1)."""
    return math.factorial(q - 1) * float(J) ** 2 / float(N) ** (q - 1)


@dataclass(frozen=True, eq=False)
class SykCouplings:
    """Independent couplings on lexicographically ordered tuples j1 < ... < jq."""

    N: int
    q: int
    J: float
    seed: int | None
    tuples: np.ndarray
    values: np.ndarray

    @property
    def variance(self) -> float:
        return coupling_variance(self.N, self.q, self.J)

    def dense(self) -> np.ndarray:
        """Totally antisymmetric rank-q tensor over 2N indices (small N only)."""
        n = 2 * self.N
        T = np.zeros((n,) * self.q)
        for tup, v in zip(self.tuples, self.values):
            for perm in itertools.permutations(range(self.q)):
                sign = _perm_sign(perm)
                T[tuple(tup[list(perm)])] = sign * v
        return T

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"j{i + 1}" for i in range(self.q)] + ["value"])
            for tup, v in zip(self.tuples, self.values):
                w.writerow([int(x) for x in tup] + [repr(float(v))])


def _perm_sign(perm) -> int:
    sign, seen = 1, list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def sample_couplings(N: int, q: int, J: float = 1.0, seed=None) -> SykCouplings:
    """One Gaussian draw per ordered tuple, in lexicographic tuple order.

    The stream is ``numpy.random.Generator(PCG64(seed)).standard_normal``
    scaled by the target standard deviation.

    Raises
    ------
    OddQ
        If q is odd.
    QTooLarge
        If q > 2N.
    """
    N, q = int(N), int(q)
    if N < 1:
        raise InputError(f"need at least one site, got N = {N}")
    if q % 2:
        raise OddQ(f"q must be even, got {q}")
    if q < 2:
        raise InputError(f"q must be at least 2, got {q}")
    if q > 2 * N:
        raise QTooLarge(f"q = {q} exceeds the number of Majoranas 2N = {2 * N}")
    tuples = np.array(list(itertools.combinations(range(2 * N), q)), dtype=np.int64)
    rng = make_rng(seed)
    sd = math.sqrt(coupling_variance(N, q, J))
    values = rng.standard_normal(tuples.shape[0]) * sd
    tuples.setflags(write=False)
    values.setflags(write=False)
    return SykCouplings(N, q, float(J), seed, tuples, values)


def build_hamiltonian(couplings: SykCouplings) -> np.ndarray:
    """Dense H = -i^{q/2} sum J_{j1..jq} chi_{j1}...chi_{jq}.

    The result is Hermitized; the size of that correction is checked to be
    below 1e-12.
    """
    N = _check_sites(couplings.N)
    q = couplings.q
    if couplings.tuples.ndim != 2 or couplings.tuples.shape[1] != q:
        raise DimensionMismatch("coupling tuples do not match q")
    if couplings.tuples.size and couplings.tuples.max() >= 2 * N:
        raise DimensionMismatch("coupling index exceeds 2N - 1")
    chis = _majorana_perms(N)
    D = 2**N
    H = np.zeros((D, D), dtype=complex)
    rows = np.arange(D)
    pref = -(1j ** (q // 2))
    for tup, c in zip(couplings.tuples, couplings.values):
        if c == 0.0:
            continue
        cols, vals = chis[tup[0]]
        for a in tup[1:]:
            bc, bv = chis[a]
            vals = vals * bv[cols]
            cols = bc[cols]
        H[rows, cols] += (pref * c) * vals
    Hh = 0.5 * (H + H.conj().T)
    corr = float(np.abs(Hh - H).max())
    if corr > HERMITIZE_TOL:
        raise SffBoundError(f"assembled Hamiltonian off Hermitian by {corr:.3e}")
    return Hh


# --- fermion operators ---------------------------------------------------------


def annihilation_operator(N: int, j: int) -> sp.csr_matrix:
    """c_j = (chi_{2j} - i chi_{2j+1}) / sqrt(2), site j = 0..N-1."""
    N = _check_sites(N)
    if not 0 <= j < N:
        raise InputError(f"site {j} outside 0..{N - 1}")
    chi = majorana_matrices(N)
    return ((chi[2 * j] - 1j * chi[2 * j + 1]) * _S).tocsr()


def number_operator(N: int, j: int) -> sp.csr_matrix:
    c = annihilation_operator(N, j)
    return (c.conj().T @ c).tocsr()


def total_number_operator(N: int) -> sp.csr_matrix:
    return sum((number_operator(N, j) for j in range(N)), sp.csr_matrix((2**N, 2**N))).tocsr()


def parity_operator(N: int) -> sp.csr_matrix:
    """(-1)^{sum_j n_j}; diagonal in this representation."""
    n = total_number_operator(N).diagonal().real
    return sp.diags(np.where(np.rint(n).astype(int) % 2 == 0, 1.0, -1.0)).tocsr()


def vacuum_index(N: int) -> int:
    """0-based basis index of the state annihilated by every c_j (= D/2)."""
    return 2 ** (_check_sites(N) - 1)


def fock_state(occupations) -> np.ndarray:
    """(c_{N-1}^dag)^{n_{N-1}} ... (c_0^dag)^{n_0} |0>.

    Raises
    ------
    BadBit
        If an occupation is not 0 or 1.
    """
    bits = list(occupations)
    N = _check_sites(len(bits))
    for b in bits:
        if isinstance(b, str) or b not in (0, 1):
            raise BadBit(f"occupations must be 0 or 1, got {b!r}")
    psi = np.zeros(2**N, dtype=complex)
    psi[vacuum_index(N)] = 1.0
    chi = majorana_matrices(N)
    for j, b in enumerate(bits):
        if b:
            cdag = (chi[2 * j] + 1j * chi[2 * j + 1]) * _S
            psi = cdag @ psi
    return psi


# --- model bundle ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SykModel:
    couplings: SykCouplings
    hamiltonian: np.ndarray
    construction: str = CONSTRUCTION_VERSION
    metadata: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.couplings.N

    @property
    def q(self) -> int:
        return self.couplings.q

    @property
    def J(self) -> float:
        return self.couplings.J

    @property
    def seed(self):
        return self.couplings.seed

    @property
    def dimension(self) -> int:
        return 2**self.N

    @cached_property
    def majoranas(self) -> list[sp.csr_matrix]:
        return majorana_matrices(self.N)

    @cached_property
    def spectrum(self) -> SpectralDecomposition:
        return diagonalize(self.hamiltonian)

    def manifest(self) -> dict:
        return {
            "model": "syk",
            "N": self.N,
            "q": self.q,
            "J": self.J,
            "seed": self.seed,
            "construction": self.construction,
            "rng": RNG_NAME,
            "tuple_order": "lexicographic",
            "coupling_variance": self.couplings.variance,
        }


def build_syk_model(N: int, q: int = 4, J: float = 1.0, seed=0) -> SykModel:
    cpl = sample_couplings(N, q, J, seed)
    H = build_hamiltonian(cpl)
    H.setflags(write=False)
    return SykModel(cpl, H)


def subsystem_fock_projectors(model, N_S: int) -> ProjectorSet:
    """Projectors |n_0..n_{N_S-1}><...|_S (x) 1_E on the first N_S sites.

    Projector k has subsystem bits given by the binary digits of k with n_0
    the most significant, so the 0/1/2/3-particle states with particles on
    the last subsystem sites are k = 0, 1, 3, 7. Columns of each isometry
    are the Fock states with the environment bits enumerated the same way.

    ``model`` may be an :class:`SykModel` or the site count N.

    Raises
    ------
    BadSubsystemSize
        Unless 1 <= N_S <= N.
    """
    N = model.N if isinstance(model, SykModel) else _check_sites(model)
    N_S = int(N_S)
    if not 1 <= N_S <= N:
        raise BadSubsystemSize(f"N_S = {N_S} must lie in 1..{N}")
    N_E = N - N_S
    D = 2**N
    # Fock states are signed computational basis vectors; locate them once
    chi = majorana_matrices(N)
    cdag = [((chi[2 * j] + 1j * chi[2 * j + 1]) * _S).tocsr() for j in range(N)]
    isos = []
    for k in range(2**N_S):
        sbits = [(k >> (N_S - 1 - i)) & 1 for i in range(N_S)]
        V = np.zeros((D, 2**N_E), dtype=complex)
        for e in range(2**N_E):
            ebits = [(e >> (N_E - 1 - i)) & 1 for i in range(N_E)]
            psi = np.zeros(D, dtype=complex)
            psi[vacuum_index(N)] = 1.0
            for j, b in enumerate(sbits + ebits):
                if b:
                    psi = cdag[j] @ psi
            V[:, e] = psi
        isos.append(V)
    meta = {"N": N, "N_S": N_S, "D_S": 2**N_S, "D_E": 2**N_E, "ordering": "n_0 most significant"}
    return ProjectorSet(tuple(isos), "syk-fock", metadata=meta)
