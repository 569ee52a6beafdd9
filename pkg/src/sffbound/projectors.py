"""
Complete orthonormal projector sets.

A set {Pi_k} is stored as isometries V_k (D x d_k, orthonormal columns) with
Pi_k = V_k V_k^dagger; dense D x D projectors are never formed.

Sets built on a restricted subspace (microcanonical windows) carry a
``support`` isometry; they are complete on that subspace only, and
``subspace_dim`` replaces D in every normalization downstream.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyWindow, InputError, NotHadamard
from .randommatrix import dft_matrix, haar_unitary, make_rng
from .spectra import SpectralDecomposition

__all__ = [
    "ProjectorSet",
    "ProjectorReport",
    "subsystem_basis_projectors",
    "hadamard_eigenbasis_states",
    "dft_eigenbasis_states",
    "haar_random_subsystem_projectors",
    "microcanonical_projectors",
    "validate_projector_set",
    "perturb_projector_set",
    "save_projector_set",
    "load_projector_set",
    "PROJECTOR_TOL",
    "HADAMARD_TOL",
]

PROJECTOR_TOL = 1e-9
HADAMARD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ProjectorSet:
    """Projectors Pi_k = V_k V_k^dagger, k = 0..D_S-1.

    Parameters
    ----------
    isometries : sequence of (D, d_k) complex arrays
    label : str
        Free-form tag used in manifests.
    support : (D, D_sub) complex array, optional
        Isometry onto the subspace on which the set is complete. ``None``
        means the full space.
    metadata : dict
        JSON-compatible provenance (seeds, window indices, ...).
    """

    isometries: tuple
    label: str = "custom"
    support: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        isos = []
        for V in self.isometries:
            V = np.array(V, dtype=complex)
            if V.ndim == 1:
                V = V[:, None]
            if V.ndim != 2:
                raise InputError("each isometry must be a D x d_k matrix")
            V.setflags(write=False)
            isos.append(V)
        if not isos:
            raise InputError("a projector set needs at least one projector")
        D = isos[0].shape[0]
        if any(V.shape[0] != D for V in isos):
            raise DimensionMismatch("isometries disagree on the ambient dimension")
        object.__setattr__(self, "isometries", tuple(isos))
        if self.support is not None:
            Q = np.array(self.support, dtype=complex)
            if Q.ndim != 2 or Q.shape[0] != D:
                raise DimensionMismatch(f"support shape {Q.shape} incompatible with D = {D}")
            Q.setflags(write=False)
            object.__setattr__(self, "support", Q)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __len__(self) -> int:
        return len(self.isometries)

    @property
    def count(self) -> int:
        """D_S, the number of projectors."""
        return len(self.isometries)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(int(V.shape[1]) for V in self.isometries)

    @property
    def total_dim(self) -> int:
        """Ambient Hilbert-space dimension D."""
        return int(self.isometries[0].shape[0])

    @property
    def subspace_dim(self) -> int:
        """Dimension of the space the set resolves (D unless a support is set)."""
        return self.total_dim if self.support is None else int(self.support.shape[1])

    @property
    def offsets(self) -> np.ndarray:
        """Column offsets of each V_k inside :attr:`stacked`."""
        return np.concatenate(([0], np.cumsum(self.dims))).astype(np.int64)

    @property
    def stacked(self) -> np.ndarray:
        """All isometries side by side, shape (D, sum d_k)."""
        return np.hstack(self.isometries)

    def manifest(self) -> dict:
        return {
            "label": self.label,
            "D": self.total_dim,
            "subspace_dim": self.subspace_dim,
            "count": self.count,
            "dims": list(self.dims),
            "metadata": self.metadata,
        }


# --- constructors ----------------------------------------------------------


def _default_embedding(s: int, e: int, D_E: int) -> int:
    return s * D_E + e


def subsystem_basis_projectors(
    D_S: int,
    D_E: int,
    embedding: Callable[[int, int], int] | Sequence[Sequence[int]] | None = None,
    dimension: int | None = None,
    label: str = "subsystem",
) -> ProjectorSet:
    """Projectors |s><s|_S (x) 1_E in a computational basis.

    ``embedding`` maps (s, e) to a global basis index. It may be a callable or
    a (D_S, D_E) integer table; the default is ``s * D_E + e`` (subsystem is
    the most significant factor).

    Raises
    ------
    DimensionMismatch
        If ``dimension`` is given and differs from D_S * D_E, or the
        embedding is not a bijection onto 0..D-1.
    """
    D_S, D_E = int(D_S), int(D_E)
    if D_S < 1 or D_E < 1:
        raise DimensionMismatch(f"D_S and D_E must be positive, got {D_S}, {D_E}")
    D = D_S * D_E
    if dimension is not None and int(dimension) != D:
        raise DimensionMismatch(f"D_S * D_E = {D} but the system dimension is {dimension}")
    if embedding is None:
        table = np.arange(D).reshape(D_S, D_E)
    elif callable(embedding):
        table = np.array([[embedding(s, e) for e in range(D_E)] for s in range(D_S)], dtype=np.int64)
    else:
        table = np.asarray(embedding, dtype=np.int64)
        if table.shape != (D_S, D_E):
            raise DimensionMismatch(f"embedding table shape {table.shape}, expected {(D_S, D_E)}")
    if not np.array_equal(np.sort(table.ravel()), np.arange(D)):
        raise DimensionMismatch("embedding is not a bijection onto the global basis")
    isos = []
    for s in range(D_S):
        V = np.zeros((D, D_E), dtype=complex)
        V[table[s], np.arange(D_E)] = 1.0
        isos.append(V)
    return ProjectorSet(tuple(isos), label, metadata={"D_S": D_S, "D_E": D_E})


def _is_hadamard(X: np.ndarray, tol: float) -> tuple[float, float]:
    D = X.shape[0]
    unit = float(np.abs(X.conj().T @ X - np.eye(D)).max())
    flat = float(np.abs(np.abs(X) ** 2 - 1.0 / D).max())
    return unit, flat


def hadamard_eigenbasis_states(
    spec: SpectralDecomposition, X, label: str = "hadamard", tol: float = HADAMARD_TOL
) -> ProjectorSet:
    """Rank-1 projectors onto |k> = sum_n X_kn |E_n>.

    Raises
    ------
    NotHadamard
        If X is not unitary or some |X_kn|^2 differs from 1/D, within ``tol``.
    """
    X = np.asarray(X, dtype=complex)
    D = spec.dimension
    if X.shape != (D, D):
        raise NotHadamard(f"X has shape {X.shape}, expected {(D, D)}")
    unit, flat = _is_hadamard(X, tol)
    if unit > tol or flat > tol:
        raise NotHadamard(f"unitarity residual {unit:.2e}, modulus residual {flat:.2e} (tol {tol:.0e})")
    V = spec.eigenvectors @ X.T
    return ProjectorSet(tuple(V[:, [k]] for k in range(D)), label)


def dft_eigenbasis_states(spec: SpectralDecomposition) -> ProjectorSet:
    """Hadamard states with X the unitary DFT matrix."""
    return hadamard_eigenbasis_states(spec, dft_matrix(spec.dimension), label="dft")


def haar_random_subsystem_projectors(D_S: int, D_E: int, seed=None, dimension: int | None = None) -> ProjectorSet:
    """Subsystem projectors rotated by a seeded Haar-random unitary U: V_k -> U V_k."""
    base = subsystem_basis_projectors(D_S, D_E, dimension=dimension)
    U = haar_unitary(base.total_dim, seed)
    meta = {"D_S": int(D_S), "D_E": int(D_E), "seed": seed if not isinstance(seed, np.random.Generator) else None}
    return ProjectorSet(tuple(U @ V for V in base.isometries), "haar", metadata=meta)


def microcanonical_projectors(
    spec: SpectralDecomposition, E_lo: float, E_hi: float, partition="singletons"
) -> ProjectorSet:
    """Projectors built from energy eigenstates with E_lo <= E_n <= E_hi.

    Parameters
    ----------
    partition : str or sequence of index sequences
        ``"singletons"``: one eigenprojector per level. ``"single"``: one
        projector onto the whole window. ``"dft"``: rank-1 DFT states of the
        windowed eigenvectors. Otherwise a list of groups of positions
        (0-based, relative to the window) covering each window level exactly
        once.

    The returned set carries ``support`` = the windowed eigenvectors, so
    D_sub = number of levels in the window.
    """
    E = spec.eigenvalues
    idx = np.flatnonzero((E >= E_lo) & (E <= E_hi))
    if idx.size == 0:
        raise EmptyWindow(f"no eigenvalues in [{E_lo}, {E_hi}]")
    Wwin = spec.eigenvectors[:, idx]
    n = idx.size
    if isinstance(partition, str):
        if partition == "singletons":
            isos = tuple(Wwin[:, [i]] for i in range(n))
        elif partition == "single":
            isos = (Wwin,)
        elif partition == "dft":
            V = Wwin @ dft_matrix(n).T
            isos = tuple(V[:, [i]] for i in range(n))
        else:
            raise InputError(f"unknown partition {partition!r}")
        name = partition
    else:
        groups = [np.asarray(g, dtype=np.int64).ravel() for g in partition]
        flat = np.sort(np.concatenate(groups)) if groups else np.array([], dtype=np.int64)
        if not np.array_equal(flat, np.arange(n)):
            raise InputError(f"partition must cover window positions 0..{n - 1} exactly once")
        isos = tuple(Wwin[:, g] for g in groups)
        name = "groups"
    meta = {"E_lo": float(E_lo), "E_hi": float(E_hi), "partition": name, "window_indices": idx.tolist()}
    return ProjectorSet(isos, "microcanonical", support=Wwin, metadata=meta)


# --- validation ------------------------------------------------------------


@dataclass(frozen=True)
class ProjectorReport:
    isometry_residual: float
    orthogonality_residual: float
    completeness_residual: float
    rank_residual: int
    tol: float

    @property
    def ok(self) -> bool:
        return (
            self.isometry_residual <= self.tol
            and self.orthogonality_residual <= self.tol
            and self.completeness_residual <= self.tol
            and self.rank_residual == 0
        )

    def as_dict(self) -> dict:
        return {
            "isometry_residual": self.isometry_residual,
            "orthogonality_residual": self.orthogonality_residual,
            "completeness_residual": self.completeness_residual,
            "rank_residual": self.rank_residual,
            "tol": self.tol,
            "ok": self.ok,
        }


def validate_projector_set(pset: ProjectorSet, tol: float = PROJECTOR_TOL) -> ProjectorReport:
    """Max residuals of V_k^dag V_k = 1, V_k^dag V_l = 0 (k != l) and sum_k Pi_k = 1 (or the support projector)."""
    V = pset.stacked
    off = pset.offsets
    G = V.conj().T @ V
    iso = 0.0
    mask = np.zeros(G.shape, dtype=bool)
    for k in range(pset.count):
        a, b = off[k], off[k + 1]
        iso = max(iso, float(np.abs(G[a:b, a:b] - np.eye(b - a)).max()))
        mask[a:b, a:b] = True
    orth = float(np.abs(G[~mask]).max()) if (~mask).any() else 0.0
    P = V @ V.conj().T
    target = np.eye(pset.total_dim) if pset.support is None else pset.support @ pset.support.conj().T
    comp = float(np.abs(P - target).max())
    rank = abs(int(off[-1]) - pset.subspace_dim)
    return ProjectorReport(iso, orth, comp, rank, tol)


def perturb_projector_set(pset: ProjectorSet, noise: float, seed=None) -> ProjectorSet:
    """Add complex Gaussian noise of entrywise scale ``noise`` to every isometry (fault injection)."""
    rng = make_rng(seed)
    out = []
    for V in pset.isometries:
        Z = rng.standard_normal(V.shape) + 1j * rng.standard_normal(V.shape)
        out.append(V + noise * Z / np.sqrt(2.0))
    meta = dict(pset.metadata, perturbation=float(noise))
    return ProjectorSet(tuple(out), pset.label + "+noise", pset.support, meta)


# --- persistence -----------------------------------------------------------


def save_projector_set(pset: ProjectorSet, directory: str) -> str:
    """Write ``manifest.json`` plus one ``.npy`` per isometry; returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    files = []
    for k, V in enumerate(pset.isometries):
        name = f"isometry_{k:05d}.npy"
        np.save(os.path.join(directory, name), V)
        files.append(name)
    man = pset.manifest()
    man["files"] = files
    if pset.support is not None:
        np.save(os.path.join(directory, "support.npy"), pset.support)
        man["support"] = "support.npy"
    path = os.path.join(directory, "manifest.json")
    with open(path, "w") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
    return path


def load_projector_set(directory: str) -> ProjectorSet:
    with open(os.path.join(directory, "manifest.json")) as fh:
        man = json.load(fh)
    isos = tuple(np.load(os.path.join(directory, f)) for f in man["files"])
    support = np.load(os.path.join(directory, man["support"])) if "support" in man else None
    pset = ProjectorSet(isos, man["label"], support, man.get("metadata", {}))
    if pset.total_dim != man["D"] or list(pset.dims) != man["dims"]:
        raise DimensionMismatch("projector files disagree with the manifest")
    return pset
