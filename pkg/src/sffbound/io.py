"""CSV and JSON writers with a fixed, byte-reproducible layout."""

from __future__ import annotations

import hashlib
import json
import os
from typing import Sequence

import numpy as np

from .errors import InputError
from .spectra import DosHistogram, SpectralDecomposition, spectrum_only

__all__ = [
    "FLOAT_FORMAT",
    "format_float",
    "write_csv",
    "read_csv",
    "write_spectrum_csv",
    "read_spectrum_csv",
    "write_histogram_csv",
    "canonical_json",
    "sha256_of",
    "write_json",
    "load_matrix",
    "load_vector",
]

FLOAT_FORMAT = "%.17g"


def format_float(x: float) -> str:
    return FLOAT_FORMAT % float(x)


def canonical_json(obj) -> str:
    """Sorted-key, indented JSON; the same object always serializes to the same bytes."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def sha256_of(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_json(path: str, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(canonical_json(obj))


def write_csv(path: str, header: Sequence[str], columns: Sequence, manifest_hash: str | None = None) -> None:
    """Header row plus one row per sample, 17 significant digits.

    With ``manifest_hash`` the first line is ``# manifest_sha256=<hex>``.
    """
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    if len(cols) != len(header):
        raise InputError("one column per header field required")
    n = cols[0].size
    if any(c.size != n for c in cols):
        raise InputError("columns differ in length")
    with open(path, "w", newline="\n") as fh:
        if manifest_hash is not None:
            fh.write(f"# manifest_sha256={manifest_hash}\n")
        fh.write(",".join(header) + "\n")
        if n:
            np.savetxt(fh, np.column_stack(cols), fmt=FLOAT_FORMAT, delimiter=",")


def read_csv(path: str) -> tuple[list[str], np.ndarray]:
    """Inverse of :func:`write_csv`: (header, data with one column per field)."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    header = lines[0].strip().split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2) if len(lines) > 1 else np.empty((0, len(header)))
    return header, data


def write_spectrum_csv(path: str, spec, manifest_hash: str | None = None) -> None:
    """One eigenvalue per line, ascending."""
    E = spec.eigenvalues if isinstance(spec, SpectralDecomposition) else np.sort(np.asarray(spec, dtype=float))
    with open(path, "w", newline="\n") as fh:
        if manifest_hash is not None:
            fh.write(f"# manifest_sha256={manifest_hash}\n")
        np.savetxt(fh, E, fmt=FLOAT_FORMAT)


def read_spectrum_csv(path: str) -> SpectralDecomposition:
    """Eigenvalues from a one-per-line file (``#`` comments allowed); sorted on read."""
    E = np.loadtxt(path, comments="#", ndmin=1, dtype=float)
    if E.ndim != 1:
        raise InputError(f"{path}: expected one eigenvalue per line")
    return spectrum_only(E)


def write_histogram_csv(path: str, hist: DosHistogram, manifest_hash: str | None = None) -> None:
    write_csv(
        path,
        ["bin_left", "bin_right", "density"],
        [hist.bin_edges[:-1], hist.bin_edges[1:], hist.densities],
        manifest_hash,
    )


def load_matrix(path: str) -> np.ndarray:
    """Square matrix from ``.npy`` (any dtype) or comma/whitespace text (real)."""
    path = os.fspath(path)
    if path.endswith(".npy"):
        M = np.load(path)
    else:
        delim = "," if path.endswith(".csv") else None
        M = np.loadtxt(path, delimiter=delim, comments="#", ndmin=2)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"{path}: expected a square matrix, got shape {M.shape}")
    return M


def load_vector(path: str) -> np.ndarray:
    path = os.fspath(path)
    if path.endswith(".npy"):
        return np.asarray(np.load(path)).ravel()
    return np.loadtxt(path, comments="#", ndmin=1, dtype=float)
