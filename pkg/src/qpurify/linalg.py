"""Dense complex linear algebra used by the rest of the package.

All routines take and return plain ``numpy`` arrays (complex128 for operators).
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DomainError, ShapeError, SizeLimitError

MAX_DIM = 2**16
HERMITIAN_TOL = 1e-10
DEGENERACY_GAP = 1e-9


class Spectrum(NamedTuple):
    """Eigenvalues in non-increasing order; ``eigenvectors[:, j]`` belongs to ``eigenvalues[j]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix has non-finite entries")
    return m


def _square(a) -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    return m


def kron(a, b, max_dim: int = MAX_DIM) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dim:
        raise SizeLimitError(f"kron result {rows}x{cols} exceeds limit {max_dim}")
    return np.kron(a, b)


def partial_trace(joint, dim_first: int, dim_second: int, keep: str = "first") -> np.ndarray:
    """Trace out one factor of a bipartite operator on C^dim_first (x) C^dim_second."""
    m = _square(joint)
    n = dim_first * dim_second
    if m.shape[0] != n:
        raise ShapeError(f"joint operator has dimension {m.shape[0]}, expected {dim_first}*{dim_second}={n}")
    t = m.reshape(dim_first, dim_second, dim_first, dim_second)
    if keep == "first":
        return np.einsum("ajbj->ab", t)
    if keep == "second":
        return np.einsum("jajb->ab", t)
    raise ValueError(f"keep must be 'first' or 'second', not {keep!r}")


def hermitize(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return (h + h^dag)/2, refusing inputs whose anti-Hermitian part exceeds ``tol``."""
    m = _square(h)
    asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if asym > tol:
        raise DomainError(f"matrix is not Hermitian (max |h - h^dag| = {asym:.3e} > {tol:.1e})")
    return 0.5 * (m + m.conj().T)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    # largest-magnitude component made real positive; first index wins near-ties
    mags = np.abs(v)
    idx = int(np.argmax(mags >= mags.max() * (1 - 1e-12)))
    return v * (np.conj(v[idx]) / mags[idx])


def eigh(h, tol: float = HERMITIAN_TOL) -> Spectrum:
    """Hermitian eigendecomposition with a reproducible ordering.

    Eigenvalues come out non-increasing. Inside a cluster of eigenvalues closer
    than ``DEGENERACY_GAP`` the eigenvectors are ordered by the index of their
    largest-magnitude component, and each vector's phase is fixed so that this
    component is real and positive.
    """
    m = hermitize(h, tol)
    vals, vecs = np.linalg.eigh(m)
    vals = vals[::-1].copy()
    vecs = vecs[:, ::-1].copy()
    n = len(vals)
    for j in range(n):
        vecs[:, j] = _fix_phase(vecs[:, j])

    order = []
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and vals[stop - 1] - vals[stop] < DEGENERACY_GAP:
            stop += 1
        cluster = list(range(start, stop))
        if len(cluster) > 1:
            peak = [int(np.argmax(np.abs(vecs[:, j]) >= np.abs(vecs[:, j]).max() * (1 - 1e-12))) for j in cluster]
            cluster = [j for _, j in sorted(zip(peak, cluster))]
        order.extend(cluster)
        start = stop
    order = np.asarray(order, dtype=int)
    return Spectrum(vals[order], vecs[:, order])


def eigvalsh_desc(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Eigenvalues only, non-increasing."""
    return np.linalg.eigvalsh(hermitize(h, tol))[::-1].copy()


def trace_norm(x, tol: float = HERMITIAN_TOL) -> float:
    """Sum of |eigenvalues| of a Hermitian operator."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(x, tol)))))


def trace_distance(a, b) -> float:
    """(1/2) ||a - b||_1 for Hermitian a, b of equal dimension."""
    a = _square(a)
    b = _square(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    # canonical operand order makes d(a, b) == d(b, a) bit for bit
    if a.tobytes() > b.tobytes():
        a, b = b, a
    return 0.5 * trace_norm(a - b)


def is_unitary(u, tol: float = 1e-10) -> bool:
    u = _square(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)
