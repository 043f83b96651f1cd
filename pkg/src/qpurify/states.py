"""Density operators and pure states: validation, entropy, purity, sampling."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import linalg
from .errors import DomainError, ShapeError, ValidationError

PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A validated state. ``correction`` is the max-entry size of the repair applied by :func:`validate`."""

    matrix: np.ndarray
    correction: float = 0.0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh_desc(self.matrix)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "entries": [[float(z.real), float(z.imag)] for z in self.matrix.ravel()],
        }

    @classmethod
    def from_dict(cls, data: dict, tol: float = PSD_TOL) -> "DensityOperator":
        dim = int(data["dim"])
        entries = np.asarray(data["entries"], dtype=float)
        if entries.shape != (dim * dim, 2):
            raise ShapeError(f"'entries' must hold {dim * dim} [re, im] pairs, got shape {entries.shape}")
        return validate((entries[:, 0] + 1j * entries[:, 1]).reshape(dim, dim), tol)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        norm = np.linalg.norm(v)
        if abs(norm - 1) > 1e-12:
            raise ValidationError(f"pure state must have unit norm, got {norm!r}")
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def to_dict(self) -> dict:
        return {"dim": self.dim, "amplitudes": [[float(z.real), float(z.imag)] for z in self.amplitudes]}

    @classmethod
    def normalized(cls, v) -> "PureState":
        v = np.asarray(v, dtype=np.complex128).ravel()
        return cls(v / np.linalg.norm(v))


def validate(rho, tol: float = PSD_TOL) -> DensityOperator:
    """Check a candidate density matrix and repair round-off.

    Eigenvalues in [-tol, 0) are clipped to zero and the trace renormalised.
    Anything worse raises :class:`ValidationError` naming the broken invariant.
    """
    if isinstance(rho, DensityOperator):
        return rho
    m = linalg.as_matrix(rho)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"density matrix must be square, got shape {m.shape}")
    try:
        h = linalg.hermitize(m, tol)
    except DomainError as exc:
        raise ValidationError(f"hermiticity: {exc}") from None
    tr = float(np.trace(h).real)
    if abs(tr - 1) > tol:
        raise ValidationError(f"trace: |Tr - 1| = {abs(tr - 1):.3e} exceeds {tol:.1e}")
    vals, vecs = np.linalg.eigh(h)
    if vals[0] < -tol:
        raise ValidationError(f"positivity: eigenvalue {vals[0]:.3e} below -{tol:.1e}")
    if vals[0] < 0:
        clipped = np.clip(vals, 0.0, None)
        fixed = (vecs * (clipped / clipped.sum())) @ vecs.conj().T
        fixed = 0.5 * (fixed + fixed.conj().T)
    elif tr != 1.0:
        fixed = h / tr
    else:
        fixed = h
    correction = float(np.max(np.abs(fixed - m)))
    return DensityOperator(fixed, correction)


def as_density(rho) -> DensityOperator:
    return rho if isinstance(rho, DensityOperator) else validate(rho)


def diagonal(probs) -> DensityOperator:
    return validate(np.diag(np.asarray(probs, dtype=float)))


def pure(v) -> DensityOperator:
    return validate(PureState.normalized(v).projector())


def maximally_mixed(dim: int) -> DensityOperator:
    return DensityOperator(np.eye(dim, dtype=np.complex128) / dim)


def von_neumann_entropy(rho) -> float:
    """Entropy in bits, with 0 log 0 = 0."""
    lam = np.clip(as_density(rho).eigenvalues(), 0.0, None)
    lam = lam[lam > 0]
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def binary_entropy(q: float) -> float:
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return float(-q * np.log2(q) - (1 - q) * np.log2(1 - q))


def purity(rho) -> float:
    m = as_density(rho).matrix
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return float(np.sum(np.abs(m) ** 2))


def random_density(dim: int, rank: int, seed: int) -> DensityOperator:
    """Ginibre-induced random state G G^dag / Tr(G G^dag), G of shape (dim, rank)."""
    if dim < 1 or not 1 <= rank <= dim:
        raise DomainError(f"need 1 <= rank <= dim, got rank={rank}, dim={dim}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityOperator(m / np.trace(m).real)


def random_pure(dim: int, seed: int) -> PureState:
    rng = np.random.default_rng(seed)
    return PureState.normalized(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


def gibbs(hamiltonian, beta: float) -> DensityOperator:
    """Thermal state exp(-beta H) / Z."""
    h = linalg.hermitize(hamiltonian)
    shift = np.min(np.linalg.eigvalsh(h))
    m = expm(-beta * (h - shift * np.eye(h.shape[0])))
    m = 0.5 * (m + m.conj().T)
    return validate(m / np.trace(m).real)


def dumps(rho) -> str:
    return json.dumps(as_density(rho).to_dict())


def loads(text: str) -> DensityOperator:
    return DensityOperator.from_dict(json.loads(text))
