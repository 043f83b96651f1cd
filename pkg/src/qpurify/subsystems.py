"""Virtual-subsystem decompositions H_E = (H_S~ (x) H_F) (+) H_R of an environment.

Basis columns are ordered block by block: columns ``j*d_F .. (j+1)*d_F - 1``
span the j-th copy H_j (S~ index j, F index running fastest), and the last
``d_R`` columns span the remainder.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DegenerateSupportError, DomainError, ShapeError
from .states import DensityOperator, PureState, as_density

RANK_TOL = 1e-9


@dataclass(frozen=True)
class DimensionSplit:
    d_S: int
    d_E: int
    d_F: int
    d_R: int

    def __post_init__(self):
        if self.d_E != self.d_S * self.d_F + self.d_R or not 0 <= self.d_R < self.d_S:
            raise DomainError(f"inconsistent split {self}")

    def to_dict(self) -> dict:
        return {"d_S": self.d_S, "d_E": self.d_E, "d_F": self.d_F, "d_R": self.d_R}


def split_dimensions(d_S: int, d_E: int) -> DimensionSplit:
    if not 1 <= d_S <= d_E:
        raise DomainError(f"need 1 <= d_S <= d_E, got d_S={d_S}, d_E={d_E}")
    d_F, d_R = divmod(d_E, d_S)
    return DimensionSplit(d_S, d_E, d_F, d_R)


@dataclass(frozen=True, eq=False)
class VirtualDecomposition:
    split: DimensionSplit
    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=np.complex128)
        if b.shape != (self.split.d_E, self.split.d_E):
            raise ShapeError(f"basis must be {self.split.d_E}x{self.split.d_E}, got {b.shape}")
        if not linalg.is_unitary(b):
            raise DomainError("decomposition basis is not unitary")
        object.__setattr__(self, "basis", b)

    def block(self, j: int) -> np.ndarray:
        """Columns spanning H_j, the j-th (0-based) copy of H_F."""
        d_F = self.split.d_F
        return self.basis[:, j * d_F:(j + 1) * d_F]

    def remainder(self) -> np.ndarray:
        return self.basis[:, self.split.d_S * self.split.d_F:]

    def to_dict(self) -> dict:
        return {
            "split": self.split.to_dict(),
            "basis": [[[float(z.real), float(z.imag)] for z in row] for row in self.basis],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VirtualDecomposition":
        s = data["split"]
        b = np.asarray(data["basis"], dtype=float)
        return cls(DimensionSplit(s["d_S"], s["d_E"], s["d_F"], s["d_R"]), b[..., 0] + 1j * b[..., 1])


@dataclass(frozen=True, eq=False)
class InitializedForm:
    """|phi~><phi~| (x) tau_F (+) 0_R together with its trace distance to the source state."""

    phi_tilde: PureState
    tau_F: DensityOperator
    deviation_norm: float
    rho_tilde: DensityOperator


def build_from_spectrum(rho_E, d_S: int) -> VirtualDecomposition:
    """Spectrum-aligned decomposition: H_1 holds the d_F largest eigenvectors,
    H_2, ..., H_{d_S} the following blocks, H_R the d_R smallest."""
    rho_E = as_density(rho_E)
    split = split_dimensions(d_S, rho_E.dim)
    spec = linalg.eigh(rho_E.matrix)
    return VirtualDecomposition(split, spec.eigenvectors)


def reassemble(phi_tilde: PureState, tau_F, dec: VirtualDecomposition) -> np.ndarray:
    """Embed |phi~><phi~| (x) tau_F (+) 0_R into H_E through the decomposition basis."""
    s = dec.split
    core = np.kron(phi_tilde.projector(), np.asarray(tau_F))
    full = np.zeros((s.d_E, s.d_E), dtype=np.complex128)
    n = s.d_S * s.d_F
    full[:n, :n] = core
    return dec.basis @ full @ dec.basis.conj().T


def nearest_initialized(rho_E, dec: VirtualDecomposition) -> InitializedForm:
    rho_E = as_density(rho_E)
    s = dec.split
    if rho_E.dim != s.d_E:
        raise ShapeError(f"rho_E has dimension {rho_E.dim}, decomposition expects {s.d_E}")
    h1 = dec.block(0)
    restricted = h1.conj().T @ rho_E.matrix @ h1
    weight = float(np.trace(restricted).real)
    if weight <= RANK_TOL:
        raise DegenerateSupportError("rho_E has no weight on H_1; tau_F is undefined")
    tau = as_density(restricted / weight)
    phi = PureState(np.eye(s.d_S, dtype=np.complex128)[0])
    rho_tilde = as_density(reassemble(phi, tau, dec))
    dev = linalg.trace_distance(rho_E.matrix, rho_tilde.matrix)
    return InitializedForm(phi, tau, dev, rho_tilde)


def is_purely_initialized(rho_E, d_S: int, tol: float = RANK_TOL) -> bool:
    """Exact-purification test: rank(rho_E) <= d_F."""
    rho_E = as_density(rho_E)
    split = split_dimensions(d_S, rho_E.dim)
    return int(np.sum(rho_E.eigenvalues() > tol)) <= split.d_F
