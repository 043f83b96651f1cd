"""Generalized swap unitary, purification and ground-state cooling pipelines."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import ShapeError, SizeLimitError, UnsupportedDegeneracyError
from .states import PureState, as_density, purity
from .subsystems import (
    DimensionSplit,
    VirtualDecomposition,
    build_from_spectrum,
    is_purely_initialized,
    split_dimensions,
)

MAX_JOINT_DIM = 2**13
EXACT_PURITY_TOL = 1e-9


@dataclass
class PurificationReport:
    epsilon_tilde: float
    epsilon_R: float
    epsilon_zero: float
    achieved_distance: float
    target_state: PureState
    exact_possible: bool
    purity_out: float = float("nan")
    split: DimensionSplit | None = None

    def to_dict(self) -> dict:
        out = {
            "epsilon_tilde": self.epsilon_tilde,
            "epsilon_R": self.epsilon_R,
            "epsilon_zero": self.epsilon_zero,
            "achieved_distance": self.achieved_distance,
            "target_state": self.target_state.to_dict(),
            "exact_possible": self.exact_possible,
            "purity_out": self.purity_out,
        }
        if self.split is not None:
            out["split"] = self.split.to_dict()
        return out


@dataclass
class CoolingReport:
    initial_energy: float
    final_energy: float
    e_min: float
    e_max: float
    bound: float
    ground_state: PureState
    purification: PurificationReport = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "initial_energy": self.initial_energy,
            "final_energy": self.final_energy,
            "e_min": self.e_min,
            "e_max": self.e_max,
            "bound": self.bound,
            "ground_state": self.ground_state.to_dict(),
            "purification": self.purification.to_dict() if self.purification else None,
        }


def thresholds(rho_E, d_S: int) -> tuple[float, float, float]:
    """(epsilon_tilde, epsilon_R, epsilon_zero) from the spectrum of rho_E.

    epsilon_tilde is the weight outside the d_F largest eigenvalues; epsilon_R
    is (d_R/d_S) times the (d_F+1)-th eigenvalue, or zero if there is none.
    """
    rho_E = as_density(rho_E)
    split = split_dimensions(d_S, rho_E.dim)
    lam = np.clip(rho_E.eigenvalues(), 0.0, None)
    lam = lam / lam.sum()
    # tail sum instead of 1 - head sum: no cancellation when epsilon_tilde is tiny
    eps_tilde = float(np.sum(lam[split.d_F:][::-1]))
    next_lam = float(lam[split.d_F]) if split.d_F < split.d_E else 0.0
    eps_R = split.d_R / split.d_S * next_lam
    return eps_tilde, eps_R, eps_tilde - eps_R


def swap_permutation(split: DimensionSplit) -> np.ndarray:
    """Index map of the swap in the frame (S basis) x (decomposition basis).

    ``perm[i]`` is the image of product-basis index ``i = s*d_E + c``.
    """
    d_S, d_E, d_F = split.d_S, split.d_E, split.d_F
    perm = np.arange(d_S * d_E)
    for s in range(d_S):
        for j in range(d_S):
            for l in range(d_F):
                perm[s * d_E + j * d_F + l] = j * d_E + s * d_F + l
    return perm


def unitary_with_first_column(psi) -> np.ndarray:
    """Some unitary V with V e_0 = psi."""
    v = PureState.normalized(psi).amplitudes
    d = v.shape[0]
    q, r = np.linalg.qr(np.column_stack([v, np.eye(d, dtype=np.complex128)]))
    q = q[:, :d]
    q[:, 0] *= r[0, 0] / abs(r[0, 0])
    return q


def build_generalized_swap(dec: VirtualDecomposition, d_S: int, system_basis=None) -> np.ndarray:
    """W_SE in the computational basis of H_S (x) H_E.

    ``system_basis`` gives the ordered basis {|psi_j>} of H_S as columns
    (identity by default); the S~ basis state |phi_k> is exchanged with |psi_k>.
    """
    split = dec.split
    if split.d_S != d_S:
        raise ShapeError(f"decomposition was built for d_S={split.d_S}, not {d_S}")
    n = d_S * split.d_E
    if n > MAX_JOINT_DIM:
        raise SizeLimitError(f"joint dimension {n} exceeds dense limit {MAX_JOINT_DIM}")
    v = np.eye(d_S, dtype=np.complex128) if system_basis is None else linalg.as_matrix(system_basis)
    if v.shape != (d_S, d_S) or not linalg.is_unitary(v):
        raise ShapeError("system_basis must be a d_S x d_S unitary")
    perm = swap_permutation(split)
    p = np.zeros((n, n), dtype=np.complex128)
    p[perm, np.arange(n)] = 1.0
    frame = np.kron(v, dec.basis)
    return frame @ p @ frame.conj().T


def reduced_output(u, rho_S, rho_E) -> np.ndarray:
    """Tr_E(U rho_S (x) rho_E U^dag)."""
    rs = np.asarray(rho_S, dtype=np.complex128)
    re = np.asarray(rho_E, dtype=np.complex128)
    d_S, d_E = rs.shape[0], re.shape[0]
    u = linalg.as_matrix(u)
    if u.shape != (d_S * d_E, d_S * d_E):
        raise ShapeError(f"unitary has shape {u.shape}, expected {(d_S * d_E,) * 2}")
    joint = u @ np.kron(rs, re) @ u.conj().T
    out = linalg.partial_trace(joint, d_S, d_E, keep="first")
    return 0.5 * (out + out.conj().T)


def _report(rho_E, d_S, rho_out, target: PureState) -> PurificationReport:
    eps_t, eps_r, eps_0 = thresholds(rho_E, d_S)
    return PurificationReport(
        epsilon_tilde=eps_t,
        epsilon_R=eps_r,
        epsilon_zero=eps_0,
        achieved_distance=linalg.trace_distance(rho_out, target.projector()),
        target_state=target,
        exact_possible=is_purely_initialized(rho_E, d_S),
        purity_out=purity(rho_out),
        split=split_dimensions(d_S, as_density(rho_E).dim),
    )


def purify(rho_S, rho_E, d_S: int | None = None, target=None, system_basis=None):
    """Swap the system with the spectrum-aligned virtual subsystem of the environment.

    Returns the output state of S and a :class:`PurificationReport`. With
    ``target`` the swap is followed by a local unitary on S that rotates the
    virtual subsystem's pure state onto ``target``.
    """
    rho_S = as_density(rho_S)
    rho_E = as_density(rho_E)
    d_S = rho_S.dim if d_S is None else d_S
    if rho_S.dim != d_S:
        raise ShapeError(f"rho_S has dimension {rho_S.dim}, expected d_S={d_S}")
    dec = build_from_spectrum(rho_E, d_S)
    w = build_generalized_swap(dec, d_S, system_basis)
    basis = np.eye(d_S, dtype=np.complex128) if system_basis is None else linalg.as_matrix(system_basis)
    psi = basis[:, 0]
    if target is not None:
        v = unitary_with_first_column(target.amplitudes if isinstance(target, PureState) else target)
        w = np.kron(v, np.eye(rho_E.dim)) @ w
        psi = v @ psi
    out = reduced_output(w, rho_S.matrix, rho_E.matrix)
    target_state = PureState.normalized(psi)
    return as_density(out), _report(rho_E, d_S, out, target_state)


def energy_basis(h_S) -> tuple[np.ndarray, np.ndarray]:
    """Energies in non-decreasing order and matching eigenvectors as columns."""
    spec = linalg.eigh(-linalg.as_matrix(h_S))
    return -spec.eigenvalues, spec.eigenvectors


def cool(rho_S, rho_E, h_S):
    """Ground-state cooling: purification aimed at the unique ground state of ``h_S``."""
    rho_S = as_density(rho_S)
    energies, vecs = energy_basis(h_S)
    d_S = len(energies)
    if rho_S.dim != d_S:
        raise ShapeError(f"H_S has dimension {d_S} but rho_S has dimension {rho_S.dim}")
    if d_S > 1 and energies[1] - energies[0] <= 1e-9:
        raise UnsupportedDegeneracyError(
            f"ground level is degenerate (gap {energies[1] - energies[0]:.3e}); only non-degenerate H_S is supported"
        )
    h = linalg.hermitize(h_S)
    out, prep = purify(rho_S, rho_E, d_S, system_basis=vecs)
    e_min, e_max = float(energies[0]), float(energies[-1])
    eps = prep.epsilon_tilde
    report = CoolingReport(
        initial_energy=float(np.trace(h @ rho_S.matrix).real),
        final_energy=float(np.trace(h @ out.matrix).real),
        e_min=e_min,
        e_max=e_max,
        bound=(1 - eps) * e_min + eps * e_max,
        ground_state=prep.target_state,
        purification=prep,
    )
    return out, report


def is_exact(rho_out, tol: float = EXACT_PURITY_TOL) -> bool:
    return purity(rho_out) >= 1 - tol

