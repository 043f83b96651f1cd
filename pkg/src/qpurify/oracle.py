"""Brute-force search over joint unitaries, used to check the purification thresholds.

For a unitary U the figure of merit is

    min_psi max_{rho_S in inputs} d(Tr_E[U rho_S (x) rho_E U^dag], |psi><psi|)

and :func:`verify_necessity` minimises it over U(d_S d_E) with Nelder-Mead on
the skew-Hermitian generator of U, restarted from Haar samples and from the
analytic swap.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import linalg
from .errors import DomainError, ShapeError, SizeLimitError
from .states import as_density, maximally_mixed, purity, random_pure
from .subsystems import build_from_spectrum, split_dimensions
from .swap import build_generalized_swap, thresholds

MAX_ORACLE_DIM = 16


def haar_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with R's diagonal phases removed."""
    if dim < 1:
        raise DomainError(f"dim must be positive, got {dim}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def default_inputs(d_S: int, n_random: int = 16, seed: int = 0) -> list[np.ndarray]:
    """I/d_S, the d_S basis states, pairwise superpositions with phases 1 and i, and random pure states."""
    eye = np.eye(d_S, dtype=np.complex128)
    vecs = [eye[a] for a in range(d_S)]
    for a in range(d_S):
        for b in range(a + 1, d_S):
            for phase in (1.0, 1j):
                vecs.append((eye[a] + phase * eye[b]) / np.sqrt(2))
    children = np.random.SeedSequence(seed).spawn(n_random)
    vecs += [random_pure(d_S, int(c.generate_state(1)[0])).amplitudes for c in children]
    return [maximally_mixed(d_S).matrix] + [np.outer(v, v.conj()) for v in vecs]


def kraus_operators(u: np.ndarray, rho_E, d_S: int) -> np.ndarray:
    """Kraus operators of rho_S -> Tr_E[U rho_S (x) rho_E U^dag], shape (d_E^2, d_S, d_S)."""
    rho_E = as_density(rho_E).matrix
    d_E = rho_E.shape[0]
    lam, vecs = np.linalg.eigh(rho_E)
    keep = lam > 1e-15
    lam, vecs = lam[keep], vecs[:, keep]
    ut = u.reshape(d_S, d_E, d_S, d_E)
    # K[e, f] = sqrt(lam_f) <e|_E U |v_f>_E
    k = np.einsum("aesg,gf->efas", ut, vecs) * np.sqrt(lam)[None, :, None, None]
    return k.reshape(-1, d_S, d_S)


def channel_outputs(u: np.ndarray, rho_E, d_S: int, inputs: np.ndarray) -> np.ndarray:
    k = kraus_operators(u, rho_E, d_S)
    out = np.einsum("kas,ist,kbt->iab", k, inputs, k.conj())
    return 0.5 * (out + np.conj(np.swapaxes(out, 1, 2)))


def _pure_distances(outs: np.ndarray, psi: np.ndarray) -> np.ndarray:
    # rho - |psi><psi| has trace zero and at most one negative eigenvalue,
    # so the trace distance is minus that eigenvalue
    diff = outs - np.outer(psi, psi.conj())[None]
    if outs.shape[1] == 2:
        a = 0.5 * (diff[:, 0, 0].real - diff[:, 1, 1].real)
        return np.sqrt(a * a + np.abs(diff[:, 0, 1]) ** 2)
    return -np.linalg.eigvalsh(diff)[:, 0]


def _to_psi(x: np.ndarray) -> np.ndarray:
    d = x.shape[0] // 2
    v = x[:d] + 1j * x[d:]
    return v / np.linalg.norm(v)


def _min_over_targets(outs, seed_psi, restarts, rng, maxfev=None, tol=1e-12):
    def f(x):
        return float(np.max(_pure_distances(outs, _to_psi(x))))

    d = outs.shape[1]
    starts = [np.concatenate([seed_psi.real, seed_psi.imag])]
    starts += [rng.standard_normal(2 * d) for _ in range(restarts)]
    best = np.inf
    best_psi = seed_psi
    for x0 in starts:
        val0 = f(x0)
        opts = {"xatol": 1e-10, "fatol": tol, "maxfev": maxfev or 400 * d}
        res = minimize(f, x0, method="Nelder-Mead", options=opts)
        val, x = (res.fun, res.x) if res.fun <= val0 else (val0, x0)
        if val < best:
            best, best_psi = val, _to_psi(x)
    return best, best_psi


def _check_inputs(inputs, d_S):
    arr = np.asarray([np.asarray(r, dtype=np.complex128) for r in inputs])
    if arr.ndim != 3 or arr.shape[1:] != (d_S, d_S):
        raise ShapeError(f"inputs must be {d_S}x{d_S} matrices")
    mixed = np.eye(d_S) / d_S
    if not any(np.max(np.abs(r - mixed)) < 1e-12 for r in arr):
        raise DomainError("inputs must contain the maximally mixed state I/d_S")
    return arr


def achieved_epsilon(u, rho_E, d_S: int, inputs, restarts: int = 8, seed: int = 0) -> float:
    """Worst-case distance to the best pure target over a finite input set.

    The max over inputs is exact; the min over targets is a Nelder-Mead search
    on the unit sphere started at the top eigenvector of the output for I/d_S,
    plus ``restarts`` random starts.
    """
    rho_E = as_density(rho_E)
    u = linalg.as_matrix(u)
    if u.shape != (d_S * rho_E.dim,) * 2:
        raise ShapeError(f"U has shape {u.shape}, expected {(d_S * rho_E.dim,) * 2}")
    arr = _check_inputs(inputs, d_S)
    outs = channel_outputs(u, rho_E, d_S, arr)
    seed_psi = _top_vector(channel_outputs(u, rho_E, d_S, (np.eye(d_S) / d_S)[None])[0])
    val, _ = _min_over_targets(outs, seed_psi, restarts, np.random.default_rng(seed))
    return val


def _top_vector(rho: np.ndarray) -> np.ndarray:
    return linalg.eigh(rho).eigenvectors[:, 0]


@dataclass
class OptimizerBudget:
    n_restarts: int = 32
    max_fev: int | None = None  # per restart; default 30 * number of parameters
    step: float = 0.3
    inner_restarts: int = 8
    search_inner_fev: int = 30
    n_random_inputs: int = 16
    tol: float = 1e-3
    seed: int = 0

    def fev_for(self, n_params: int) -> int:
        return self.max_fev if self.max_fev is not None else 30 * n_params


@dataclass
class RestartTrace:
    start: str
    initial_value: float
    final_value: float
    n_fev: int
    purity_mixed_output: float


@dataclass
class OracleResult:
    best_epsilon: float
    epsilon_tilde: float
    epsilon_zero: float
    n_restarts: int
    converged: bool
    swap_epsilon: float = float("nan")
    traces: list[RestartTrace] = field(default_factory=list)
    best_unitary: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("best_unitary")
        return out


def _skew_hermitian(x: np.ndarray, n: int) -> np.ndarray:
    a = np.zeros((n, n), dtype=np.complex128)
    iu = np.triu_indices(n, 1)
    m = len(iu[0])
    a[iu] = x[:m] + 1j * x[m:2 * m]
    a = a - a.conj().T
    a[np.diag_indices(n)] = 1j * x[2 * m:]
    return a


def _expm_skew(a: np.ndarray) -> np.ndarray:
    # a = iH with H Hermitian
    w, v = np.linalg.eigh(-1j * a)
    return (v * np.exp(1j * w)) @ v.conj().T


def _run_restart(label, u0, rho_E, d_S, inputs, budget, rng):
    n = u0.shape[0]
    n_params = n * n
    mixed = (np.eye(d_S) / d_S)[None]

    def search_value(u):
        outs = channel_outputs(u, rho_E, d_S, inputs)
        seed_psi = _top_vector(channel_outputs(u, rho_E, d_S, mixed)[0])
        val, _ = _min_over_targets(outs, seed_psi, 0, rng, maxfev=budget.search_inner_fev, tol=1e-9)
        return val

    def f(x):
        return search_value(_expm_skew(_skew_hermitian(x, n)) @ u0)

    x0 = np.zeros(n_params)
    simplex = np.vstack([x0, x0 + budget.step * np.eye(n_params)])
    init = f(x0)
    res = minimize(
        f, x0, method="Nelder-Mead",
        options={"initial_simplex": simplex, "maxfev": budget.fev_for(n_params), "adaptive": True,
                 "xatol": 1e-8, "fatol": 1e-10},
    )
    x = res.x if res.fun <= init else x0
    u = _expm_skew(_skew_hermitian(x, n)) @ u0
    final = achieved_epsilon(u, rho_E, d_S, inputs, budget.inner_restarts, int(rng.integers(2**31)))
    out_mixed = channel_outputs(u, rho_E, d_S, mixed)[0]
    trace = RestartTrace(label, float(init), float(final), int(res.nfev), purity(out_mixed))
    return final, u, trace


def verify_necessity(rho_E, d_S: int, budget: OptimizerBudget | None = None) -> OracleResult:
    """Search U(d_S d_E) for a unitary that purifies better than the thresholds allow.

    Restart 0 starts from the spectrum-aligned swap, the others from Haar samples.
    ``converged`` is True only when eps_0 - tol <= best <= eps~ + tol.
    """
    budget = budget or OptimizerBudget()
    rho_E = as_density(rho_E)
    split = split_dimensions(d_S, rho_E.dim)
    n = d_S * split.d_E
    if n > MAX_ORACLE_DIM:
        raise SizeLimitError(f"d_S*d_E = {n} exceeds oracle limit {MAX_ORACLE_DIM}")
    eps_t, _, eps_0 = thresholds(rho_E, d_S)
    inputs = _check_inputs(default_inputs(d_S, budget.n_random_inputs, budget.seed), d_S)
    w = build_generalized_swap(build_from_spectrum(rho_E, d_S), d_S)
    children = np.random.SeedSequence(budget.seed).spawn(budget.n_restarts)

    best, best_u, traces = np.inf, None, []
    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        if r == 0:
            label, u0 = "swap", w
        else:
            label, u0 = "haar", haar_unitary(n, int(rng.integers(2**31)))
        val, u, trace = _run_restart(label, u0, rho_E, d_S, inputs, budget, rng)
        traces.append(trace)
        if val < best:
            best, best_u = val, u
    swap_eps = traces[0].final_value if traces and traces[0].start == "swap" else float("nan")
    converged = bool(eps_0 - budget.tol <= best <= eps_t + budget.tol)
    return OracleResult(float(best), eps_t, eps_0, budget.n_restarts, converged, swap_eps, traces, best_u)
