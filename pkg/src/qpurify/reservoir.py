"""Engineered N-qubit reservoirs rho^{(x)N}, rho = diag(q, 1-q).

Everything is done per Hamming-weight class k (number of ones): the C(N, k)
basis states of weight k share the eigenvalue q^(N-k) (1-q)^k, so no
2^N-dimensional operator is ever built except in the optional dense cross-check.
"""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, QPurifyError, SizeLimitError, UnattainableError
from .states import PureState, as_density, binary_entropy, diagonal
from .swap import PurificationReport, purify
from . import linalg
from .subsystems import split_dimensions

DEFAULT_EPS_TYP = 0.1
MAX_CLASSES_N = 10**6
EXACT_COUNT_MAX_N = 2048
SORTED_MAX_N = 10_000
DENSE_CHECK_MAX_N = 8
EXACT_SORTED_MAX_N = 1024


class ConsistencyError(QPurifyError):
    """Combinatorial and dense computations disagree."""


@dataclass(frozen=True)
class ReservoirConfig:
    q: float
    N: int
    eps_typ: float = DEFAULT_EPS_TYP

    def __post_init__(self):
        if not 0.5 <= self.q <= 1.0:
            raise DomainError(f"q must lie in [1/2, 1], got {self.q}")
        if self.N < 1:
            raise DomainError(f"N must be positive, got {self.N}")
        if not self.eps_typ > 0:
            raise DomainError(f"eps_typ must be positive, got {self.eps_typ}")


class WeightClass(NamedTuple):
    k: int
    count: int | None  # exact C(N, k); None above EXACT_COUNT_MAX_N
    prob_each: float
    is_typical: bool
    log2_count: float
    log2_prob: float


@dataclass(frozen=True)
class TypicalityReport:
    entropy_per_qubit: float
    typical_dim: int | None
    typical_weight: float
    dim_bound: float
    half_space_ok: bool
    log2_typical_dim: float

    def to_dict(self) -> dict:
        return {
            "entropy_per_qubit": self.entropy_per_qubit,
            "typical_dim": self.typical_dim,
            "typical_weight": self.typical_weight,
            "dim_bound": self.dim_bound,
            "half_space_ok": self.half_space_ok,
            "log2_typical_dim": self.log2_typical_dim,
        }


def _log2_comb(n: int, k: np.ndarray) -> np.ndarray:
    return (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)) / math.log(2)


def _log2_prob(q: float, n: int, k: np.ndarray) -> np.ndarray:
    lq = math.log2(q)
    lp = (n - k) * lq
    if q < 1.0:
        lp = lp + k * math.log2(1 - q)
    else:
        lp = np.where(k > 0, -np.inf, lp)
    return lp


def _exp2(x: float) -> float:
    return 2.0**x if x < 1024 else math.inf


def _logsumexp2(terms: Sequence[float]) -> float:
    terms = [t for t in terms if t != -math.inf]
    if not terms:
        return -math.inf
    top = max(terms)
    return top + math.log2(math.fsum(2.0 ** (t - top) for t in terms))


def _classes(cfg: ReservoirConfig):
    n = cfg.N
    if n > MAX_CLASSES_N:
        raise SizeLimitError(f"N={n} exceeds {MAX_CLASSES_N}")
    k = np.arange(n + 1)
    s = binary_entropy(cfg.q)
    lp = _log2_prob(cfg.q, n, k)
    slack = 1e-12 * max(1, n)
    lo, hi = -n * (s + cfg.eps_typ) - slack, -n * (s - cfg.eps_typ) + slack
    return k, _log2_comb(n, k), lp, (lp >= lo) & (lp <= hi)


def typical_weight_classes(cfg: ReservoirConfig) -> list[WeightClass]:
    """One record per Hamming weight k = 0..N with its typicality flag.

    A weight-k sequence has probability q^(N-k) (1-q)^k and is typical when
    that probability lies in [2^-N(S+eps), 2^-N(S-eps)], S the binary entropy.
    """
    k, lc, lp, typical = _classes(cfg)
    exact = cfg.N <= EXACT_COUNT_MAX_N
    return [
        WeightClass(
            int(j),
            math.comb(cfg.N, int(j)) if exact else None,
            float(2.0 ** lp[j]),
            bool(typical[j]),
            float(lc[j]),
            float(lp[j]),
        )
        for j in k
    ]


def typicality(cfg: ReservoirConfig) -> TypicalityReport:
    k, lc, lp, typical = _classes(cfg)
    s = binary_entropy(cfg.q)
    terms = np.sort(lc[typical] + lp[typical])[::-1]
    weight = math.fsum((2.0 ** terms).tolist())
    ks = k[typical].tolist()
    if not ks:
        dim, log2_dim, half_ok = 0, -math.inf, True
    elif cfg.N <= EXACT_COUNT_MAX_N:
        dim = sum(math.comb(cfg.N, j) for j in ks)
        log2_dim = math.log2(dim)
        half_ok = dim <= 2 ** (cfg.N - 1)
    else:
        dim = None
        log2_dim = _logsumexp2(lc[typical].tolist())
        half_ok = log2_dim <= cfg.N - 1
    return TypicalityReport(
        entropy_per_qubit=s,
        typical_dim=dim,
        typical_weight=min(1.0, weight),
        dim_bound=_exp2(cfg.N * (s + cfg.eps_typ)),
        half_space_ok=bool(half_ok),
        log2_typical_dim=log2_dim,
    )


def hoeffding_threshold(q: float, eps_typ: float, delta: float = 0.01) -> int:
    """Smallest N from which Hoeffding's inequality alone guarantees typical weight >= 1 - delta.

    Typicality is equivalent to |k/N - (1-q)| <= eps/log2(q/(1-q)); Hoeffding
    bounds the complement by 2 exp(-2 N t^2).
    """
    if q == 0.5 or q == 1.0:
        return 1
    t = eps_typ / math.log2(q / (1 - q))
    return max(1, math.ceil(math.log(2 / delta) / (2 * t * t)))


@dataclass(frozen=True)
class TypicalCurve:
    points: list[tuple[int, float]]
    threshold: int | None
    delta: float
    hoeffding_N: int


def q_typ_curve(q: float, eps_typ: float, N_list: Sequence[int], delta: float = 0.01) -> TypicalCurve:
    """Typical weight Tr(Pi_T rho^{(x)N}) along a grid of N.

    ``threshold`` is the smallest grid N such that every grid point from there
    on has weight >= 1 - delta (None if the last point fails).
    """
    ns = sorted(int(n) for n in N_list)
    pts = [(n, typicality(ReservoirConfig(q, n, eps_typ)).typical_weight) for n in ns]
    threshold = None
    for n, w in reversed(pts):
        if w >= 1 - delta:
            threshold = n
        else:
            break
    return TypicalCurve(pts, threshold, delta, hoeffding_threshold(q, eps_typ, delta))


@dataclass(frozen=True)
class HalfSpaceResult:
    n_min: int
    analytic_n_min: int


def min_N_half_space(q: float, eps_typ: float = DEFAULT_EPS_TYP, max_N: int = 10_000,
                     require_nonempty: bool = True) -> HalfSpaceResult:
    """Smallest N whose typical subspace fits in half of (C^2)^{(x)N}.

    Also reports the smallest N allowed by the entropy condition S < 1 - 1/N.
    An empty typical set fits trivially but carries no weight, so by default
    such N are skipped.
    """
    s = binary_entropy(q)
    if q <= 0.5 or s >= 1.0:
        raise UnattainableError("S(rho) = 1: the typical subspace never fits in half the space")
    analytic = math.floor(1.0 / (1.0 - s)) + 1
    for n in range(1, max_N + 1):
        rep = typicality(ReservoirConfig(q, n, eps_typ))
        if require_nonempty and rep.typical_dim == 0:
            continue
        if rep.half_space_ok:
            return HalfSpaceResult(n, analytic)
    raise UnattainableError(f"no N <= {max_N} has typical_dim <= 2^(N-1) at eps_typ={eps_typ}")


def sorted_epsilon_tilde(q: float, N: int) -> float:
    """1 - (sum of the 2^(N-1) largest eigenvalues of rho^{(x)N}).

    Computed as the weight of the 2^(N-1) smallest eigenvalues; the boundary
    weight class is split because all its states share one eigenvalue. Up to
    EXACT_SORTED_MAX_N the sum is exact (q is a dyadic rational) and rounded
    once, which keeps the curve exactly monotone in N.
    """
    ReservoirConfig(q, N)
    if N > SORTED_MAX_N:
        raise SizeLimitError(f"N={N} exceeds combinatorial limit {SORTED_MAX_N}")
    # q >= 1/2: probability is non-increasing in k, so the smallest eigenvalues sit at large k
    takes = []
    remaining = 2 ** (N - 1)
    for k in range(N, -1, -1):
        take = min(math.comb(N, k), remaining)
        takes.append((k, take))
        remaining -= take
        if remaining == 0:
            break
    if N <= EXACT_SORTED_MAX_N:
        fq = Fraction(q)
        a, b = fq.numerator, fq.denominator
        num = sum(take * a ** (N - k) * (b - a) ** k for k, take in takes)
        return float(Fraction(num, b**N))
    terms = []
    for k, take in takes:
        lp = float(_log2_prob(q, N, np.array([k]))[0])
        if lp != -math.inf:
            terms.append(math.log2(take) + lp)
    terms.sort()
    return math.fsum(2.0 ** t for t in terms)


def typical_protocol_epsilon(q: float, N: int, eps_typ: float = DEFAULT_EPS_TYP) -> float:
    """Error guaranteed by any H_1 containing the typical subspace: 1 - q_typ(N).

    NaN when the typical subspace does not fit in half the space.
    """
    rep = typicality(ReservoirConfig(q, N, eps_typ))
    return 1.0 - rep.typical_weight if rep.half_space_ok else float("nan")


def tensor_power_state(q: float, N: int) -> np.ndarray:
    """Dense diagonal rho^{(x)N}; only for small N."""
    if N > 12:
        raise SizeLimitError(f"dense tensor power limited to N <= 12, got {N}")
    diag = np.array([1.0])
    for _ in range(N):
        diag = np.kron(diag, [q, 1 - q])
    return np.diag(diag).astype(np.complex128)


def engineered_purification(rho_S, q: float, N: int, dense_check: bool = True):
    """Purify a qubit with N identical ancillas via the spectrum-sorted swap.

    The output is diag(1 - eps~, eps~) in the computational basis regardless of
    rho_S. For N <= 8 the dense swap pipeline is run as a cross-check.
    """
    rho_S = as_density(rho_S)
    if rho_S.dim != 2:
        raise DomainError("engineered purification targets a single qubit (d_S = 2)")
    eps = sorted_epsilon_tilde(q, N)
    out = diagonal([1.0 - eps, eps])
    target = PureState(np.array([1.0, 0.0], dtype=np.complex128))
    report = PurificationReport(
        epsilon_tilde=eps,
        epsilon_R=0.0,
        epsilon_zero=eps,
        achieved_distance=linalg.trace_distance(out.matrix, target.projector()),
        target_state=target,
        exact_possible=q == 1.0,
        purity_out=(1.0 - eps) ** 2 + eps**2,
        split=split_dimensions(2, 2**N) if N <= 62 else None,
    )
    if dense_check and N <= DENSE_CHECK_MAX_N:
        dense_out, _ = purify(rho_S, tensor_power_state(q, N), 2)
        gap = float(np.max(np.abs(dense_out.matrix - out.matrix)))
        if gap > 1e-10:
            raise ConsistencyError(f"combinatorial and dense outputs differ by {gap:.3e} at N={N}")
    return out, report


def curve_row(q: float, N: int, eps_typ: float = DEFAULT_EPS_TYP) -> dict:
    rep = typicality(ReservoirConfig(q, N, eps_typ))
    return {
        "N": N,
        "entropy": rep.entropy_per_qubit,
        "typical_dim": rep.typical_dim if rep.typical_dim is not None else _exp2(rep.log2_typical_dim),
        "typical_weight": rep.typical_weight,
        "half_space_ok": rep.half_space_ok,
        "epsilon_tilde_sorted": sorted_epsilon_tilde(q, N),
        "epsilon_typical_protocol": 1.0 - rep.typical_weight if rep.half_space_ok else float("nan"),
    }
