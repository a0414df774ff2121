"""Exact transient moments of a discrete-time multitype branching process.

All per-ancestor quantities in :class:`MomentTable` are for a single type-1
ancestor (index 0).  The full mean matrix and factorial-moment tensor are kept
because the second-moment recurrence needs every row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import MomentOverflowError, ParameterError, SpecError
from .process_model import ProcessSpec, offspring_moments, offspring_pgf_eval

OVERFLOW_LIMIT = 1e300


def _guard(arr: np.ndarray, t: int) -> None:
    if not np.all(np.isfinite(arr)) or np.max(np.abs(arr), initial=0.0) > OVERFLOW_LIMIT:
        raise MomentOverflowError(
            f"moments at generation {t} exceed {OVERFLOW_LIMIT:g}; use a smaller t"
        )


def mean_matrix_power(M: np.ndarray, t: int) -> np.ndarray:
    """``M**t`` by repeated multiplication (``M**0`` is the identity)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    M = np.asarray(M, dtype=float)
    out = np.eye(M.shape[0])
    for u in range(1, t + 1):
        out = out @ M
        _guard(out, u)
    return out


def _step(M1, B1, mean_t, fact2_t):
    # b^i_jk(t+1) = sum_{l,r} b^i_lr m_lj(t) m_rk(t) + sum_l m_il b^l_jk(t)
    nxt = np.einsum("ilr,lj,rk->ijk", B1, mean_t, mean_t) + np.einsum("il,ljk->ijk", M1, fact2_t)
    return 0.5 * (nxt + nxt.transpose(0, 2, 1))


def second_moments_recurrence(M1: np.ndarray, B1: np.ndarray, t: int) -> np.ndarray:
    """Second factorial moments ``b^i_jk(t)`` from offspring moments.

    Starts from ``b(1) = B1`` and iterates the first-step decomposition up to
    generation ``t``.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    M1 = np.asarray(M1, dtype=float)
    B1 = np.asarray(B1, dtype=float)
    mean_t = M1.copy()
    fact2 = B1.copy()
    for u in range(1, t):
        fact2 = _step(M1, B1, mean_t, fact2)
        mean_t = mean_t @ M1
        _guard(fact2, u + 1)
        _guard(mean_t, u + 1)
    return fact2


@dataclass(frozen=True)
class MomentTable:
    """Moments at generation ``t`` for one type-1 ancestor.

    ``corr`` is NaN where a type has zero variance; ``corr_defined`` marks the
    entries that are meaningful.  ``M_tot`` is the expected total population,
    ``mean`` the full mean matrix.
    """

    t: int
    N: int
    mean: np.ndarray
    fact2: np.ndarray
    sigma2: np.ndarray
    cov: np.ndarray
    corr: np.ndarray
    corr_defined: np.ndarray
    p: np.ndarray
    M_tot: float
    q: float
    q_N: float

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(np.clip(self.sigma2, 0.0, None))

    @property
    def degenerate_types(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.sigma2 <= 0.0))


def _assemble(t, N, mean, fact2, q) -> MomentTable:
    d = mean.shape[0]
    m1 = mean[0]
    if t == 0:
        cov = np.zeros((d, d))
    else:
        cov = fact2[0] - np.outer(m1, m1)
        cov[np.diag_indices(d)] += m1
        cov = 0.5 * (cov + cov.T)
    sigma2 = np.diag(cov).copy()
    if t > 0:
        # b + m - m^2 cancels; residue at round-off level is a zero variance
        scale = np.diagonal(fact2[0]) + m1 + m1 * m1
        sigma2[np.abs(sigma2) <= 64 * np.finfo(float).eps * scale] = 0.0
    cov[np.diag_indices(d)] = sigma2
    defined = np.outer(sigma2 > 0, sigma2 > 0)
    sig = np.sqrt(np.clip(sigma2, 0.0, None))
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(defined, cov / np.outer(sig, sig), np.nan)
    corr[np.diag_indices(d)] = np.where(sigma2 > 0, 1.0, np.nan)
    M_tot = float(math.fsum(m1))
    if M_tot > 0:
        p = m1 / M_tot
    else:
        p = np.full(d, np.nan)
    for arr in (mean, fact2, cov, corr, defined, p, sigma2):
        arr.setflags(write=False)
    return MomentTable(
        t=t,
        N=N,
        mean=mean,
        fact2=fact2,
        sigma2=sigma2,
        cov=cov,
        corr=corr,
        corr_defined=defined,
        p=p,
        M_tot=M_tot,
        q=q,
        q_N=q**N,
    )


def _require_discrete(spec: ProcessSpec) -> None:
    if spec.time_mode != "discrete":
        raise SpecError([("time_mode", "generation moments need a discrete-time spec")])


def iter_moment_tables(spec: ProcessSpec, t_max: int, N: int = 1) -> Iterator[MomentTable]:
    """Yield moment tables for generations ``0..t_max`` in a single pass."""
    _require_discrete(spec)
    if N < 1:
        raise ValueError("N must be >= 1")
    M1, B1 = offspring_moments(spec)
    d = spec.d
    mean = np.eye(d)
    fact2 = np.zeros((d, d, d))
    q_vec = np.zeros(d)
    for u in range(t_max + 1):
        yield _assemble(u, N, mean.copy(), fact2.copy(), float(q_vec[0]))
        if u == t_max:
            break
        fact2 = B1.copy() if u == 0 else _step(M1, B1, mean, fact2)
        mean = mean @ M1
        _guard(mean, u + 1)
        _guard(fact2, u + 1)
        q_vec = np.array([offspring_pgf_eval(spec, i, q_vec) for i in range(d)])


def moment_table(spec: ProcessSpec, t: int, N: int = 1) -> MomentTable:
    if t < 0:
        raise ValueError("t must be >= 0")
    for table in iter_moment_tables(spec, t, N):
        pass
    return table


def extinction_probability(spec: ProcessSpec, t: int, N: int = 1) -> tuple[float, float]:
    """``(q(t), q(t)**N)`` by iterating the offspring generating functions from 0."""
    _require_discrete(spec)
    if t < 0:
        raise ValueError("t must be >= 0")
    q = np.zeros(spec.d)
    for _ in range(t):
        q = np.array([offspring_pgf_eval(spec, i, q) for i in range(spec.d)])
    q_t = float(min(max(q[0], 0.0), 1.0))
    return q_t, q_t**N


@dataclass(frozen=True)
class Example2Moments:
    t: int
    m11: float
    m12: float
    b111: float
    b112: float
    b122: float
    sigma1sq: float
    sigma2sq: float
    C12: float
    p: float
    M_tot: float


def _geometric(m: float, n: int) -> float:
    # 1 + m + ... + m**(n-1), exact at m == 1
    return math.fsum(m**u for u in range(n))


def example2_closed_forms(p1: float, p2: float, t: int) -> Example2Moments:
    """Closed-form generation-``t`` moments of the progenitor model.

    With ``m = 2 p1`` the progenitor count is a one-type process with offspring
    mean ``m`` and second factorial moment ``m``, so
    ``E Z1(Z1 - 1) = m**t (1 + m + ... + m**(t-1))``.  Differentiated cells at
    ``t`` are the conversions among the ``Z1(t-1)`` progenitors, which gives
    the cross and ``Z2`` moments in terms of the same quantity at ``t - 1``.
    The proportion of progenitors ``m / (m + p2)`` does not depend on ``t``.
    """
    if not (p1 >= 0 and p2 >= 0 and p1 + p2 <= 1 + 1e-12):
        raise ParameterError(f"need p1, p2 >= 0 and p1 + p2 <= 1, got ({p1}, {p2})")
    if t < 1:
        raise ParameterError("t must be >= 1")
    if p1 + p2 == 0:
        raise ParameterError("p1 + p2 > 0 is required for the proportions to exist")
    m = 2.0 * p1
    m11 = m**t
    m12 = m ** (t - 1) * p2
    b_t = m**t * _geometric(m, t)
    b_prev = m ** (t - 1) * _geometric(m, t - 1)
    b112 = m * p2 * b_prev
    b122 = p2 * p2 * b_prev
    sigma1sq = b_t + m11 - m11 * m11
    sigma2sq = b122 + m12 - m12 * m12
    C12 = b112 - m11 * m12
    return Example2Moments(
        t=t,
        m11=m11,
        m12=m12,
        b111=b_t,
        b112=b112,
        b122=b122,
        sigma1sq=sigma1sq,
        sigma2sq=sigma2sq,
        C12=C12,
        p=m / (m + p2),
        M_tot=m11 + m12,
    )
