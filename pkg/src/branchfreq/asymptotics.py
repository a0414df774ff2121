"""Large-ancestor-count Gaussian law of the type frequencies.

For ``N`` independent type-1 ancestors the scaled deviations
``W_i = M_tot * sqrt(N) * (Delta_i - p_i)`` are asymptotically jointly normal
with covariance ``D``.  ``D`` is computed either as ``A^T R A`` from the
correlation matrix or directly from the count covariance ``C``; the second
route needs no division by standard deviations and is the one used
downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateCovarianceError,
    ParameterError,
    UndefinedCorrelationError,
    ZeroPopulationError,
)
from .moments import MomentTable


def _index(k, d: int) -> np.ndarray:
    """Resolve ``k`` (count of leading types or explicit index list)."""
    if k is None:
        k = d - 1 if d > 1 else 1
    if np.isscalar(k):
        k = int(k)
        if not 1 <= k <= d:
            raise ValueError(f"k must be in 1..{d}, got {k}")
        return np.arange(k)
    idx = np.asarray(k, dtype=int)
    if idx.ndim != 1 or idx.size == 0 or len(set(idx.tolist())) != idx.size:
        raise ValueError("index subset must be a nonempty list of distinct types")
    if idx.min() < 0 or idx.max() >= d:
        raise ValueError(f"type indices must be in 0..{d - 1}")
    return idx


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def a_matrix(sigma: Sequence[float], p: Sequence[float]) -> np.ndarray:
    """``A[i, j] = sigma_i * (delta_ij - p_j)``; rows sum to zero on the simplex."""
    sigma = np.asarray(sigma, dtype=float)
    p = np.asarray(p, dtype=float)
    return sigma[:, None] * (np.eye(sigma.size) - p[None, :])


def limit_cov_via_A(A: np.ndarray, R: np.ndarray, k=None) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    R = np.asarray(R, dtype=float)
    if np.any(~np.isfinite(R)):
        raise UndefinedCorrelationError(
            "correlation matrix has undefined entries (zero-variance type); "
            "use limit_cov_closed"
        )
    idx = _index(k, A.shape[0])
    sub = A[:, idx]
    return _sym(sub.T @ R @ sub)


def limit_cov_closed(C: np.ndarray, p: Sequence[float], k=None) -> np.ndarray:
    """Limit covariance from the count covariance ``C`` and proportions ``p``.

    Diagonal::

        d_ii = (1-p_i)^2 C_ii + p_i^2 sum_{k,l != i} C_kl
               - 2 p_i (1-p_i) sum_{k != i} C_ik

    Off-diagonal::

        d_ij = C_ij + p_i p_j sum_{k,l} C_kl - p_i sum_k C_kj - p_j sum_l C_il
    """
    C = _sym(np.asarray(C, dtype=float))
    p = np.asarray(p, dtype=float)
    d = p.size
    idx = _index(k, d)
    total = C.sum()
    col = C.sum(axis=0)
    diag = np.diag(C)
    off_row = col - diag  # sum_{k != i} C_ik
    # sum over k, l both != i, summed directly: total - 2*off_row - diag
    # cancels badly when C_ii dominates
    keep = ~np.eye(d, dtype=bool)
    rest = np.array([C[np.ix_(keep[i], keep[i])].sum() for i in range(d)])
    dii = (1 - p) ** 2 * diag + p**2 * rest - 2 * p * (1 - p) * off_row
    full = C + total * np.outer(p, p) - np.outer(p, col) - np.outer(col, p)
    full[np.diag_indices(d)] = dii
    return _sym(full[np.ix_(idx, idx)])


@dataclass(frozen=True)
class AsymptoticGaussian:
    """Gaussian approximation to the law of the selected frequency components."""

    t: int
    index: tuple[int, ...]
    mean: np.ndarray
    cov_limit: np.ndarray
    N: int
    M_tot: float
    cov_delta: np.ndarray

    @property
    def k(self) -> int:
        return len(self.index)


def delta_distribution(table: MomentTable, N: int, k=None) -> AsymptoticGaussian:
    """Finite-``N`` Gaussian for the frequency subvector.

    ``k`` defaults to the first ``d - 1`` types (the last one is implied by
    the frequencies summing to one); an explicit index list is accepted.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not table.M_tot > 0:
        raise ZeroPopulationError(f"expected population is zero at t={table.t}")
    idx = _index(k, table.d)
    D = limit_cov_closed(table.cov, table.p, idx)
    cov = D / (N * table.M_tot**2)
    mean = np.asarray(table.p)[idx].copy()
    for arr in (mean, D, cov):
        arr.setflags(write=False)
    return AsymptoticGaussian(
        t=table.t,
        index=tuple(int(i) for i in idx),
        mean=mean,
        cov_limit=D,
        N=int(N),
        M_tot=table.M_tot,
        cov_delta=cov,
    )


def check_nondegenerate(cov: np.ndarray, rel_tol: float = 1e-12) -> None:
    """Raise if the smallest eigenvalue is below ``rel_tol * trace``."""
    cov = np.asarray(cov, dtype=float)
    tr = float(np.trace(cov))
    lo = float(np.linalg.eigvalsh(cov)[0]) if cov.size else 0.0
    if not tr > 0 or lo < rel_tol * tr:
        raise DegenerateCovarianceError(
            f"covariance is near singular (min eigenvalue {lo:.3e}, trace {tr:.3e})"
        )


def s_squared_example2(p1: float, p2: float, t: int, N: int) -> float:
    """Variance of the progenitor frequency in the progenitor model.

    Substituting the closed-form moments into the two-type limit variance,
    the ``m**(2t)`` terms cancel and what is left is::

        S^2 = 2 p2 (p1 + p2) (2 p1)**(2 - t) / (N (2 p1 + p2)**4)
    """
    if not (p1 > 0 and p2 >= 0 and p1 + p2 <= 1 + 1e-12):
        raise ParameterError(f"need p1 > 0, p2 >= 0, p1 + p2 <= 1, got ({p1}, {p2})")
    if t < 1 or N < 1:
        raise ParameterError("t >= 1 and N >= 1 are required")
    m = 2.0 * p1
    return 2.0 * p2 * (p1 + p2) * m ** (2 - t) / (N * (m + p2) ** 4)
