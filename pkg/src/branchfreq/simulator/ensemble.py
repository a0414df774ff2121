"""Seeded Monte Carlo ensembles of independent populations."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import AllExtinctError
from ..moments import moment_table
from ..process_model import ProcessSpec
from .discrete import PopulationSnapshot, simulate_population
from .seeding import GENERATOR, mix64, replicate_rng

SEED_RULE = "replicate r uses PCG64(mix64(seed, r)), mix64 = splitmix64(splitmix64(seed) ^ r*0x9E3779B97F4A7C15)"


def replicate_snapshot(spec: ProcessSpec, N: int, t: int, seed: int, index: int) -> PopulationSnapshot:
    return simulate_population(spec, N, t, rng=replicate_rng(seed, index))


def _run_chunk(args):
    spec, N, t, seed, lo, hi = args
    return np.stack([replicate_snapshot(spec, N, t, seed, r).counts for r in range(lo, hi)])


def simulate_counts(
    spec: ProcessSpec, N: int, t: int, replicates: int, seed: int, workers: int = 1
) -> np.ndarray:
    """``(replicates, d)`` count matrix; row ``r`` depends only on ``(seed, r)``."""
    if workers <= 1 or replicates < 2 * workers:
        return _run_chunk((spec, N, t, seed, 0, replicates))
    edges = np.linspace(0, replicates, workers + 1).astype(int)
    jobs = [(spec, N, t, seed, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, jobs))
    return np.concatenate(parts)


@dataclass(frozen=True)
class EnsembleSummary:
    replicates: int
    extinct_count: int
    mean_fractions: np.ndarray
    mean_W: np.ndarray
    emp_cov_W: np.ndarray
    W: np.ndarray
    counts: np.ndarray
    seed: int
    generator: str = GENERATOR
    seed_rule: str = SEED_RULE

    @property
    def extinction_frequency(self) -> float:
        return self.extinct_count / self.replicates

    def replicate_seed(self, index: int) -> int:
        return mix64(self.seed, index)


def summarize(counts: np.ndarray, N: int, t: int, table, seed: int) -> EnsembleSummary:
    totals = counts.sum(axis=1)
    alive = totals > 0
    if not alive.any():
        raise AllExtinctError(f"all {len(counts)} replicates extinct at t={t}")
    frac = counts[alive] / totals[alive, None]
    W = table.M_tot * math.sqrt(N) * (frac - table.p)
    cov = np.cov(W, rowvar=False, ddof=1) if len(W) > 1 else np.zeros((counts.shape[1],) * 2)
    cov = np.atleast_2d(cov)
    cov = 0.5 * (cov + cov.T)
    return EnsembleSummary(
        replicates=int(len(counts)),
        extinct_count=int((~alive).sum()),
        mean_fractions=frac.mean(axis=0),
        mean_W=W.mean(axis=0),
        emp_cov_W=cov,
        W=W,
        counts=counts,
        seed=int(seed),
    )


def monte_carlo(
    spec: ProcessSpec, N: int, t: int, replicates: int, seed: int, workers: int = 1
) -> EnsembleSummary:
    """Run ``replicates`` independent populations and aggregate them.

    Extinct replicates are counted but left out of the frequency and W
    aggregates, which are conditional on survival.
    """
    if replicates < 2:
        raise ValueError("replicates must be >= 2")
    table = moment_table(spec, t, N)
    counts = simulate_counts(spec, N, t, replicates, seed, workers)
    return summarize(counts, N, t, table, seed)
