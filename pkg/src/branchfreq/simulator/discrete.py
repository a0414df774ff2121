"""Generation-by-generation simulation from ``N`` type-1 ancestors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ExtinctError, SpecError
from ..moments import MomentTable
from ..process_model import ProcessSpec
from .seeding import make_rng

_COUNT_LIMIT = 2**62


@dataclass(frozen=True)
class PopulationSnapshot:
    t: float
    counts: np.ndarray
    N: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def extinct(self) -> bool:
        return self.total == 0


@dataclass(frozen=True)
class WStatistic:
    w: np.ndarray
    fractions: np.ndarray


def _rng(seed, rng):
    if rng is not None:
        return rng
    if seed is None:
        raise ValueError("pass either seed or rng")
    return make_rng(int(seed))


def step_generation(spec: ProcessSpec, counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Replace every cell by an offspring vector drawn from its type's law.

    The numbers of type-``i`` cells choosing each atom are one multinomial
    draw, which has the same law as independent per-cell draws.
    """
    nxt = np.zeros(spec.d, dtype=np.int64)
    for i, law in enumerate(spec.offspring):
        n_i = int(counts[i])
        if n_i == 0:
            continue
        vectors = law.vectors
        if len(law) == 1:
            chosen = np.array([n_i], dtype=np.int64)
        else:
            chosen = rng.multinomial(n_i, law.probs)
        bound = n_i * int(vectors.sum(axis=1).max())
        if bound >= _COUNT_LIMIT:
            raise OverflowError(f"population of type {i + 1} exceeds the int64 range")
        nxt += chosen @ vectors
    return nxt


def simulate_population(
    spec: ProcessSpec,
    N: int,
    t: int,
    seed: int | None = None,
    *,
    rng: np.random.Generator | None = None,
) -> PopulationSnapshot:
    """Counts at generation ``t`` for ``N`` type-1 ancestors."""
    if spec.time_mode != "discrete":
        raise SpecError([("time_mode", "simulate_population needs a discrete-time spec")])
    if N < 1 or t < 0:
        raise ValueError("need N >= 1 and t >= 0")
    gen = _rng(seed, rng)
    counts = np.zeros(spec.d, dtype=np.int64)
    counts[0] = N
    for _ in range(t):
        if not counts.any():
            break
        counts = step_generation(spec, counts, gen)
    counts.setflags(write=False)
    return PopulationSnapshot(t=t, counts=counts, N=int(N))


def fractions(snapshot: PopulationSnapshot) -> np.ndarray | None:
    """Type frequencies, or ``None`` for an extinct population."""
    total = snapshot.total
    if total == 0:
        return None
    return snapshot.counts / total


def w_statistics(snapshot: PopulationSnapshot, table: MomentTable) -> WStatistic:
    if snapshot.t != table.t:
        raise ValueError(f"snapshot at t={snapshot.t} but moments at t={table.t}")
    frac = fractions(snapshot)
    if frac is None:
        raise ExtinctError(f"population extinct at t={snapshot.t}")
    w = table.M_tot * math.sqrt(snapshot.N) * (frac - table.p)
    return WStatistic(w=w, fractions=frac)
