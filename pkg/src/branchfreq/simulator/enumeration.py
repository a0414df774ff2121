"""Exact small-instance distributions by exhaustive enumeration.

Every cell of every generation is expanded over every atom of its offspring
law; probabilities are carried as exact rationals (each float probability is
converted to the rational it represents).  This is deliberately independent of
the moment recurrences and is only meant for tiny instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import StateSpaceError
from ..process_model import ProcessSpec

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class ExactDistribution:
    t: int
    ancestor: int
    probs: dict[tuple[int, ...], Fraction]

    def total_mass(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def _expect(self, fn) -> Fraction:
        return sum((pr * fn(z) for z, pr in self.probs.items()), Fraction(0))

    def mean(self) -> np.ndarray:
        d = len(next(iter(self.probs)))
        return np.array([float(self._expect(lambda z, j=j: z[j])) for j in range(d)])

    def fact2(self) -> np.ndarray:
        """``E Z_j (Z_k - delta_jk)``."""
        d = len(next(iter(self.probs)))
        out = np.zeros((d, d))
        for j in range(d):
            for k in range(d):
                out[j, k] = float(self._expect(lambda z, j=j, k=k: z[j] * (z[k] - (j == k))))
        return out

    def cov(self) -> np.ndarray:
        d = len(next(iter(self.probs)))
        means = [self._expect(lambda z, j=j: z[j]) for j in range(d)]
        out = np.zeros((d, d))
        for j in range(d):
            for k in range(d):
                e = self._expect(lambda z, j=j, k=k: z[j] * z[k])
                out[j, k] = float(e - means[j] * means[k])
        return out

    def extinction(self) -> float:
        return float(sum((pr for z, pr in self.probs.items() if not any(z)), Fraction(0)))


def brute_force_distribution(
    spec: ProcessSpec, t: int, ancestor: int = 0, cap: int = DEFAULT_CAP
) -> ExactDistribution:
    """Exact law of the count vector at generation ``t`` from one cell.

    ``cap`` bounds the total number of enumerated joint outcomes.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    d = spec.d
    atoms = [
        [(Fraction(p), n) for p, n in law.atoms] for law in spec.offspring
    ]
    start = tuple(1 if j == ancestor else 0 for j in range(d))
    dist: dict[tuple[int, ...], Fraction] = {start: Fraction(1)}
    work = 0
    for _ in range(t):
        nxt: dict[tuple[int, ...], Fraction] = {}
        for state, pr in dist.items():
            cells = [i for i in range(d) for _ in range(state[i])]
            size = 1
            for i in cells:
                size *= len(atoms[i])
            work += size
            if work > cap:
                raise StateSpaceError(f"enumeration exceeds {cap} outcomes")
            for combo in itertools.product(*(atoms[i] for i in cells)):
                weight = pr
                child = [0] * d
                for p, n in combo:
                    weight *= p
                    for j in range(d):
                        child[j] += n[j]
                key = tuple(child)
                nxt[key] = nxt.get(key, Fraction(0)) + weight
        dist = nxt
    return ExactDistribution(t=t, ancestor=ancestor, probs=dist)
