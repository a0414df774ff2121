"""Cells on a clock: the age-dependent version of the same process.

Each cell lives for a random time, then reproduces by the same offspring law.
With every lifespan exactly 1, clock time 2.5 sits inside generation 2, so the
mean counts must match the discrete mean matrix squared.  Random lifespans
break that link while keeping the generation structure underneath.
"""

import numpy as np

from branchfreq.moments import mean_matrix_power
from branchfreq.process_model import LifespanLaw, example2_spec, offspring_moments
from branchfreq.simulator import make_rng, simulate_continuous_clone


def clone_means(lifespan, t_real, n=10_000, seed=6):
    spec = example2_spec(0.25, 0.40, 0.35, lifespans=[lifespan] * 2)
    rng = make_rng(seed)
    counts = np.array([simulate_continuous_clone(spec, t_real, rng) for _ in range(n)])
    return counts.mean(axis=0), counts.std(axis=0, ddof=1) / np.sqrt(n)


M, _ = offspring_moments(example2_spec(0.25, 0.40, 0.35))
print("discrete M^2 row for a progenitor ancestor:", mean_matrix_power(M, 2)[0])

mean, se = clone_means(LifespanLaw.deterministic(1.0), 2.5)
print("unit lifespans at t = 2.5:", mean.round(4), "+/-", se.round(4))

mean, se = clone_means(LifespanLaw.exponential(1.0), 2.5)
print("exponential lifespans at t = 2.5:", mean.round(4), "+/-", se.round(4))
