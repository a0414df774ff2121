"""Event-driven simulation of age-dependent (Bellman-Harris) clones."""

from __future__ import annotations

import heapq

import numpy as np

from ..errors import SpecError
from ..process_model import ProcessSpec
from .seeding import make_rng

MAX_CELLS = 10_000_000


def simulate_continuous_clone(
    spec: ProcessSpec, t_real: float, rng: np.random.Generator
) -> np.ndarray:
    """Counts of cells alive at clock time ``t_real`` in one clone.

    The ancestor is a newborn type-1 cell at time 0.  Each cell lives for a
    draw from its type's lifespan law and is replaced at death by a draw from
    its offspring law.  A cell dying exactly at ``t_real`` is counted as
    replaced.  Equal death times are processed in birth order.
    """
    if spec.time_mode != "continuous" or spec.lifespans is None:
        raise SpecError([("time_mode", "continuous simulation needs lifespans")])
    if t_real < 0:
        raise ValueError("t_real must be >= 0")
    laws = spec.offspring
    lives = spec.lifespans
    vectors = [law.vectors for law in laws]
    probs = [law.probs for law in laws]
    order = 0
    queue: list[tuple[float, int, int]] = [(lives[0].sample(rng), order, 0)]
    while queue and queue[0][0] <= t_real:
        death, _, kind = heapq.heappop(queue)
        atom = rng.choice(len(probs[kind]), p=probs[kind]) if len(probs[kind]) > 1 else 0
        for child_type, n in enumerate(vectors[kind][atom]):
            for _ in range(int(n)):
                order += 1
                heapq.heappush(queue, (death + lives[child_type].sample(rng), order, child_type))
        if len(queue) > MAX_CELLS:
            raise OverflowError(f"clone exceeded {MAX_CELLS} live cells")
    counts = np.zeros(spec.d, dtype=np.int64)
    for _, _, kind in queue:
        counts[kind] += 1
    return counts


def simulate_continuous_population(spec: ProcessSpec, N: int, t_real: float, seed: int) -> np.ndarray:
    """Sum of ``N`` independent clones sharing one generator stream."""
    rng = make_rng(seed)
    total = np.zeros(spec.d, dtype=np.int64)
    for _ in range(N):
        total += simulate_continuous_clone(spec, t_real, rng)
    return total
