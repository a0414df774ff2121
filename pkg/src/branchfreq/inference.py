"""Asymptotic maximum-likelihood fitting from serial-sacrifice frequencies.

Each cohort of ``N_k`` ancestors is observed once, at ``t_k``, through its
type frequencies.  The cohort contributes the log-density of the large-``N``
Gaussian approximation to those frequencies (the last type is dropped because
frequencies sum to one), and cohorts are independent, so the log-likelihood is
the sum of the contributions.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .asymptotics import check_nondegenerate, delta_distribution, s_squared_example2
from .errors import (
    AllExtinctError,
    BranchFreqError,
    InfeasibleInitError,
    NonConvergenceError,
    NonFiniteError,
    ParameterError,
)
from .moments import iter_moment_tables
from .process_model import ProcessSpec, example2_spec
from .simulator.continuous import simulate_continuous_population
from .simulator.discrete import fractions, simulate_population
from .simulator.seeding import mix64, replicate_rng

log = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
DROP_VARIANCE = 1e-14


# Observations -----------------------------------------------------------------


@dataclass(frozen=True)
class Observation:
    t: float
    N: int
    fractions: np.ndarray
    counts: np.ndarray | None = None

    @classmethod
    def from_counts(cls, t, N, counts) -> "Observation":
        counts = np.asarray(counts, dtype=np.int64)
        total = counts.sum()
        if total <= 0:
            raise AllExtinctError(f"cohort at t={t} has no cells")
        return cls(t=t, N=int(N), fractions=counts / total, counts=counts)

    def __post_init__(self):
        frac = np.asarray(self.fractions, dtype=float)
        if self.N < 1:
            raise ParameterError(f"N must be >= 1, got {self.N}")
        if np.any(frac < 0) or abs(frac.sum() - 1.0) > 1e-9:
            raise ParameterError(f"fractions at t={self.t} must be nonnegative and sum to 1")
        object.__setattr__(self, "fractions", frac)


@dataclass(frozen=True)
class ObservationSet:
    observations: tuple[Observation, ...]
    d: int
    excluded: tuple[tuple[float, int], ...] = ()

    def __post_init__(self):
        ts = [o.t for o in self.observations]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ParameterError("observations must be ordered by nondecreasing t")
        if any(o.fractions.size != self.d for o in self.observations):
            raise ParameterError(f"every observation needs {self.d} fractions")

    @classmethod
    def build(cls, observations: Iterable[Observation], d: int | None = None) -> "ObservationSet":
        obs = sorted(observations, key=lambda o: o.t)
        if d is None:
            if not obs:
                raise ParameterError("cannot infer d from an empty observation list")
            d = obs[0].fractions.size
        return cls(tuple(obs), d)

    def __len__(self) -> int:
        return len(self.observations)

    def __iter__(self):
        return iter(self.observations)

    def union(self, other: "ObservationSet") -> "ObservationSet":
        return ObservationSet.build(self.observations + other.observations, self.d)


def synthesize_observations(
    spec: ProcessSpec, design: Sequence[tuple[float, int]], seed: int
) -> ObservationSet:
    """One independent simulated cohort per ``(t_k, N_k)`` design point.

    Cohort ``k`` uses the generator derived from ``(seed, k)``.  Extinct
    cohorts are dropped with a warning and listed in ``excluded``.
    """
    kept, dropped = [], []
    for k, (t_k, n_k) in enumerate(design):
        if spec.time_mode == "discrete":
            counts = simulate_population(spec, int(n_k), int(t_k), rng=replicate_rng(seed, k)).counts
        else:
            counts = simulate_continuous_population(spec, int(n_k), float(t_k), mix64(seed, k))
        if counts.sum() == 0:
            warnings.warn(f"cohort {k + 1} (t={t_k}, N={n_k}) went extinct; excluded", stacklevel=2)
            dropped.append((t_k, int(n_k)))
            continue
        kept.append(Observation.from_counts(t_k, n_k, counts))
    obs = sorted(kept, key=lambda o: o.t)
    return ObservationSet(tuple(obs), spec.d, tuple(dropped))


def read_observations(path, counts: bool = False) -> ObservationSet:
    prefix = "z_" if counts else "delta_"
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    header, body = rows[0], [r for r in rows[1:] if r]
    cols = [i for i, name in enumerate(header) if name.startswith(prefix)]
    if header[:2] != ["t", "N"] or not cols:
        raise ParameterError(f"expected header t,N,{prefix}1..{prefix}d, got {','.join(header)}")
    out = []
    for r in body:
        t, n = float(r[0]), int(r[1])
        t = int(t) if t.is_integer() else t
        vals = [r[i] for i in cols]
        if counts:
            out.append(Observation.from_counts(t, n, [int(v) for v in vals]))
        else:
            out.append(Observation(t, n, np.array([float(v) for v in vals])))
    return ObservationSet.build(out, len(cols))


def format_observations(obs: ObservationSet, counts: bool = False, fmt=repr) -> str:
    d = obs.d
    prefix = "z_" if counts else "delta_"
    lines = [",".join(["t", "N"] + [f"{prefix}{j + 1}" for j in range(d)])]
    for o in obs:
        vals = o.counts if counts else o.fractions
        if vals is None:
            raise ParameterError("observation carries no counts")
        lines.append(",".join([str(o.t), str(o.N)] + [fmt(v) for v in vals.tolist()]))
    return "\n".join(lines) + "\n"


# Model families -----------------------------------------------------------------


def _softmax_ref(x: np.ndarray) -> np.ndarray:
    # probabilities with a reference atom of logit 0 in front
    z = np.concatenate([[0.0], x])
    z = np.exp(z - z.max())
    return z / z.sum()


class Example2Family:
    """Parameters ``(p1, p2)``; ``p0 = 1 - p1 - p2`` is the reference atom."""

    name = "example2"
    param_names = ("p1", "p2")

    def to_spec(self, params) -> ProcessSpec:
        p1, p2 = (float(v) for v in params)
        return example2_spec(1.0 - p1 - p2, p1, p2)

    def is_feasible(self, params) -> bool:
        p1, p2 = (float(v) for v in params)
        return p1 > 0 and p2 > 0 and p1 + p2 < 1

    def to_unconstrained(self, params) -> np.ndarray:
        p1, p2 = (float(v) for v in params)
        p0 = 1.0 - p1 - p2
        return np.array([math.log(p1 / p0), math.log(p2 / p0)])

    def from_unconstrained(self, x) -> np.ndarray:
        probs = _softmax_ref(np.asarray(x, dtype=float))
        return probs[1:]

    def atom_probabilities(self, params) -> np.ndarray:
        p1, p2 = (float(v) for v in params)
        return np.array([1.0 - p1 - p2, p1, p2])


class GeneralBGW2Family:
    """Two-type process with fixed offspring supports and free atom weights.

    ``params`` is the concatenation of both types' full probability vectors,
    in the order of ``supports``.
    """

    name = "general_bgw_d2"

    def __init__(self, supports: Sequence[Sequence[Sequence[int]]]):
        if len(supports) != 2:
            raise ParameterError("general_bgw_d2 needs exactly two supports")
        self.supports = [[tuple(int(k) for k in n) for n in sup] for sup in supports]
        self.sizes = [len(s) for s in self.supports]
        self.param_names = tuple(
            f"p[{i + 1}]{list(n)}" for i, sup in enumerate(self.supports) for n in sup
        )

    def _split(self, params):
        params = np.asarray(params, dtype=float)
        a = self.sizes[0]
        return params[:a], params[a:]

    def to_spec(self, params) -> ProcessSpec:
        laws = [list(zip(probs.tolist(), sup)) for probs, sup in zip(self._split(params), self.supports)]
        return ProcessSpec.build(laws)

    def is_feasible(self, params) -> bool:
        for probs in self._split(params):
            if np.any(probs <= 0) or abs(probs.sum() - 1.0) > 1e-9:
                return False
        return True

    def to_unconstrained(self, params) -> np.ndarray:
        return np.concatenate([np.log(p[1:] / p[0]) for p in self._split(params)])

    def from_unconstrained(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a = self.sizes[0] - 1
        return np.concatenate([_softmax_ref(x[:a]), _softmax_ref(x[a:])])

    def atom_probabilities(self, params) -> np.ndarray:
        return np.asarray(params, dtype=float)


def get_family(name: str, supports=None):
    if name == "example2":
        return Example2Family()
    if name == "general_bgw_d2":
        if supports is None:
            raise ParameterError("general_bgw_d2 requires offspring supports")
        return GeneralBGW2Family(supports)
    raise ParameterError(f"unknown model family {name!r}")


# Likelihood ----------------------------------------------------------------------


def _gaussian_logpdf(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> float:
    k = x.size
    chol = np.linalg.cholesky(cov)
    z = np.linalg.solve(chol, x - mean)
    return -0.5 * (k * LOG_2PI + 2.0 * float(np.log(np.diag(chol)).sum()) + float(z @ z))


def cohort_loglik(obs: Observation, table) -> float:
    g = delta_distribution(table, obs.N)
    var = np.diag(g.cov_delta)
    if np.any(var < -DROP_VARIANCE):
        raise NonFiniteError(f"negative limit variance at t={obs.t}")
    idx = np.asarray(g.index)
    keep = var >= DROP_VARIANCE
    x = obs.fractions[idx]
    fixed = ~keep
    if np.any(np.abs(x[fixed] - g.mean[fixed]) > 1e-9):
        return -math.inf
    if not keep.any():
        return 0.0
    cov = g.cov_delta[np.ix_(keep, keep)]
    check_nondegenerate(cov)
    return _gaussian_logpdf(x[keep], g.mean[keep], cov)


def log_likelihood(obs: ObservationSet, model, family=None) -> float:
    """Sum of per-cohort Gaussian log-densities.

    ``model`` is a :class:`ProcessSpec`, or a parameter vector of ``family``.
    """
    spec = model if family is None else family.to_spec(model)
    if len(obs) == 0:
        return 0.0
    ts = sorted({int(o.t) for o in obs})
    if any(float(o.t) != int(o.t) for o in obs):
        raise ParameterError("generation-time likelihood needs integer t")
    wanted = set(ts)
    tables = {tb.t: tb for tb in iter_moment_tables(spec, ts[-1]) if tb.t in wanted}
    return math.fsum(cohort_loglik(o, tables[int(o.t)]) for o in obs)


def example2_loglik(p1: float, p2: float, obs: ObservationSet) -> float:
    """Closed-form likelihood of the progenitor model.

    The mean progenitor frequency is the constant ``2 p1 / (2 p1 + p2)`` and
    the variance is :func:`s_squared_example2`.
    """
    if not (p1 > 0 and p2 > 0 and p1 + p2 <= 1 + 1e-12):
        raise ParameterError(f"need p1, p2 > 0 and p1 + p2 <= 1, got ({p1}, {p2})")
    if obs.d != 2:
        raise ParameterError("closed-form likelihood is for two types")
    r = 2 * p1 / (2 * p1 + p2)
    terms = []
    for o in obs:
        s2 = s_squared_example2(p1, p2, int(o.t), o.N)
        terms.append(-0.5 * (LOG_2PI + math.log(s2) + (o.fractions[0] - r) ** 2 / s2))
    return math.fsum(terms)


# Fitting ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    family: str
    params: np.ndarray
    param_names: tuple[str, ...]
    loglik: float
    converged: bool
    iterations: int
    evaluations: int
    unconstrained: np.ndarray
    grad_norm: float
    warnings: tuple[str, ...] = ()
    param_trace: tuple[np.ndarray, ...] | None = field(default=None, repr=False)


def _objective(obs, family):
    def f(x):
        try:
            val = log_likelihood(obs, family.from_unconstrained(x), family)
        except (BranchFreqError, np.linalg.LinAlgError, FloatingPointError):
            return math.inf
        return -val if math.isfinite(val) else math.inf

    return f


def stationarity_gradient(obs, family, params=None, step: float = 1e-6, *, x=None) -> np.ndarray:
    """Central-difference gradient of the log-likelihood in logit coordinates.

    Pass ``x`` (unconstrained coordinates) instead of ``params`` when the
    point is so close to the boundary that a reference weight rounds to 0.
    """
    f = _objective(obs, family)
    x = family.to_unconstrained(params) if x is None else np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        grad[j] = -(f(x + e) - f(x - e)) / (2 * step)
    return grad


def mle_fit(
    obs: ObservationSet,
    family,
    init,
    max_iter: int = 2000,
    trace: bool = False,
    xatol: float = 1e-8,
    fatol: float = 1e-10,
    restarts: int = 3,
    boundary_tol: float = 1e-3,
) -> FitResult:
    """Maximize the asymptotic log-likelihood with Nelder-Mead in logit space.

    The search is restarted from its own optimum (fresh simplex) up to
    ``restarts`` times while that still improves the objective; this guards
    against simplex collapse.  Raises :class:`NonConvergenceError` when the
    iteration budget runs out before the tolerances are met.
    """
    if isinstance(family, str):
        family = get_family(family)
    if len(obs) == 0:
        raise ParameterError("no observations to fit")
    init = np.asarray(init, dtype=float)
    if not family.is_feasible(init):
        raise InfeasibleInitError(f"initial point {init.tolist()} is not inside the parameter region")
    f = _objective(obs, family)
    x = family.to_unconstrained(init)
    if not math.isfinite(f(x)):
        raise InfeasibleInitError(f"log-likelihood is not finite at {init.tolist()}")
    path: list[np.ndarray] = [family.from_unconstrained(x)] if trace else []
    callback = (lambda xk: path.append(family.from_unconstrained(xk))) if trace else None
    iterations = evaluations = 0
    best = f(x)
    converged = False
    for attempt in range(restarts + 1):
        remaining = max_iter - iterations
        if remaining <= 0:
            break
        res = minimize(
            f,
            x,
            method="Nelder-Mead",
            callback=callback,
            options={"maxiter": remaining, "maxfev": 10 * max_iter, "xatol": xatol, "fatol": fatol},
        )
        iterations += int(res.nit)
        evaluations += int(res.nfev)
        converged = res.status == 0
        improved = best - res.fun
        if res.fun <= best:
            x, best = res.x, float(res.fun)
        if not converged or improved <= fatol:
            break
    if not converged:
        raise NonConvergenceError(
            f"Nelder-Mead did not converge within {max_iter} iterations (best loglik {-best:.6g})"
        )
    params = family.from_unconstrained(x)
    notes = []
    atoms = family.atom_probabilities(params)
    if atoms.min() < boundary_tol:
        msg = f"estimate is within {boundary_tol:g} of the parameter boundary: {params.tolist()}"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    grad = stationarity_gradient(obs, family, x=x)
    return FitResult(
        family=family.name,
        params=params,
        param_names=tuple(family.param_names),
        loglik=-best,
        converged=True,
        iterations=iterations,
        evaluations=evaluations,
        unconstrained=np.asarray(x),
        grad_norm=float(np.linalg.norm(grad)),
        warnings=tuple(notes),
        param_trace=tuple(path) if trace else None,
    )
