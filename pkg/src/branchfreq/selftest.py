"""Fast internal-consistency checks run by ``branchfreq selftest``."""

from __future__ import annotations

import numpy as np

from .asymptotics import (
    a_matrix,
    delta_distribution,
    limit_cov_closed,
    limit_cov_via_A,
    s_squared_example2,
)
from .inference import Observation, ObservationSet, example2_loglik, log_likelihood
from .moments import example2_closed_forms, moment_table
from .process_model import ProcessSpec, example2_spec, offspring_moments, offspring_pgf_eval
from .simulator.enumeration import brute_force_distribution


def random_small_spec(rng: np.random.Generator) -> ProcessSpec:
    """Two-type spec inside the enumeration oracle's domain."""
    pool = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    laws = []
    for _ in range(2):
        k = int(rng.integers(1, 4))
        pick = rng.choice(len(pool), size=k, replace=False)
        w = rng.dirichlet(np.ones(k))
        laws.append([(float(p), pool[j]) for p, j in zip(w, pick)])
    return ProcessSpec.build(laws)


def check_pgf_derivatives(spec: ProcessSpec) -> float:
    M, B = offspring_moments(spec)
    one = np.ones(spec.d)
    worst = 0.0
    h = 1e-5
    for i in range(spec.d):
        worst = max(worst, abs(offspring_pgf_eval(spec, i, one) - 1.0))
        for j in range(spec.d):
            e = np.zeros(spec.d)
            e[j] = h
            fd = (offspring_pgf_eval(spec, i, one + e) - offspring_pgf_eval(spec, i, one - e)) / (2 * h)
            worst = max(worst, abs(fd - M[i, j]))
    return worst


def check_oracle(spec: ProcessSpec, t_max: int = 3) -> float:
    worst = 0.0
    for t in range(1, t_max + 1):
        table = moment_table(spec, t)
        for a in range(spec.d):
            exact = brute_force_distribution(spec, t, ancestor=a)
            worst = max(worst, np.max(np.abs(exact.mean() - table.mean[a])))
            worst = max(worst, np.max(np.abs(exact.fact2() - table.fact2[a])))
        exact = brute_force_distribution(spec, t)
        worst = max(worst, np.max(np.abs(exact.cov() - table.cov)))
        worst = max(worst, abs(exact.extinction() - table.q))
    return float(worst)


def check_closed_forms(p1: float, p2: float, t_max: int = 20) -> float:
    spec = example2_spec(1 - p1 - p2, p1, p2)
    worst = 0.0
    for t in range(1, t_max + 1):
        tb = moment_table(spec, t)
        cf = example2_closed_forms(p1, p2, t)
        got = [tb.mean[0, 0], tb.mean[0, 1], tb.fact2[0, 0, 0], tb.sigma2[0], tb.sigma2[1], tb.cov[0, 1], tb.p[0]]
        ref = [cf.m11, cf.m12, cf.b111, cf.sigma1sq, cf.sigma2sq, cf.C12, cf.p]
        worst = max(worst, max(abs(a - b) for a, b in zip(got, ref)))
    return worst


def check_cov_identity(rng: np.random.Generator, n: int = 50) -> float:
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 5))
        X = rng.normal(size=(d, d))
        C = X @ X.T + 0.1 * np.eye(d)
        sig = np.sqrt(np.diag(C))
        R = C / np.outer(sig, sig)
        p = rng.dirichlet(np.ones(d))
        via_a = limit_cov_via_A(a_matrix(sig, p), R, d)
        closed = limit_cov_closed(C, p, d)
        worst = max(worst, np.max(np.abs(via_a - closed)), np.max(np.abs(closed.sum(axis=1))))
    return float(worst)


def check_likelihood_paths(p1: float = 0.4, p2: float = 0.35) -> float:
    spec = example2_spec(1 - p1 - p2, p1, p2)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(5):
        obs = []
        for t in range(1, 6):
            N = int(rng.integers(100, 10_000))
            s = np.sqrt(s_squared_example2(p1, p2, t, N))
            z = float(np.clip(2 * p1 / (2 * p1 + p2) + s * rng.normal(), 0.0, 1.0))
            obs.append(Observation(t, N, np.array([z, 1 - z])))
        obs = ObservationSet.build(obs)
        worst = max(worst, abs(log_likelihood(obs, spec) - example2_loglik(p1, p2, obs)))
        for t in (1, 5):
            g = delta_distribution(moment_table(spec, t), 1000)
            ref = s_squared_example2(p1, p2, t, 1000)
            worst = max(worst, abs(g.cov_delta[0, 0] - ref) / ref)
    return worst


def run(out=print) -> bool:
    rng = np.random.default_rng(20240101)
    ex2 = example2_spec(0.25, 0.40, 0.35)
    checks = [
        ("pgf normalization and first derivatives", check_pgf_derivatives(ex2), 1e-6),
        ("oracle equivalence, progenitor model", check_oracle(ex2), 1e-10),
        ("oracle equivalence, random small specs", max(check_oracle(random_small_spec(rng)) for _ in range(5)), 1e-10),
        ("closed-form moments vs recurrence", max(check_closed_forms(a, b) for a in (0.1, 0.3, 0.5) for b in (0.1, 0.3)), 1e-12),
        ("limit covariance formula identity", check_cov_identity(rng), 1e-10),
        ("likelihood closed form vs generic", check_likelihood_paths(), 1e-12),
    ]
    ok = True
    for name, err, tol in checks:
        passed = bool(err <= tol)
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'}  {name}  (max error {err:.3e}, tol {tol:g})")
    return ok
