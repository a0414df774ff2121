import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from branchfreq.asymptotics import s_squared_example2
from branchfreq.errors import InfeasibleInitError, NonConvergenceError, ParameterError
from branchfreq.inference import (
    Example2Family,
    GeneralBGW2Family,
    Observation,
    ObservationSet,
    example2_loglik,
    format_observations,
    log_likelihood,
    mle_fit,
    read_observations,
    stationarity_gradient,
    synthesize_observations,
)
from branchfreq.process_model import example2_spec

P = 0.8 / 1.15


def obs_at(t, N, z):
    return Observation(t, N, np.array([z, 1 - z]))


def random_obs(rng, n=6, p1=0.4, p2=0.35):
    r = 2 * p1 / (2 * p1 + p2)
    out = []
    for _ in range(n):
        t = int(rng.integers(1, 12))
        N = int(rng.integers(50, 20_000))
        z = float(np.clip(r + math.sqrt(s_squared_example2(p1, p2, t, N)) * rng.normal(), 0, 1))
        out.append(obs_at(t, N, z))
    return ObservationSet.build(out)


def test_synthesize_design(ex2):
    obs = synthesize_observations(ex2, [(t, 5000) for t in range(1, 11)], seed=1)
    assert len(obs) == 10
    assert all(abs(o.fractions.sum() - 1) <= 1e-12 for o in obs)
    assert [o.t for o in obs] == list(range(1, 11))


def test_synthesize_extinct_cohorts_dropped():
    with pytest.warns(UserWarning):
        obs = synthesize_observations(example2_spec(1.0, 0.0, 0.0), [(1, 10), (2, 10)], seed=0)
    assert len(obs) == 0 and len(obs.excluded) == 2


def test_synthesize_large_cohorts_near_mean(ex2):
    design = [(t, 100_000) for t in range(1, 6)]
    obs = synthesize_observations(ex2, design, seed=77)
    for o in obs:
        assert abs(o.fractions[0] - P) <= 5 * math.sqrt(s_squared_example2(0.4, 0.35, o.t, o.N))


def test_loglik_at_mean(ex2):
    obs = ObservationSet.build([obs_at(2, 1000, P)])
    s2 = s_squared_example2(0.4, 0.35, 2, 1000)
    expected = -0.5 * math.log(2 * math.pi * s2)
    assert log_likelihood(obs, ex2) == pytest.approx(expected, abs=1e-12)
    assert example2_loglik(0.4, 0.35, obs) == pytest.approx(expected, abs=1e-12)


def test_doubling_N(ex2):
    a = ObservationSet.build([obs_at(3, 500, 0.71)])
    b = ObservationSet.build([obs_at(3, 1000, 0.71)])
    s2 = s_squared_example2(0.4, 0.35, 3, 500)
    quad = (0.71 - P) ** 2 / s2
    diff = log_likelihood(b, ex2) - log_likelihood(a, ex2)
    # log S^2 shifts by -log 2, quadratic term doubles
    assert diff == pytest.approx(0.5 * math.log(2) - 0.5 * quad, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.6), st.floats(0.05, 0.35))
def test_generic_and_closed_paths_agree(seed, p1, p2):
    rng = np.random.default_rng(seed)
    obs = random_obs(rng, p1=p1, p2=p2)
    spec = example2_spec(1 - p1 - p2, p1, p2)
    assert abs(log_likelihood(obs, spec) - example2_loglik(p1, p2, obs)) <= 1e-12 * max(1.0, abs(example2_loglik(p1, p2, obs)))


def test_order_invariance_and_additivity(rng, ex2):
    a, b = random_obs(rng), random_obs(rng)
    shuffled = ObservationSet.build(list(reversed(a.observations)))
    assert example2_loglik(0.4, 0.35, shuffled) == pytest.approx(example2_loglik(0.4, 0.35, a), abs=1e-12)
    la, lb, lab = (log_likelihood(x, ex2) for x in (a, b, a.union(b)))
    assert lab == pytest.approx(la + lb, abs=1e-10)


def test_family_parametrized_loglik(rng, ex2):
    obs = random_obs(rng)
    fam = Example2Family()
    assert log_likelihood(obs, [0.4, 0.35], fam) == log_likelihood(obs, ex2)
    x = fam.to_unconstrained([0.4, 0.35])
    np.testing.assert_allclose(fam.from_unconstrained(x), [0.4, 0.35], atol=1e-15)


def test_example2_loglik_rejects_bad_params(rng):
    with pytest.raises(ParameterError):
        example2_loglik(0.8, 0.4, random_obs(rng))


def test_deterministic_component_dropped():
    spec = example2_spec(0.3, 0.7, 0.0)
    assert log_likelihood(ObservationSet.build([obs_at(2, 100, 1.0)]), spec) == 0.0
    assert log_likelihood(ObservationSet.build([obs_at(2, 100, 0.9)]), spec) == -math.inf


def test_observation_validation():
    with pytest.raises(ParameterError):
        Observation(1, 10, np.array([0.5, 0.6]))
    with pytest.raises(ParameterError):
        Observation(1, 0, np.array([0.5, 0.5]))
    o = Observation.from_counts(2, 10, [30, 10])
    np.testing.assert_allclose(o.fractions, [0.75, 0.25])


def test_csv_roundtrip(tmp_path, ex2):
    obs = synthesize_observations(ex2, [(t, 2000) for t in (1, 2, 3)], seed=3)
    for counts in (False, True):
        path = tmp_path / f"obs_{counts}.csv"
        path.write_text("# comment\n" + format_observations(obs, counts=counts))
        back = read_observations(path, counts=counts)
        assert [o.t for o in back] == [1, 2, 3]
        for a, b in zip(obs, back):
            np.testing.assert_array_equal(a.fractions, b.fractions)


def test_fit_fixed_seed_recovery(ex2):
    obs = synthesize_observations(ex2, [(t, 5000) for t in range(1, 11)], seed=42)
    res = mle_fit(obs, "example2", [0.3, 0.3])
    assert res.converged
    assert abs(res.params[0] - 0.40) <= 0.03 and abs(res.params[1] - 0.35) <= 0.03
    assert res.grad_norm <= 1e-4 * (1 + abs(res.loglik))
    grad = stationarity_gradient(obs, Example2Family(), x=res.unconstrained)
    assert np.linalg.norm(stationarity_gradient(obs, Example2Family(), res.params)) <= 1e-4 * (1 + abs(res.loglik))
    assert np.linalg.norm(grad) == pytest.approx(res.grad_norm)


def _perfect_fit(N):
    obs = ObservationSet.build([obs_at(t, N, P) for t in range(1, 11)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = mle_fit(obs, "example2", [0.3, 0.3])
    return 2 * res.params[0] / (2 * res.params[0] + res.params[1])


def test_fit_perfect_data_matches_mean():
    # The supremum sits on p0 = 0 where the log-variance term shifts the
    # fitted ratio by O(1/N); at N_k = 1e5 that shift is below 1e-4.
    assert abs(_perfect_fit(100_000) - P) <= 1e-4
    shift_small, shift_large = _perfect_fit(5000) - P, _perfect_fit(50_000) - P
    assert shift_small * 5000 == pytest.approx(shift_large * 50_000, rel=0.01)


def test_fit_boundary_warning():
    spec = example2_spec(0.2, 0.8, 0.0)
    obs = ObservationSet.build([obs_at(t, 5000, 1.0 - 1e-6) for t in range(1, 6)])
    with pytest.warns(UserWarning, match="boundary"):
        res = mle_fit(obs, "example2", [0.5, 0.2])
    assert res.params[1] < 1e-3


def test_fit_trace_and_errors(rng):
    obs = random_obs(rng)
    res = mle_fit(obs, Example2Family(), [0.3, 0.3], trace=True)
    assert len(res.param_trace) >= 2
    np.testing.assert_array_equal(res.param_trace[0], [0.3, 0.3])
    with pytest.raises(InfeasibleInitError):
        mle_fit(obs, "example2", [0.7, 0.4])
    with pytest.raises(NonConvergenceError):
        mle_fit(obs, "example2", [0.3, 0.3], max_iter=3)


def test_general_family_fit():
    sup = [[(0, 0), (2, 0), (0, 1)], [(0, 0)]]
    fam = GeneralBGW2Family(sup)
    truth = np.array([0.25, 0.40, 0.35, 1.0])
    spec = fam.to_spec(truth)
    assert spec == example2_spec(0.25, 0.40, 0.35) or spec.offspring == example2_spec(0.25, 0.40, 0.35).offspring
    obs = synthesize_observations(spec, [(t, 5000) for t in range(1, 11)], seed=42)
    res = mle_fit(obs, fam, [0.3, 0.3, 0.4, 1.0])
    ex = mle_fit(obs, "example2", [0.3, 0.3])
    np.testing.assert_allclose(res.params[1:3], ex.params, atol=1e-4)
    assert res.loglik == pytest.approx(ex.loglik, abs=1e-8)
