from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from branchfreq.errors import MomentOverflowError, ParameterError
from branchfreq.moments import (
    example2_closed_forms,
    extinction_probability,
    iter_moment_tables,
    mean_matrix_power,
    moment_table,
    second_moments_recurrence,
)
from branchfreq.process_model import ProcessSpec, example2_spec, offspring_moments
from branchfreq.selftest import random_small_spec
from branchfreq.simulator import brute_force_distribution

EX2_M = np.array([[0.8, 0.35], [0.0, 0.0]])


def test_mean_matrix_power():
    np.testing.assert_allclose(mean_matrix_power(EX2_M, 2), [[0.64, 0.28], [0, 0]], atol=1e-15)
    np.testing.assert_array_equal(mean_matrix_power(EX2_M, 0), np.eye(2))
    np.testing.assert_array_equal(mean_matrix_power([[1.0]], 7), [[1.0]])


def test_overflow_guard():
    with pytest.raises(MomentOverflowError):
        mean_matrix_power([[10.0]], 400)
    spec = ProcessSpec.build([[(1.0, (10,))]])
    with pytest.raises(MomentOverflowError):
        moment_table(spec, 200)


def test_recurrence_example2(ex2):
    M, B = offspring_moments(ex2)
    # exact enumeration with p1 = 2/5, p2 = 7/20 gives 144/125
    assert second_moments_recurrence(M, B, 2)[0, 0, 0] == pytest.approx(float(Fraction(144, 125)), abs=1e-15)


def test_recurrence_deterministic(identity_spec):
    M, B = offspring_moments(identity_spec)
    for t in range(1, 6):
        assert second_moments_recurrence(M, B, t)[0, 0, 0] == 0.0


def test_binary_fission_is_deterministic(fission):
    for t in range(1, 8):
        tb = moment_table(fission, t)
        assert tb.fact2[0, 0, 0] == 2.0**t * (2.0**t - 1)
        assert tb.sigma2[0] == 0.0
        assert not tb.corr_defined[0, 0]


def test_moment_table_generation1(ex2):
    tb = moment_table(ex2, 1)
    assert tb.sigma2[0] == pytest.approx(0.96, abs=1e-15)
    assert tb.sigma2[1] == pytest.approx(0.35 * 0.65, abs=1e-15)
    assert tb.cov[0, 1] == pytest.approx(-0.28, abs=1e-15)
    np.testing.assert_allclose(tb.p, [0.6957, 0.3043], atol=5e-5)
    assert tb.M_tot == pytest.approx(1.15)


def test_moment_table_t0(ex2):
    tb = moment_table(ex2, 0)
    np.testing.assert_array_equal(tb.mean, np.eye(2))
    assert not tb.fact2.any() and not tb.cov.any()
    np.testing.assert_array_equal(tb.p, [1.0, 0.0])
    assert tb.q == 0.0


def test_p_constant_for_example2(ex2):
    ps = [tb.p[0] for tb in iter_moment_tables(ex2, 10)][1:]
    assert max(ps) - min(ps) <= 1e-12


def test_extinction_probability(ex2):
    assert extinction_probability(ex2, 1) == (0.25, 0.25)
    q2, q2N = extinction_probability(ex2, 2, 3)
    assert q2 == pytest.approx(0.625, abs=1e-15)
    assert q2N == q2**3
    assert extinction_probability(ex2, 0) == (0.0, 0.0)
    dead = example2_spec(1.0, 0.0, 0.0)
    assert extinction_probability(dead, 1, 10) == (1.0, 1.0)


def test_closed_forms_generation2():
    cf = example2_closed_forms(0.40, 0.35, 2)
    assert cf.m11 == pytest.approx(0.64, abs=1e-15)
    assert cf.m12 == pytest.approx(0.28, abs=1e-15)
    # exact enumeration values
    assert cf.b111 == pytest.approx(float(Fraction(144, 125)), abs=1e-14)
    assert cf.sigma1sq == pytest.approx(float(Fraction(864, 625)), abs=1e-14)
    assert cf.sigma2sq == pytest.approx(float(Fraction(749, 2500)), abs=1e-14)
    assert cf.C12 == pytest.approx(float(Fraction(28, 625)), abs=1e-14)
    assert cf.p == pytest.approx(0.8 / 1.15, abs=1e-15)


def test_closed_forms_special_cases():
    cf = example2_closed_forms(0.5, 0.0, 4)
    assert (cf.m11, cf.m12, cf.p) == (1.0, 0.0, 1.0)
    assert example2_closed_forms(0.40, 0.35, 1).sigma1sq == pytest.approx(4 * 0.4 * 0.6, abs=1e-15)
    with pytest.raises(ParameterError):
        example2_closed_forms(0.7, 0.5, 2)
    with pytest.raises(ParameterError):
        example2_closed_forms(0.4, 0.3, 0)


@pytest.mark.parametrize("p1", [0.1, 0.25, 0.5])
@pytest.mark.parametrize("p2", [0.05, 0.3, 0.45])
def test_closed_forms_match_pipeline(p1, p2):
    spec = example2_spec(1 - p1 - p2, p1, p2)
    for tb in list(iter_moment_tables(spec, 20))[1:]:
        cf = example2_closed_forms(p1, p2, tb.t)
        got = [tb.mean[0, 0], tb.mean[0, 1], tb.fact2[0, 0, 0], tb.fact2[0, 0, 1], tb.fact2[0, 1, 1], tb.sigma2[0], tb.sigma2[1], tb.cov[0, 1], tb.p[0]]
        ref = [cf.m11, cf.m12, cf.b111, cf.b112, cf.b122, cf.sigma1sq, cf.sigma2sq, cf.C12, cf.p]
        np.testing.assert_allclose(got, ref, rtol=0, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_oracle_equivalence_random_specs(seed):
    spec = random_small_spec(np.random.default_rng(seed))
    for t in (1, 2, 3):
        tb = moment_table(spec, t)
        for a in range(2):
            exact = brute_force_distribution(spec, t, ancestor=a)
            np.testing.assert_allclose(tb.mean[a], exact.mean(), atol=1e-10)
            np.testing.assert_allclose(tb.fact2[a], exact.fact2(), atol=1e-10)
        exact = brute_force_distribution(spec, t)
        np.testing.assert_allclose(tb.cov, exact.cov(), atol=1e-10)
        assert abs(tb.q - exact.extinction()) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(1, 50))
def test_table_invariants(seed, t_max, N):
    spec = random_small_spec(np.random.default_rng(seed))
    prev_q = 0.0
    for tb in iter_moment_tables(spec, t_max, N):
        assert np.array_equal(tb.cov, tb.cov.T)
        np.testing.assert_array_equal(np.diag(tb.cov), tb.sigma2)
        r = tb.corr[tb.corr_defined]
        assert np.all(np.abs(r) <= 1 + 1e-12)
        assert np.all(np.diag(tb.corr)[np.diag(tb.corr_defined)] == 1.0)
        if tb.M_tot > 0:
            assert np.all(tb.p >= 0)
            assert abs(tb.p.sum() - 1) <= 1e-12
        assert 0.0 <= tb.q <= 1.0
        assert tb.q >= prev_q - 1e-15
        assert tb.q_N == tb.q**N
        prev_q = tb.q
