import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import defining_sum, quadratic_estimator_variance
from szgd.errors import NonFiniteError, UnsupportedObjectiveError
from szgd.estimator import (
    EstimatorConfig,
    bias_bound_fourth,
    bias_bound_smooth,
    delta_schedule,
    delta_sequence,
    empirical_bias_variance,
    estimate_batch,
    estimate_gradient,
    estimate_gradient_sampled,
    variance_bound_fine,
    variance_bound_smooth,
)
from szgd.objectives import (
    Objective,
    PowerQuadratic,
    QuadraticForm,
    constant,
    linear,
    make_random_psd,
    norm_cubed,
    sqrt_abs,
)
from szgd.rng import RngStream
from szgd.stiefel import sample_stiefel, sample_stiefel_batch


class Counting(Objective):
    """Wraps an objective and counts every point it is evaluated at."""

    def __init__(self, inner: Objective):
        super().__init__(inner.name, inner.dimension, inner, batch_func=self._batch)
        self.inner = inner
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.inner(x)

    def _batch(self, X):
        self.calls += len(X)
        return self.inner.values(X)


# -- configuration and schedule ----------------------------------------------

@pytest.mark.parametrize("t,delta0,expected", [(0, 0.1, 0.1), (20, 0.1, 1e-5), (3, 1.0, 0.125)])
def test_delta_schedule_examples(t, delta0, expected):
    assert delta_schedule(t, EstimatorConfig(1, delta0, 1e-5)) == expected


def test_delta_schedule_halves_then_clamps():
    cfg = EstimatorConfig(2, 0.1, 1e-5)
    seq = delta_sequence(40, cfg)
    assert seq[0] == 0.1 and seq.min() == 1e-5
    free = seq > 1e-5
    np.testing.assert_array_equal(seq[1:][free[1:]], seq[:-1][free[1:]] / 2)


@pytest.mark.parametrize("kwargs", [dict(k=0), dict(k=1, delta0=1.5), dict(k=1, delta0=0.1, delta_floor=0.2),
                                    dict(k=1, delta_floor=0.0), dict(k=1.5)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        EstimatorConfig(**kwargs)


# -- estimator examples -------------------------------------------------------

def test_constant_objective_gives_zero():
    V = sample_stiefel(5, 3, RngStream(0))
    est = estimate_gradient(constant(5, 7.0), np.ones(5), 0.3, V)
    assert np.array_equal(est.vector, np.zeros(5))
    assert est.evals_used == 6 and est.k_used == 3


def test_linear_full_frame_is_exact():
    g = np.random.default_rng(1).standard_normal(8)
    for seed in range(5):
        V = sample_stiefel(8, 8, RngStream(seed))
        for delta in (1e-3, 0.5, 1.0):
            est = estimate_gradient(linear(g), np.zeros(8), delta, V)
            assert np.abs(est.vector - g).max() <= 1e-10


def test_squared_norm_closed_form(backend):
    n, k = 7, 3
    f = PowerQuadratic(QuadraticForm.identity(n), 1.0)
    x = np.random.default_rng(2).standard_normal(n)
    V = sample_stiefel(n, k, RngStream(2)).columns
    est = estimate_gradient(f, x, 0.01, V).vector
    np.testing.assert_allclose(est, (2 * n / k) * V @ (V.T @ x), atol=1e-9)
    np.testing.assert_allclose(est, defining_sum(f, x, 0.01, V), atol=1e-9)


def test_matches_defining_sum_on_nonquadratic(backend):
    f = PowerQuadratic(make_random_psd(6, 5.0, RngStream(3)), 0.75)
    x = np.random.default_rng(3).standard_normal(6)
    V = sample_stiefel(6, 4, RngStream(3)).columns
    np.testing.assert_allclose(estimate_gradient(f, x, 0.05, V).vector,
                               defining_sum(f, x, 0.05, V), rtol=1e-11, atol=1e-12)


def test_exactly_2k_evaluations():
    for k in (1, 4, 10):
        f = Counting(norm_cubed(10))
        estimate_gradient(f, np.ones(10), 0.1, sample_stiefel(10, k, RngStream(k)))
        assert f.calls == 2 * k


def test_nonfinite_probe_is_reported():
    f = Objective("explodes", 2, lambda x: math.inf if x[0] > 0.5 else 0.0)
    with pytest.raises(NonFiniteError) as info:
        estimate_gradient(f, np.array([0.45, 0.0]), 0.1, np.eye(2))
    assert info.value.probe[0] > 0.5


def test_sampled_overload_uses_stream():
    f = norm_cubed(4)
    a = estimate_gradient_sampled(f, np.ones(4), 0.1, 2, RngStream(5))
    b = estimate_gradient(f, np.ones(4), 0.1, sample_stiefel(4, 2, RngStream(5)))
    assert np.array_equal(a.vector, b.vector)


def test_batch_matches_single(backend):
    f = PowerQuadratic(make_random_psd(5, 5.0, RngStream(6)), 1.5)
    x = np.full(5, 0.3)
    frames = sample_stiefel_batch(5, 2, 30, RngStream(6))
    batch = estimate_batch(f, x, 0.1, frames)
    single = np.stack([estimate_gradient(f, x, 0.1, F).vector for F in frames])
    np.testing.assert_allclose(batch, single, rtol=1e-12, atol=1e-14)


def test_batch_generic_objective_matches_kernel_path():
    base = PowerQuadratic(make_random_psd(5, 5.0, RngStream(7)), 1.5)
    wrapped = Counting(base)
    frames = sample_stiefel_batch(5, 3, 10, RngStream(7))
    a = estimate_batch(base, np.ones(5), 0.1, frames)
    b = estimate_batch(wrapped, np.ones(5), 0.1, frames)
    np.testing.assert_allclose(a, b, rtol=1e-11)
    assert wrapped.calls == 10 * 6


# -- properties ---------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), a=st.floats(-3, 3), b=st.floats(-3, 3), data=st.data())
def test_linearity_in_objective(seed, a, b, data):
    n = 5
    k = data.draw(st.integers(1, n))
    f = PowerQuadratic(make_random_psd(n, 5.0, RngStream(seed)), 1.5)
    g = norm_cubed(n)
    h = Objective("combo", n, lambda x: a * f(x) + b * g(x))
    x = np.random.default_rng(seed).standard_normal(n)
    V = sample_stiefel(n, k, RngStream(seed))
    lhs = estimate_gradient(h, x, 0.1, V).vector
    rhs = a * estimate_gradient(f, x, 0.1, V).vector + b * estimate_gradient(g, x, 0.1, V).vector
    scale = 1.0 + np.abs(lhs).max()
    assert np.abs(lhs - rhs).max() <= 1e-10 * scale


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), data=st.data())
def test_column_sign_invariance(seed, data):
    n = 6
    k = data.draw(st.integers(1, n))
    col = data.draw(st.integers(0, k - 1))
    f = PowerQuadratic(make_random_psd(n, 5.0, RngStream(seed)), 0.75)
    x = np.random.default_rng(seed).standard_normal(n)
    V = sample_stiefel(n, k, RngStream(seed))
    a = estimate_gradient(f, x, 0.05, V).vector
    b = estimate_gradient(f, x, 0.05, V.flip(col)).vector
    assert np.abs(a - b).max() <= 1e-12 * max(1.0, np.abs(a).max())


# -- bound formulas -----------------------------------------------------------

def test_bias_bound_smooth_examples():
    assert bias_bound_smooth(2, 30, 0.1) == pytest.approx(6 / 31)
    assert bias_bound_smooth(2, 30, 0.0) == 0.0
    assert bias_bound_smooth(1, 1, 1) == 0.5


def test_bias_bound_fourth_examples():
    assert bias_bound_fourth(0.0, 0.0, 5, 0.3) == 0.0
    for n in (1, 4, 30):
        assert bias_bound_fourth(2.0 * n, 0.0, n, 0.1) == pytest.approx(0.01)


def test_variance_bound_smooth_examples():
    L, n, delta = 1.7, 12, 0.05
    assert variance_bound_smooth(L, n, n, delta, 3.0) == pytest.approx(4 * L**2 * n * delta**2 / 3)
    assert variance_bound_smooth(2, 30, 10, 0.01, 1) == pytest.approx(
        2 + 0.08 / math.sqrt(3) * 60 + 0.048, rel=1e-12)
    assert variance_bound_smooth(2, 30, 10, 0.01, 1) == pytest.approx(4.81928, abs=1e-5)
    assert variance_bound_smooth(5, 3, 1, 0.0, 1) == 2.0


def test_variance_bound_fine_examples():
    assert variance_bound_fine(0.0, 9, 3, 0.2, 2.0) == pytest.approx((9 / 3 - 1) * 4)
    assert variance_bound_fine(0.0, 9, 9, 0.2, 2.0) == 0.0
    assert variance_bound_fine(6, 4, 2, 0.5, 2) == pytest.approx(8.5)


def test_bounds_reject_bad_k():
    with pytest.raises(ValueError):
        variance_bound_smooth(1, 3, 4, 0.1, 1)
    with pytest.raises(ValueError):
        variance_bound_fine(1, 3, 0, 0.1, 1)


# -- Monte Carlo --------------------------------------------------------------

def test_quadratic_unit_vector_example():
    n = 5
    f = PowerQuadratic(QuadraticForm.identity(n), 1.0)
    x = np.eye(n)[0]
    bv = empirical_bias_variance(f, x, 0.01, n, 100_000, RngStream(8))
    assert bv.bias_norm <= 3 * bv.bias_norm_se + 1e-10 * np.linalg.norm(bv.gradient)
    assert bv.variance <= variance_bound_smooth(2.0, n, n, 0.01, 2.0) + 3 * bv.variance_se


@pytest.mark.parametrize("k", [1, 3, 7])
def test_quadratic_variance_matches_exact_oracle(k):
    n = 7
    f = PowerQuadratic(make_random_psd(n, 5.0, RngStream(9)), 1.0)
    x = np.random.default_rng(9).standard_normal(n)
    bv = empirical_bias_variance(f, x, 0.1, k, 50_000, RngStream(10 + k))
    exact = quadratic_estimator_variance(n, k, f.gradient(x))
    tol = 4 * bv.variance_se + 1e-9 * max(1.0, exact)
    assert abs(bv.variance - exact) <= tol


def test_constant_objective_statistics_are_zero():
    bv = empirical_bias_variance(constant(4, 3.0), np.ones(4), 0.1, 2, 1000, RngStream(11))
    assert bv.bias_norm == 0.0 and bv.variance == 0.0


def test_linear_full_frame_statistics_vanish():
    g = np.arange(1.0, 5.0)
    bv = empirical_bias_variance(linear(g), np.zeros(4), 0.1, 4, 2000, RngStream(12))
    assert bv.bias_norm <= 1e-9
    assert bv.variance <= 1e-18


def test_monte_carlo_requires_gradient():
    with pytest.raises(UnsupportedObjectiveError):
        empirical_bias_variance(sqrt_abs(), np.zeros(1), 0.1, 1, 10, RngStream(0))
    with pytest.raises(ValueError):
        empirical_bias_variance(norm_cubed(2), np.ones(2), 0.1, 1, 1, RngStream(0))
