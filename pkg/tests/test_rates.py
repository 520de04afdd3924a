import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gd_half_quadratic, tail_sum_half_quadratic
from szgd.errors import DomainError
from szgd.objectives import scalar_quadratic
from szgd.optimizers import OptimConfig, run_gd
from szgd.rates import (
    RateFit,
    default_window,
    distance_series,
    fit_geometric,
    fit_power_law,
    predicted_exponents,
    tail_square_sums,
    tail_window,
)


def test_exact_half_powers():
    y = 0.5 ** np.arange(60)
    fit = fit_geometric(y, (0, 59))
    assert fit.parameter == pytest.approx(math.log(0.5), abs=1e-12)
    assert fit.r_squared >= 1 - 1e-12
    assert fit.base == pytest.approx(0.5)


def test_geometric_intercept():
    y = 3 * 0.9 ** np.arange(100)
    fit = fit_geometric(y, (0, 99))
    assert fit.parameter == pytest.approx(math.log(0.9), abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3), abs=1e-12)


def test_gd_on_half_quadratic_slope():
    lam, eta = 2.0, 0.1
    tr = run_gd(scalar_quadratic(lam), np.array([1.0]), OptimConfig(eta, 200))
    fit = fit_geometric(tr.f_values)
    assert fit.parameter == pytest.approx(2 * math.log(abs(1 - eta * lam)), rel=1e-10)


def test_power_law_examples():
    t = np.arange(1, 500, dtype=float)
    y = np.concatenate([[1.0], 3 * t**-2.0])
    fit = fit_power_law(y, (1, 499))
    assert fit.parameter == pytest.approx(-2.0, abs=1e-12)
    assert fit.r_squared >= 1 - 1e-12
    y = np.concatenate([[1.0], t**-0.5])
    assert fit_power_law(y, (1, 499)).parameter == pytest.approx(-0.5, abs=1e-12)


def test_power_law_needs_positive_times():
    with pytest.raises(ValueError):
        fit_power_law(np.ones(10), (0, 9))


def test_nonpositive_values_are_clipped_and_counted():
    y = 0.5 ** np.arange(20)
    y[[5, 9]] = 0.0
    fit = fit_geometric(y, (0, 19))
    assert fit.clip_count == 2 and fit.points == 18
    assert fit.parameter == pytest.approx(math.log(0.5))
    with pytest.raises(DomainError):
        fit_geometric(y, (0, 19), clip=False)
    kept = fit_geometric(y, (0, 19), exclude_clipped=False)
    assert kept.points == 20 and kept.clip_count == 2


def test_window_validation():
    y = np.ones(10)
    with pytest.raises(ValueError):
        fit_geometric(y, (3, 10))
    with pytest.raises(ValueError):
        fit_geometric(y, (5, 4))
    with pytest.raises(DomainError):
        fit_geometric(y, (3, 3))
    with pytest.raises(DomainError):
        fit_geometric(np.array([1.0, np.nan, 2.0]), (0, 2))


def test_default_burn_in_is_twenty_percent():
    assert default_window(101) == (20, 100)
    assert tail_window(2001, 0.5) == (1000, 2000)
    fit = fit_geometric(0.9 ** np.arange(101))
    assert fit.window == (20, 100)


def test_flat_series_has_unit_r_squared():
    fit = fit_geometric(np.full(10, 4.0), (0, 9))
    assert fit.parameter == 0.0 and fit.r_squared == 1.0


def test_explicit_times():
    t = np.arange(5, 200, dtype=float)
    fit = fit_power_law(2 * t**-1.5, times=t)
    assert fit.parameter == pytest.approx(-1.5, abs=1e-12)


def test_record_round_trip():
    fit = fit_power_law(np.arange(1, 50, dtype=float) ** -2.0, times=np.arange(1, 50))
    back = RateFit.from_record(fit.to_record())
    assert back == fit


@settings(max_examples=60, deadline=None)
@given(base=st.floats(0.05, 0.99), scale=st.floats(1e-3, 1e3), start=st.integers(0, 40))
def test_geometric_exact_recovery_and_window_shift(base, scale, start):
    y = scale * base ** np.arange(120)
    a = fit_geometric(y, (start, start + 60))
    b = fit_geometric(y, (start + 10, start + 70))
    assert a.r_squared >= 1 - 1e-10
    assert abs(a.parameter - math.log(base)) <= 1e-9
    assert abs(a.parameter - b.parameter) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(-4, -0.1), scale=st.floats(1e-3, 1e3), start=st.integers(1, 100))
def test_power_law_exact_recovery_and_window_shift(alpha, scale, start):
    t = np.arange(1, 400, dtype=float)
    y = np.concatenate([[1.0], scale * t**alpha])
    a = fit_power_law(y, (start, start + 200))
    b = fit_power_law(y, (start + 50, start + 250))
    assert a.r_squared >= 1 - 1e-10
    assert abs(a.parameter - alpha) <= 1e-9
    assert abs(a.parameter - b.parameter) <= 1e-9


def test_tail_sum_examples():
    np.testing.assert_array_equal(tail_square_sums([1, 1, 1]), [3, 2, 1])
    np.testing.assert_array_equal(tail_square_sums(np.zeros(5)), np.zeros(5))
    assert tail_square_sums([]).size == 0


def test_tail_sum_gd_closed_form():
    lam, eta, T = 2.0, 0.1, 150
    tr = run_gd(scalar_quadratic(lam), np.array([1.0]), OptimConfig(eta, T))
    np.testing.assert_allclose(tail_square_sums(tr.step_sq_norms),
                               tail_sum_half_quadratic(lam, eta, T), rtol=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(0.0, 1e6), min_size=1, max_size=200))
def test_tail_sums_monotone_and_nonnegative(values):
    S = tail_square_sums(values)
    assert np.all(S >= 0.0)
    assert np.all(S[1:] <= S[:-1])


def test_distance_series_examples():
    tr = run_gd(scalar_quadratic(1.0), np.array([0.0]), OptimConfig(0.1, 10))
    idx, d = distance_series(tr, np.zeros(1))
    assert np.all(d == 0.0) and len(idx) == 11
    lam, eta = 3.0, 0.2
    tr = run_gd(scalar_quadratic(lam), np.array([1.0]), OptimConfig(eta, 25))
    _, d = distance_series(tr, np.zeros(1))
    np.testing.assert_allclose(d, np.abs(gd_half_quadratic(lam, eta, 1.0, 25)), rtol=1e-13)


def test_distance_series_on_thinned_trajectory():
    tr = run_gd(scalar_quadratic(1.0), np.array([1.0]), OptimConfig(0.1, 20, record_every=5))
    idx, d = distance_series(tr, np.zeros(1))
    assert idx.tolist() == [0, 5, 10, 15, 20]
    np.testing.assert_allclose(d, 0.9 ** idx, rtol=1e-13)


def test_predicted_exponents():
    pred = predicted_exponents(0.75)
    assert pred["f_value"] == pytest.approx(-2.0)
    assert pred["distance"] == pytest.approx(-0.5)
    assert pred["distance_alt"] == pytest.approx(-3.0)
    with pytest.raises(ValueError):
        predicted_exponents(0.5)
