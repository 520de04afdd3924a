import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import radial_prox_bruteforce, soft_threshold
from szgd.errors import InnerSolverError, UnsupportedObjectiveError
from szgd.objectives import (
    PowerQuadratic,
    QuadraticForm,
    abs_value,
    constant,
    make_random_psd,
    scalar_quadratic,
)
from szgd.optimizers import prox_step, run_proximal
from szgd.proximal import ProxConfig, prox_solve
from szgd.rng import RngStream


@pytest.mark.parametrize("x,expected", [(3.0, 2.0), (0.5, 0.0)])
def test_soft_threshold_examples(x, expected):
    assert prox_step(abs_value(), np.array([x]), ProxConfig(1.0))[0] == expected


@settings(max_examples=100, deadline=None)
@given(x=st.floats(-50, 50), eta=st.floats(1e-3, 10))
def test_abs_matches_soft_threshold(x, eta):
    got = prox_step(abs_value(), np.array([x]), ProxConfig(eta))[0]
    assert abs(got - soft_threshold(x, eta)) <= 1e-12 * max(1.0, abs(x))


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-20, 20), eta=st.floats(1e-3, 10), lam=st.floats(1e-3, 20))
def test_quadratic_closed_form(x, eta, lam):
    got = prox_step(scalar_quadratic(lam), np.array([x]), ProxConfig(eta))[0]
    assert got == pytest.approx(x / (1 + eta * lam), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("p", [0.25, 0.4, 0.75, 1.5, 2.0, 3.0])
def test_radial_against_bruteforce(p):
    f = PowerQuadratic(QuadraticForm.identity(3, 2.0), p)
    gen = np.random.default_rng(int(p * 100))
    for _ in range(5):
        x = gen.standard_normal(3) * gen.uniform(0.05, 3)
        eta = float(gen.uniform(0.05, 2))
        z = prox_step(f, x, ProxConfig(eta))
        a = np.linalg.norm(x)
        r = radial_prox_bruteforce(lambda r: (2.0 * r * r) ** p, a, eta)

        def obj(r):
            return (2.0 * r * r) ** p + (r - a) ** 2 / (2 * eta)

        # equal optimal values; the minimizer itself can be non-unique at p < 1/2
        assert obj(np.linalg.norm(z)) <= obj(r) + 1e-10
        assert np.allclose(z / max(np.linalg.norm(z), 1e-300) * np.linalg.norm(z),
                           x * (np.linalg.norm(z) / a), atol=1e-12)


@pytest.mark.parametrize("p", [0.5, 0.75, 1.0, 2.0])
def test_general_form_is_stationary_and_minimal(p):
    q = make_random_psd(4, 5.0, RngStream(int(p * 10)))
    f = PowerQuadratic(q, p)
    gen = np.random.default_rng(3)
    for _ in range(5):
        x = gen.standard_normal(4)
        eta = float(gen.uniform(0.01, 1))
        res = prox_solve(f, x, ProxConfig(eta))

        def obj(z):
            return f(z) + (z - x) @ (z - x) / (2 * eta)

        base = obj(res.x)
        for _ in range(50):
            assert base <= obj(res.x + 1e-4 * gen.standard_normal(4)) + 1e-12
        assert res.certificate_gap <= 1e-12


def test_half_power_zero_region():
    f = PowerQuadratic(make_random_psd(3, 5.0, RngStream(4)), 0.5)
    x = np.full(3, 1e-3)
    z = prox_step(f, x, ProxConfig(10.0))
    assert np.abs(z).max() <= 1e-10


def test_subgradient_matches_optimality_condition():
    f = PowerQuadratic(make_random_psd(4, 5.0, RngStream(5)), 1.5)
    x = np.random.default_rng(5).standard_normal(4)
    res = prox_solve(f, x, ProxConfig(0.3))
    np.testing.assert_allclose(res.subgradient, f.gradient(res.x), rtol=1e-8, atol=1e-10)


def test_unsupported_objectives():
    with pytest.raises(UnsupportedObjectiveError):
        prox_step(constant(2), np.ones(2), ProxConfig(1.0))
    f = PowerQuadratic(make_random_psd(3, 5.0, RngStream(6)), 0.25)
    with pytest.raises(UnsupportedObjectiveError):
        prox_step(f, np.ones(3), ProxConfig(1.0))


def test_inner_cap_is_enforced():
    f = PowerQuadratic(make_random_psd(5, 5.0, RngStream(7)), 1.5)
    with pytest.raises(InnerSolverError) as info:
        prox_solve(f, np.ones(5), ProxConfig(0.5, inner_max_iters=1))
    assert info.value.diagnostics


@pytest.mark.parametrize("kwargs", [dict(eta=0.0), dict(eta=1.0, inner_tol=0.0), dict(eta=1.0, inner_max_iters=0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ProxConfig(**kwargs)


def test_abs_run_reaches_zero_at_five():
    tr = run_proximal(abs_value(), np.array([5.0]), 8, ProxConfig(1.0))
    np.testing.assert_array_equal(tr.iterates[:, 0], [5, 4, 3, 2, 1, 0, 0, 0, 0])


def test_half_square_run_halves():
    tr = run_proximal(scalar_quadratic(1.0), np.array([1.0]), 10, ProxConfig(1.0))
    np.testing.assert_allclose(tr.iterates[:, 0], 0.5 ** np.arange(11), rtol=1e-15)
    np.testing.assert_allclose(tr.subgrad_norms, 0.5 ** np.arange(1, 11), rtol=1e-15)


def test_run_records_certificate_descent():
    f = PowerQuadratic(make_random_psd(5, 5.0, RngStream(8)), 2.0)
    eta = 0.7
    tr = run_proximal(f, np.ones(5), 200, ProxConfig(eta))
    lhs = tr.f_values[1:] + tr.step_sq_norms / (2 * eta)
    assert np.all(lhs <= tr.f_values[:-1] + 1e-12)
    assert tr.eval_count > 0 and len(tr.f_values) == 201
