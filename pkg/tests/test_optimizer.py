import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinvqe.errors import ConfigurationError
from spinvqe.optimizer import (
    OptimizationTrace, OptimizerConfig, StopReason, minimize,
    sample_initial_params,
)


def quadratic(A, b):
    def f(x):
        g = A @ x - b
        return 0.5 * x @ A @ x - b @ x, g
    return f


def test_quadratic_converges_to_solution():
    A = np.diag([1.0, 4.0, 9.0, 25.0])
    b = np.array([1.0, -2.0, 3.0, 0.5])
    tr = minimize(quadratic(A, b), np.zeros(4), OptimizerConfig())
    assert tr.stop_reason is StopReason.GRAD_TOL
    assert np.allclose(tr.theta, np.linalg.solve(A, b), atol=1e-5)


@given(st.integers(0, 10 ** 6), st.integers(2, 6))
@settings(max_examples=20, deadline=None)
def test_random_spd_quadratics(seed, dim):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(dim, dim))
    A = m @ m.T + np.eye(dim)
    b = rng.normal(size=dim)
    tr = minimize(quadratic(A, b), rng.normal(size=dim),
                  OptimizerConfig(max_iterations=500))
    assert np.max(np.abs(A @ tr.theta - b)) < 1e-4


def test_rosenbrock():
    def rosen(x):
        f = 100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2
        g = np.array([-400 * x[0] * (x[1] - x[0] ** 2) - 2 * (1 - x[0]),
                      200 * (x[1] - x[0] ** 2)])
        return f, g
    tr = minimize(rosen, np.array([-1.2, 1.0]), OptimizerConfig(max_iterations=500))
    assert np.allclose(tr.theta, [1.0, 1.0], atol=1e-4)


def test_costs_never_increase():
    rng = np.random.default_rng(5)
    m = rng.normal(size=(8, 8))
    A = m @ m.T + 0.1 * np.eye(8)
    tr = minimize(quadratic(A, rng.normal(size=8)), rng.normal(size=8),
                  OptimizerConfig(max_iterations=200))
    costs = tr.costs
    assert all(c2 <= c1 + 1e-12 for c1, c2 in zip(costs, costs[1:]))


def test_trace_structure():
    tr = minimize(quadratic(np.eye(2), np.zeros(2)), np.ones(2), OptimizerConfig())
    assert tr.records[0].n_I == 0                       # starting point logged
    assert tr.n_iterations == tr.records[-1].n_I
    assert tr.n_evals >= len(tr.records)
    lines = tr.to_json_lines().splitlines()
    assert len(lines) == len(tr.records)
    import json
    parsed = json.loads(lines[-1])
    assert parsed["n_I"] == tr.n_iterations


def test_max_iterations_stop():
    def slow(x):
        return float(np.sum(np.cosh(x))), np.sinh(x)
    tr = minimize(slow, np.full(3, 5.0), OptimizerConfig(max_iterations=2))
    assert tr.stop_reason is StopReason.MAX_ITERATIONS
    assert tr.n_iterations == 2


def test_f_tol_plateau_stop():
    # flat valley floor: relative decrease collapses before the gradient does
    def f(x):
        return 1.0 + 1e-16 * float(x[0]), np.array([1e-16])
    tr = minimize(f, np.array([0.0]), OptimizerConfig())
    assert tr.stop_reason in (StopReason.GRAD_TOL, StopReason.F_TOL)


def test_non_finite_objective():
    def f(x):
        if x[0] < -3:
            return float("nan"), np.array([float("nan")])
        return float(x[0]), np.array([1.0])
    tr = minimize(f, np.array([0.0]), OptimizerConfig(max_iterations=100))
    assert tr.stop_reason in (StopReason.NON_FINITE, StopReason.LINE_SEARCH_FAILURE)


def test_extras_threaded_to_records():
    def f(x):
        return float(x @ x), 2 * x, {"tag": float(x[0])}
    tr = minimize(f, np.array([2.0, 1.0]), OptimizerConfig())
    assert "tag" in tr.records[0].extras
    assert tr.records[0].extras["tag"] == 2.0


def test_nonconvex_uses_fallback_but_descends():
    # sign-flipping curvature makes BFGS pairs useless now and then
    def f(x):
        return float(np.sum(np.sin(x) + 0.1 * x ** 2)), np.cos(x) + 0.2 * x
    tr = minimize(f, np.array([2.0, -1.0, 4.0]), OptimizerConfig(max_iterations=300))
    assert tr.records[-1].cost < tr.records[0].cost
    assert tr.n_fallback >= 0


# --- config ---------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigurationError):
        OptimizerConfig(wolfe_c1=0.5, wolfe_c2=0.3)
    with pytest.raises(ConfigurationError):
        OptimizerConfig(memory=0)
    with pytest.raises(ConfigurationError):
        OptimizerConfig(max_iterations=0)


def test_sample_initial_params_range_and_determinism():
    a = sample_initial_params(50, np.random.SeedSequence((9, 0)))
    b = sample_initial_params(50, np.random.SeedSequence((9, 0)))
    c = sample_initial_params(50, np.random.SeedSequence((9, 1)))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all(a >= 0) and np.all(a < 2 * np.pi)


def test_sample_initial_params_plain_seed():
    a = sample_initial_params(10, 123)
    assert a.shape == (10,)
