import math

import pytest

from rggloc import (
    Norm,
    build_grid,
    importance_estimate_tail,
    normalized_log_tail,
    params_for_p_hat,
    rate_function,
    sandwich_bounds,
)


def test_rate_function_values():
    assert rate_function(1.0, 1.0) == pytest.approx(math.sqrt(2.0) / 2.0)
    assert rate_function(2.0, 1.0) == pytest.approx(1.0)
    assert rate_function(1.0, 0.5) == pytest.approx(0.75 * math.sqrt(2.0))
    # rate vanishes as p -> 2 (dense regime has no sqrt(mu) log n tail)
    assert rate_function(1.0, 1.999) < 1e-3


def test_rate_function_domain():
    for bad in ((1.0, 0.0), (1.0, 2.0), (0.0, 1.0), (-1.0, 1.0)):
        with pytest.raises(ValueError):
            rate_function(*bad)


@pytest.fixture(scope="module")
def sweep_point():
    params = params_for_p_hat(1e4, 1.0, Norm("linf", 1))
    return params, build_grid(params, s=5)


def test_sandwich_orders_and_brackets(sweep_point):
    params, grid = sweep_point
    sb = sandwich_bounds(params, grid, t=1.0, eps=0.25)
    assert sb.lower_log < 0.0
    assert sb.lower_log <= sb.upper_log
    est = importance_estimate_tail(grid, t=1.0, replicas=400, seed=51)
    lo, hi = sb.normalized(params.mu, params.n)
    val, err = normalized_log_tail(est, params.mu, params.n)
    assert lo - 3 * err <= val <= hi + 3 * err


def test_sandwich_eps_validation(sweep_point):
    params, grid = sweep_point
    with pytest.raises(ValueError):
        sandwich_bounds(params, grid, t=1.0, eps=0.5)
    with pytest.raises(ValueError):
        sandwich_bounds(params, grid, t=1.0, eps=0.0)


def test_sandwich_components_recorded(sweep_point):
    params, grid = sweep_point
    sb = sandwich_bounds(params, grid, t=1.0, eps=0.25)
    c = sb.components
    assert c["log_clique_count"] == pytest.approx(
        grid.norm.dim * grid.tau_s * math.log(grid.m)
    )
    assert c["planted_count"] >= math.sqrt(2.0 * params.mu)
    assert c["log_poisson_point_mass"] < 0.0
    # the upper bound must sit above the trivial planted lower bound
    assert sb.upper_log >= sb.lower_log


def test_normalized_log_tail_scaling():
    from rggloc.sampling import TailEstimate

    est = TailEstimate(
        t=1.0,
        log_prob=-100.0,
        std_err=0.0,
        rel_std_err=0.5,
        n_replicas=1000,
        method="importance",
        threshold=0.0,
        unreliable=False,
        truncation_error=0.0,
    )
    val, err = normalized_log_tail(est, mu=100.0, n=math.e)
    assert val == pytest.approx(-10.0)
    assert err == pytest.approx(0.05)
