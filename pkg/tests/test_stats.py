import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rggloc import (
    CellConfig,
    Q_cross,
    Q_internal,
    V_count,
    derived_scales,
    event_A,
    event_B,
    event_D,
    event_L,
    exact_poisson_tail,
    h_frac,
    jensen_lower_bound,
    poisson_tail_bound,
    rate_Y,
    sample_cell_config,
)
from rggloc.grid import clique_translate, unflat_index
from rggloc.stats import log_poisson_pmf, log_poisson_sf, sum_rate_Y, truncated_edge_count

from scipy import stats as sps


def test_derived_scales_headline(l2_scales):
    s = l2_scales
    assert s.q == pytest.approx(math.sqrt(2.0 * 490.5))
    assert s.w == pytest.approx(32 * 0.06)
    assert s.a == pytest.approx(0.1 / 25)
    assert s.p_hat == pytest.approx(math.log(490.5) / math.log(150.0))
    # M = max(D n^a, n^a) = n^a when D < 1
    assert s.M == pytest.approx(150.0**s.a)
    assert 0.0 < s.xi < 1e-20  # epsilon^40 cap dominates at eps=0.2


def test_scale_exponent_orderings(l2_scales):
    s = l2_scales
    assert s.z == max(s.p_hat / 4.0, 0.75 * s.p_hat - 0.5)
    assert s.alpha == min(1.0 - s.p_hat / 2.0 - s.a / 2.0, s.p_hat / 2.0 - s.a / 2.0)
    assert s.beta == s.p_hat / 2.0 - s.a / 4.0
    assert s.gamma == s.p_hat - 2.0 * s.a


def test_rate_Y_basics():
    assert rate_Y(0.0, 2.0) == pytest.approx(2.0)  # 0 log 0 = 0
    assert rate_Y(2.0, 2.0) == pytest.approx(0.0)
    assert rate_Y(5.0, 2.0) > 0.0
    with pytest.raises(ValueError):
        rate_Y(1.0, 0.0)


@given(
    D=st.floats(0.05, 50.0),
    mult=st.floats(1.01, 6.0),
)
@settings(max_examples=150, deadline=None)
def test_chernoff_dominates_exact_upper(D, mult):
    t = D * mult
    assert poisson_tail_bound(D, t, "upper") >= exact_poisson_tail(D, t, "upper")


@given(
    D=st.floats(0.5, 50.0),
    mult=st.floats(0.05, 0.99),
)
@settings(max_examples=150, deadline=None)
def test_chernoff_dominates_exact_lower(D, mult):
    t = D * mult
    assert poisson_tail_bound(D, t, "lower") >= exact_poisson_tail(D, t, "lower")


def test_exact_tail_against_scipy():
    # upper side is the strict tail P(X > t) = sf(floor(t))
    for D in (0.3, 2.0, 17.5):
        for t in (D * 1.5, D * 3.0):
            want = sps.poisson.sf(math.floor(t), D)
            assert exact_poisson_tail(D, t, "upper") == pytest.approx(want, rel=1e-10)
            want_lo = sps.poisson.cdf(math.ceil(t * 0.5) - 1, D)
            assert exact_poisson_tail(D, t * 0.5, "lower") == pytest.approx(
                want_lo, rel=1e-10, abs=1e-300
            )


def test_log_poisson_helpers_against_scipy():
    assert log_poisson_sf(5.0, 12.0) == pytest.approx(sps.poisson.logsf(12, 5.0), rel=1e-9)
    assert log_poisson_sf(1.92, 100.0) == pytest.approx(sps.poisson.logsf(100, 1.92), rel=1e-9)
    assert log_poisson_pmf(3.0, 7) == pytest.approx(sps.poisson.logpmf(7, 3.0), rel=1e-12)


def _random_window(grid, rng, size):
    anchor = tuple(rng.integers(0, grid.m, grid.norm.dim))
    W = sorted(clique_translate(grid, anchor))
    return [tuple(map(int, I)) for I in W[:size]]


def test_partition_identity(l2_grid, l2_scales):
    """|E_s| splits exactly into internal, cross, and complement pair counts."""
    rng = np.random.default_rng(4)
    q2 = l2_scales.q**2 / 2.0
    from rggloc import sgraded_edge_count

    for k in range(10):
        cfg = sample_cell_config(l2_grid, seed=61, replica=k)
        W = _random_window(l2_grid, rng, size=12)
        comp = [
            unflat_index(f, l2_grid.m, 2)
            for f in range(l2_grid.num_cells)
            if unflat_index(f, l2_grid.m, 2) not in set(W)
        ]
        total = q2 * (
            Q_internal(W, cfg, l2_scales)
            + Q_cross(W, comp, cfg, l2_scales)
            + Q_internal(comp, cfg, l2_scales)
        )
        assert total == pytest.approx(sgraded_edge_count(cfg), abs=1e-6)


def test_V_squared_dominates_Q(l2_grid, l2_scales):
    rng = np.random.default_rng(5)
    for k in range(20):
        cfg = sample_cell_config(l2_grid, seed=62, replica=k)
        W = _random_window(l2_grid, rng, size=int(rng.integers(2, 32)))
        assert V_count(W, cfg, l2_scales) ** 2 >= Q_internal(W, cfg, l2_scales) - 1e-12


def test_jensen_inequality_random_windows(l2_grid, l2_scales):
    rng = np.random.default_rng(6)
    for k in range(50):
        cfg = sample_cell_config(l2_grid, seed=63, replica=k)
        W = _random_window(l2_grid, rng, size=int(rng.integers(2, 32)))
        lhs = sum_rate_Y(W, cfg) / l2_scales.q
        assert lhs >= jensen_lower_bound(W, cfg, l2_scales) - 1e-9


def test_jensen_tight_at_uniform(l2_grid, l2_scales):
    """Equal counts on W make the Jensen step an identity.

    The lower bound discards the nonnegative sum of the D offsets of Y_I,
    which at uniformity is exactly h(W) w / q; the residual after adding it
    back is floating-point only.
    """
    counts = np.zeros(l2_grid.num_cells, dtype=np.int64)
    W = sorted(clique_translate(l2_grid, (7, 7)))
    from rggloc.grid import flat_index

    for I in W:
        counts[flat_index(I, l2_grid.m)] = 5
    cfg = CellConfig(counts, l2_grid)
    lhs = sum_rate_Y(W, cfg) / l2_scales.q
    rhs = jensen_lower_bound(W, cfg, l2_scales)
    slack = h_frac(W, l2_grid) * l2_scales.w / l2_scales.q
    assert lhs - rhs == pytest.approx(slack, abs=1e-12)
    assert lhs >= rhs


def test_h_frac(l2_grid):
    # h is normalized by the clique size, not the cell count
    assert h_frac([(0, 0)], l2_grid) == pytest.approx(1.0 / 32.0)
    assert h_frac([(0, 0), (0, 0)], l2_grid) == pytest.approx(1.0 / 32.0)


def test_events_on_planted_config(l2_grid, l2_scales):
    # a clique set at count ceil(q/tau_s)+1 triggers every conditioning event
    counts = np.zeros(l2_grid.num_cells, dtype=np.int64)
    from rggloc.grid import flat_index

    level = math.ceil(l2_scales.q / l2_grid.tau_s) + 5
    for I in clique_translate(l2_grid, (25, 25)):
        counts[flat_index(I, l2_grid.m)] = level
    cfg = CellConfig(counts, l2_grid)
    assert event_L(cfg, l2_scales)
    assert event_A(cfg, l2_scales)
    assert event_B(cfg, l2_scales)
    assert not event_D(cfg, l2_scales)  # truncation removes the planted mass
    assert truncated_edge_count(cfg, l2_scales) == 0


def test_events_quiet_on_nominal(l2_grid, l2_scales):
    hits = sum(
        event_L(sample_cell_config(l2_grid, seed=64, replica=k), l2_scales)
        for k in range(20)
    )
    assert hits == 0  # P(|E_s| >= 2 mu_s) is astronomically small


def test_derived_scales_rejects_bad_inputs(l2_grid):
    with pytest.raises(ValueError):
        derived_scales(l2_grid, delta_tilde=-1.0)
