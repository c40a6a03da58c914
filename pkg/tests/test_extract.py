"""Localization pipeline: big-cell extraction, clique certification, reports."""

import json
import math

import numpy as np
import pytest

from rggloc import (
    InsufficientMassError,
    Norm,
    build_grid,
    certify_thm1,
    certify_thm2,
    derived_scales,
    extract_bulk_exceedance,
    extract_P,
    extract_T,
    localization_profile,
    params_for_p_hat,
    planted_cell_sampler,
    planted_continuum_sampler,
)
from rggloc.grid import CellConfig, clique_translate, flat_index


@pytest.fixture(scope="module")
def big_grid():
    # d=1 so the clique level q/tau_s is far above the big-cell cutoff M
    params = params_for_p_hat(1e5, 1.0, Norm("linf", 1))
    return build_grid(params, s=5)


@pytest.fixture(scope="module")
def big_scales(big_grid):
    return derived_scales(big_grid, delta_tilde=1.0)


def _planted_level(grid, scales):
    # smallest integer level whose clique mass exceeds q (the V threshold is
    # 1 - O(xi), i.e. numerically 1)
    level = math.ceil(scales.q / grid.tau_s)
    if level * grid.tau_s <= scales.q:
        level += 1
    return level


def _planted_config(grid, scales, level=None):
    counts = np.zeros(grid.num_cells, dtype=np.int64)
    if level is None:
        level = _planted_level(grid, scales)
    W = clique_translate(grid, (grid.m // 2,))
    for I in W:
        counts[flat_index(I, grid.m)] = level
    return CellConfig(counts, grid), W


def test_bulk_exceedance_strict_threshold(big_grid, big_scales):
    cfg, W = _planted_config(big_grid, big_scales)
    assert extract_bulk_exceedance(cfg, big_scales) == W
    # counts at exactly M (or below) are excluded
    lo = CellConfig(np.ones(big_grid.num_cells, dtype=np.int64), big_grid)
    assert extract_bulk_exceedance(lo, big_scales) == frozenset()


def test_extract_T_takes_shortest_prefix(big_grid, big_scales):
    cfg, W = _planted_config(big_grid, big_scales)
    # add one extra big cell with a much smaller count: the clique prefix
    # already carries enough mass, so the straggler is dropped
    counts = cfg.counts.copy()
    far = (big_grid.m // 4,)
    counts[flat_index(far, big_grid.m)] = int(math.ceil(big_scales.M)) + 1
    cfg2 = CellConfig(counts, big_grid)
    frakI = extract_bulk_exceedance(cfg2, big_scales)
    assert far in frakI
    frakT = extract_T(cfg2, frakI, big_scales)
    assert frakT == W


def test_extract_T_insufficient_mass(big_grid, big_scales):
    counts = np.zeros(big_grid.num_cells, dtype=np.int64)
    counts[0] = 2  # above M but carrying ~nothing of the q mass
    cfg = CellConfig(counts, big_grid)
    with pytest.raises(InsufficientMassError):
        extract_T(cfg, extract_bulk_exceedance(cfg, big_scales), big_scales)


def test_extract_P_filters_small_cells(big_grid, big_scales):
    cfg, W = _planted_config(big_grid, big_scales)
    frakT = extract_T(cfg, extract_bulk_exceedance(cfg, big_scales), big_scales)
    assert extract_P(cfg, frakT, big_scales) == W


def test_certify_thm2_planted_passes(big_grid, big_scales):
    cfg, W = _planted_config(big_grid, big_scales)
    rep = certify_thm2(cfg, big_grid, big_scales)
    assert rep.frakP == W
    assert rep.cardP == big_grid.tau_s
    assert rep.diamP <= big_grid.s
    assert rep.max_dev_inside < 0.2
    assert rep.max_ratio_outside == 0.0
    assert rep.thm2_pass
    assert not rep.insufficient_mass


def test_certify_thm2_rejects_split_mass(big_grid, big_scales):
    # two half-level cliques far apart: diameter blows past s
    counts = np.zeros(big_grid.num_cells, dtype=np.int64)
    level = round(big_scales.q / big_grid.tau_s)
    for anchor in ((0,), (big_grid.m // 2,)):
        for I in clique_translate(big_grid, anchor):
            counts[flat_index(I, big_grid.m)] = max(level // 2, 2)
    rep = certify_thm2(CellConfig(counts, big_grid), big_grid, big_scales)
    assert not rep.thm2_pass


def test_certify_thm2_never_raises_on_empty(big_grid, big_scales):
    rep = certify_thm2(
        CellConfig(np.zeros(big_grid.num_cells, dtype=np.int64), big_grid),
        big_grid,
        big_scales,
    )
    assert rep.cardP == 0
    assert not rep.thm2_pass
    assert rep.max_dev_inside == math.inf


def test_report_json_schema(big_grid, big_scales):
    cfg, _ = _planted_config(big_grid, big_scales)
    doc = json.loads(certify_thm2(cfg, big_grid, big_scales).to_json())
    assert doc["schema"] == "thm2_report.v1"
    assert doc["thm2_pass"] is True
    assert len(doc["frakP"]) == big_grid.tau_s


def test_planted_sampler_feeds_pipeline(big_grid, big_scales):
    ws = planted_cell_sampler(big_grid, t=1.0, seed=17, replica=0)
    rep = certify_thm2(ws.config, big_grid, big_scales)
    # the tilted clique dominates, so the extracted set is a clique translate
    assert rep.cardP >= big_grid.tau_s
    assert rep.diamP <= big_grid.s


def test_localization_profile_keys(big_grid, big_scales):
    cfg, _ = _planted_config(big_grid, big_scales)
    prof = localization_profile(cfg, big_grid, big_scales)
    assert prof["cardP"] == big_grid.tau_s
    assert prof["V_P"] == pytest.approx(
        big_grid.tau_s * _planted_level(big_grid, big_scales) / big_scales.q
    )
    assert prof["Q_P"] > 0.0
    assert len(prof["top_counts"]) == 20
    json.dumps(prof)  # must be serializable as-is


def test_certify_thm1_planted_continuum():
    params = params_for_p_hat(2000.0, 1.0, Norm("l2", 2))
    ps = planted_continuum_sampler(params, delta=1.0, seed=23)
    rep = certify_thm1(ps, params, delta=1.0, eps=0.25)
    assert rep.clause_a_pass_SA  # the planted ball itself carries ~sqrt(2 mu)
    assert rep.clause_b_pass
    assert rep.n_probes_b > 100
    doc = json.loads(rep.to_json())
    assert doc["schema"] == "thm1_report.v1"


def test_certify_thm1_null_sample_fails_clause_a():
    from rggloc import sample_ppp

    params = params_for_p_hat(2000.0, 1.0, Norm("l2", 2))
    ps = sample_ppp(params.n, params.norm, seed=29)
    rep = certify_thm1(ps, params, delta=1.0, eps=0.25)
    assert not rep.clause_a_pass_SA  # nothing near sqrt(2 mu) points anywhere
