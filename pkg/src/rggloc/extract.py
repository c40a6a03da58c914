"""Deterministic localization pipeline and theorem-event certification.

The pipeline reads a cell configuration and extracts, in order:
  frakI  — cells whose count exceeds the big-cell cutoff M;
  frakT  — the shortest prefix of frakI (sorted by count, descending) whose
           normalized vertex mass V exceeds 1 - 2*xi/log(n);
  frakP  — the members of frakT whose count exceeds xi^{1/4} q / tau_s.

On a localized configuration frakP is a maximal clique set carrying nearly
all excess vertices; the certification report checks exactly that, clause by
clause, and never throws on non-localized inputs.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Ball, BallBoxIntersection, Box, Norm, probe_measure
from .grid import (
    CellConfig,
    GridModel,
    build_grid,
    cell_metric,
    coarsen,
    flat_index,
    unflat_index,
)
from .points import ModelParams, PointSet, count_in_probe
from .stats import DerivedScales, Q_internal, Q_cross, V_count, derived_scales


class InsufficientMassError(ValueError):
    """The big-cell set does not carry enough vertex mass to localize."""


def extract_bulk_exceedance(cfg: CellConfig, scales: DerivedScales) -> frozenset:
    """frakI = {I : X_I > M}."""
    grid = cfg.grid
    idx = np.nonzero(cfg.counts > scales.M)[0]
    d = grid.norm.dim
    return frozenset(unflat_index(int(f), grid.m, d) for f in idx)


def _ordered(cfg: CellConfig, members) -> list:
    """Sort by count descending, ties broken lexicographically on the index."""
    return sorted(members, key=lambda I: (-cfg[tuple(I)], tuple(I)))


def extract_T(cfg: CellConfig, frakI, scales: DerivedScales) -> frozenset:
    """Shortest prefix of the sorted big-cell list with V > 1 - 2 xi / log n."""
    threshold = 1.0 - 2.0 * scales.xi / math.log(scales.n)
    order = _ordered(cfg, frakI)
    acc = 0.0
    out = []
    for I in order:
        out.append(tuple(I))
        acc += cfg[tuple(I)] / scales.q
        if acc > threshold:
            return frozenset(out)
    raise InsufficientMassError(
        f"insufficient mass: V(frakI) = {acc:.6g} <= {threshold:.6g}"
    )


def extract_P(cfg: CellConfig, frakT, scales: DerivedScales) -> frozenset:
    """Filter frakT by the very-large-cell threshold xi^{1/4} q / tau_s."""
    cut = scales.xi**0.25 * scales.q / cfg.grid.tau_s
    return frozenset(tuple(I) for I in frakT if cfg[tuple(I)] > cut)


@dataclass(frozen=True)
class LocalizationReport:
    frakI: frozenset
    frakT: frozenset
    frakP: frozenset
    diamP: int
    cardP: int
    max_dev_inside: float
    max_ratio_outside: float
    QP: float
    thm2_pass: bool
    eps_tilde: float
    insufficient_mass: bool

    def to_json(self) -> str:
        def enc(s):
            return sorted(list(map(list, s)))

        return json.dumps(
            {
                "schema": "thm2_report.v1",
                "frakI": enc(self.frakI),
                "frakT": enc(self.frakT),
                "frakP": enc(self.frakP),
                "diamP": self.diamP,
                "cardP": self.cardP,
                "max_dev_inside": self.max_dev_inside,
                "max_ratio_outside": self.max_ratio_outside,
                "QP": self.QP,
                "thm2_pass": self.thm2_pass,
                "eps_tilde": self.eps_tilde,
                "insufficient_mass": self.insufficient_mass,
            },
            sort_keys=True,
        )


def set_diameter_capped(members, grid: GridModel, cap: int = 400) -> int:
    """Pairwise metric diameter; quadratic, so refuse absurdly large sets."""
    members = list(members)
    if len(members) > cap:
        return grid.m  # sentinel: certainly > s for any valid grid
    best = 0
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            best = max(best, cell_metric(members[i], members[j], grid))
    return best


def certify_thm2(
    cfg: CellConfig,
    grid: GridModel,
    scales: DerivedScales,
    eps_tilde: float = 0.2,
) -> LocalizationReport:
    """Run the pipeline and check the localization event at tolerance eps_tilde."""
    frakI = extract_bulk_exceedance(cfg, scales)
    insufficient = False
    try:
        frakT = extract_T(cfg, frakI, scales)
    except InsufficientMassError:
        frakT = frozenset()
        insufficient = True
    frakP = extract_P(cfg, frakT, scales)
    card = len(frakP)
    diam = set_diameter_capped(frakP, grid) if card else 0
    ratio = grid.tau_s / scales.q
    if card:
        in_mask = np.zeros(grid.num_cells, dtype=bool)
        for I in frakP:
            in_mask[flat_index(I, grid.m)] = True
        dev_in = float(np.abs(cfg.counts[in_mask] * ratio - 1.0).max())
        outside = cfg.counts[~in_mask]
        dev_out = float(outside.max() * ratio) if outside.size else 0.0
        qp = Q_internal(frakP, cfg, scales)
    else:
        dev_in = math.inf
        dev_out = float(cfg.counts.max() * ratio) if cfg.counts.size else 0.0
        qp = 0.0
    ok = (
        card >= grid.tau_s
        and diam <= grid.s
        and dev_in < eps_tilde
        and dev_out <= eps_tilde
    )
    return LocalizationReport(
        frakI=frakI,
        frakT=frakT,
        frakP=frakP,
        diamP=diam,
        cardP=card,
        max_dev_inside=dev_in,
        max_ratio_outside=dev_out,
        QP=qp,
        thm2_pass=ok,
        eps_tilde=eps_tilde,
        insufficient_mass=insufficient,
    )


def localization_profile(cfg: CellConfig, grid: GridModel, scales: DerivedScales) -> dict:
    """Summary functionals for plotting: Q split across frakP, V, top counts."""
    report = certify_thm2(cfg, grid, scales)
    P = report.frakP
    d = grid.norm.dim
    top = np.sort(cfg.counts)[::-1][:20]
    out = {
        "V_P": V_count(P, cfg, scales) if P else 0.0,
        "Q_P": report.QP,
        "top_counts": [int(v) for v in top],
        "cardP": report.cardP,
        "diamP": report.diamP,
    }
    if len(P) and grid.num_cells <= 100_000:
        comp = frozenset(
            unflat_index(f, grid.m, d)
            for f in range(grid.num_cells)
            if unflat_index(f, grid.m, d) not in P
        )
        out["Q_P_comp"] = Q_cross(P, comp, cfg, scales)
        out["Q_comp"] = Q_internal(comp, cfg, scales)
    return out


# ---------------------------------------------------------------------------
# Theorem-1-style continuum certification


@dataclass(frozen=True)
class ProbeFamilySpec:
    """Deterministic probe family inside the candidate ball A."""

    fractions: tuple = (0.4, 0.6, 0.8, 1.0)
    include_boxes: bool = True
    include_intersections: bool = True


@dataclass(frozen=True)
class Thm1Report:
    center: tuple
    r: float
    delta: float
    eps: float
    target: float  # sqrt(2 delta mu)
    count_A: int
    clause_a_margin_SA: float
    clause_a_pass_SA: bool
    clause_a_worst: float
    clause_a_worst_probe: str
    clause_a_pass: bool
    clause_b_worst: float
    clause_b_pass: bool
    n_probes_a: int
    n_probes_b: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": "thm1_report.v1",
                "center": list(self.center),
                "r": self.r,
                "delta": self.delta,
                "eps": self.eps,
                "target": self.target,
                "count_A": self.count_A,
                "clause_a_margin_SA": self.clause_a_margin_SA,
                "clause_a_pass_SA": self.clause_a_pass_SA,
                "clause_a_worst": self.clause_a_worst,
                "clause_a_worst_probe": self.clause_a_worst_probe,
                "clause_a_pass": self.clause_a_pass,
                "clause_b_worst": self.clause_b_worst,
                "clause_b_pass": self.clause_b_pass,
                "n_probes_a": self.n_probes_a,
                "n_probes_b": self.n_probes_b,
            },
            sort_keys=True,
        )


def _densest_ball_center(ps: PointSet, params: ModelParams, s: int = 5) -> tuple:
    """Candidate ball center: densest clique-window centroid, locally refined."""
    grid = build_grid(params, s)
    cfg = coarsen(ps, grid)
    x = cfg.lattice()
    acc = np.zeros_like(x)
    for off in grid.clique_offsets:
        acc += np.roll(x, shift=tuple(-c for c in off), axis=tuple(range(x.ndim)))
    anchor = np.array(np.unravel_index(int(np.argmax(acc)), grid.shape))
    centroid = np.mean(np.array(grid.clique_offsets), axis=0)
    base = (anchor + centroid + 0.5) / grid.m % 1.0
    # 5-per-axis local refinement of the center at stride (1/m)/2
    best = None
    best_count = -1
    d = params.norm.dim
    stride = 0.5 / grid.m
    for off in itertools.product(range(-2, 3), repeat=d):
        c = tuple((base + stride * np.array(off)) % 1.0)
        ball = Ball(center=c, radius=params.r / 2.0, norm=params.norm)
        k = count_in_probe(ps, ball)
        if k > best_count:
            best_count = k
            best = c
    return best


def _clause_a_probes(A: Ball, spec: ProbeFamilySpec, eps: float, tau: float) -> list:
    """Probes S ⊆ A with measure above (eps/16) tau; labelled for reporting."""
    d = A.norm.dim
    out = []
    for f in spec.fractions:
        out.append((f"ball_f{f:g}", Ball(A.center, A.radius * f, A.norm)))
    if spec.include_boxes:
        # largest centered cube inside A: half-side = radius (Linf), radius/d (L1),
        # radius/sqrt(d) (L2)
        scale = {"linf": 1.0, "l2": 1.0 / math.sqrt(d), "l1": 1.0 / d}[A.norm.kind]
        half = A.radius * scale * 0.999
        corner = tuple((c - half) % 1.0 for c in A.center)
        out.append(("inscribed_box", Box(corner=corner, sides=(2 * half,) * d)))
    if spec.include_intersections:
        half = A.radius * 0.8
        corner = tuple((c - half * 0.2) % 1.0 for c in A.center)
        box = Box(corner=corner, sides=(half,) * d)
        out.append(("ball_box", BallBoxIntersection(ball=A, box=box)))
    floor = (eps / 16.0) * tau
    return [(name, S) for name, S in out if probe_measure(S) > floor]


def certify_thm1(
    ps: PointSet,
    params: ModelParams,
    delta: float,
    eps: float,
    probes: ProbeFamilySpec = ProbeFamilySpec(),
    s: int = 5,
) -> Thm1Report:
    """Evaluate the localization event on a continuum sample.

    Clause (a): for probes S inside the candidate ball A,
        | |χ(S)|/sqrt(2 delta mu) - λ(S)/τ | < eps.
    Clause (b): for balls S of diameter r disjoint from A,
        |χ(S)|/sqrt(2 delta mu) < eps λ(S)/τ.
    """
    mu = params.mu
    tau = params.tau
    target = math.sqrt(2.0 * delta * mu)
    center = _densest_ball_center(ps, params, s=s)
    A = Ball(center=center, radius=params.r / 2.0, norm=params.norm)
    count_A = count_in_probe(ps, A)

    worst_a = -1.0
    worst_name = ""
    margin_sa = abs(count_A / target - 1.0)
    for name, S in _clause_a_probes(A, probes, eps, tau):
        k = count_in_probe(ps, S)
        margin = abs(k / target - probe_measure(S) / tau)
        if margin > worst_a:
            worst_a = margin
            worst_name = name
    n_a = len(_clause_a_probes(A, probes, eps, tau))

    # clause (b): tile ball probes at stride r/2, skip any that intersect A
    r = params.r
    d = params.norm.dim
    kgrid = max(1, int(math.floor(2.0 / r)))
    stride = 1.0 / kgrid
    from .geometry import torus_distance

    centers = np.array(
        list(itertools.product((np.arange(kgrid) + 0.5) * stride, repeat=d))
    )
    dist_to_A = torus_distance(centers, np.array(A.center), params.norm)
    keep = centers[dist_to_A > r]  # center gap > r  =>  balls of radius r/2 disjoint
    counts = np.zeros(len(keep), dtype=np.int64)
    if len(ps) and len(keep):
        # assign points to nearby tiled centers: lookup table cell -> keep index
        shape = (kgrid,) * d
        table = np.full(kgrid**d, -1, dtype=np.int64)
        keep_cell = np.minimum(np.floor(keep / stride).astype(np.int64), kgrid - 1)
        table[np.ravel_multi_index(keep_cell.T, shape)] = np.arange(len(keep))
        pt_cell = np.minimum(np.floor(ps.points / stride).astype(np.int64), kgrid - 1)
        for off in itertools.product(range(-1, 2), repeat=d):
            cand = (pt_cell + np.array(off)) % kgrid
            ki = table[np.ravel_multi_index(cand.T, shape)]
            sel = ki >= 0
            if not sel.any():
                continue
            dd = torus_distance(ps.points[sel], keep[ki[sel]], params.norm)
            hit = dd <= r / 2.0
            np.add.at(counts, ki[sel][hit], 1)
    worst_b = float(counts.max() / target) if len(keep) else 0.0
    return Thm1Report(
        center=tuple(float(c) for c in center),
        r=params.r,
        delta=delta,
        eps=eps,
        target=target,
        count_A=count_A,
        clause_a_margin_SA=margin_sa,
        clause_a_pass_SA=margin_sa < eps,
        clause_a_worst=worst_a,
        clause_a_worst_probe=worst_name,
        clause_a_pass=worst_a < eps,
        clause_b_worst=worst_b,
        clause_b_pass=worst_b < eps,
        n_probes_a=n_a,
        n_probes_b=int(len(keep)),
    )
