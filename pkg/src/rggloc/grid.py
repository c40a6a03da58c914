"""The s-graded discretization: grid, integer cell metric, neighborhoods,
maximal clique sets, s-graded edge counts, hulls, and inscribed balls.

The torus is cut into m^d cells of side 1/m with m = floor(s/r); cell
occupancies are independent Poisson(D) with D = n/m^d.  The integer cell
metric d(I,J) is the smallest integer z such that interior points of the two
cells can be closer than z cell widths; for monotone norms this has the
closed form floor(||max(delta-1, 0)||) + 1 with delta the wrapped per-axis
cell offset.  Two cells are "adjacent" (their points can be graph neighbors)
when d(I,J) <= s.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from . import rng
from .geometry import Ball, BallBoxIntersection, Box, Norm, Probe
from .points import ModelParams, PointSet

CellIndex = tuple  # d-tuple of ints in {0..m-1}; 0-based throughout


@dataclass(frozen=True)
class CliqueResult:
    """Outcome of a maximum clique-set search."""

    members: frozenset  # of CellIndex
    size: int
    exact: bool  # False => size is only a certified lower bound


@dataclass(frozen=True)
class GridModel:
    s: int
    m: int
    n: float
    r: float
    norm: Norm
    D: float
    nbhd_size: int
    tau_s: int
    tau_exact: bool
    # canonical max clique set as offsets with min corner at the origin
    clique_offsets: tuple

    @property
    def num_cells(self) -> int:
        return self.m**self.norm.dim

    @property
    def mu_s(self) -> float:
        """Expected s-graded edge count |N_I| n^2 / (2 m^d)."""
        return self.nbhd_size * self.n * self.n / (2.0 * self.num_cells)

    @property
    def shape(self) -> tuple:
        return (self.m,) * self.norm.dim


@dataclass
class CellConfig:
    """Cell occupancy vector {X_I}; counts stored flat in C order."""

    counts: np.ndarray  # int64, shape (m^d,)
    grid: GridModel
    seed: int | None = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (self.grid.num_cells,):
            raise ValueError("counts shape does not match grid")
        if (self.counts < 0).any():
            raise ValueError("negative cell count")

    def lattice(self) -> np.ndarray:
        return self.counts.reshape(self.grid.shape)

    def __getitem__(self, I: CellIndex) -> int:
        return int(self.counts[flat_index(I, self.grid.m)])


def flat_index(I: CellIndex, m: int) -> int:
    f = 0
    for c in I:
        f = f * m + int(c)
    return f


def unflat_index(f: int, m: int, d: int) -> CellIndex:
    out = []
    for _ in range(d):
        out.append(f % m)
        f //= m
    return tuple(reversed(out))


def _metric_from_delta(delta: np.ndarray, norm: Norm) -> np.ndarray:
    """Closed-form metric from wrapped per-axis offsets (0 for the zero offset)."""
    delta = np.asarray(delta)
    g = np.maximum(delta - 1, 0).astype(float)
    dist = np.floor(norm.length(g)).astype(np.int64) + 1
    same = (delta == 0).all(axis=-1)
    return np.where(same, 0, dist)


def cell_metric(I: CellIndex, J: CellIndex, grid: GridModel) -> int:
    if len(I) != grid.norm.dim or len(J) != grid.norm.dim:
        raise ValueError("index dimension mismatch")
    m = grid.m
    delta = np.array([min(abs(i - j), m - abs(i - j)) for i, j in zip(I, J)])
    return int(_metric_from_delta(delta, grid.norm))


def cell_metric_numeric_oracle(
    I: CellIndex, J: CellIndex, grid: GridModel, samples: int = 2000, seed: int = 0
) -> int:
    """Definitional infimum by sampling: min over interior pairs of ceil(m*dist).

    Random interior pairs alone rarely approach the infimum, so deterministic
    near-corner probes (inset 1e-7 cell widths) are always included.
    """
    if I == J:
        return 0
    m = grid.m
    d = grid.norm.dim
    eps = 1e-7 / m
    lo_i = np.array(I, dtype=float) / m
    lo_j = np.array(J, dtype=float) / m
    corners = list(itertools.product((eps, 1.0 / m - eps), repeat=d))
    xs = np.array([lo_i + c for c in corners])
    ys = np.array([lo_j + c for c in corners])
    from .geometry import torus_distance

    dist = torus_distance(xs[:, None, :], ys[None, :, :], grid.norm)
    best = dist.min()
    if samples > 0:
        g = rng.generator(seed)
        rx = lo_i + (eps + g.random((samples, d)) * (1.0 / m - 2 * eps))
        ry = lo_j + (eps + g.random((samples, d)) * (1.0 / m - 2 * eps))
        best = min(best, torus_distance(rx, ry, grid.norm).min())
    return int(math.ceil(m * best - 1e-9))


@lru_cache(maxsize=64)
def _neighbor_offsets_cached(kind: str, dim: int, s: int, m: int) -> tuple:
    norm = Norm(kind, dim)
    offs = []
    if m >= 2 * s + 3:
        # window: per-axis offsets up to s+1 suffice since g_k <= ||g||
        rng_ = range(-(s + 1), s + 2)
        for o in itertools.product(rng_, repeat=dim):
            if all(c == 0 for c in o):
                continue
            delta = np.abs(np.array(o))
            if int(_metric_from_delta(delta, norm)) <= s:
                offs.append(o)
    else:
        # tiny wrapped grid: enumerate every nonzero offset directly
        for o in itertools.product(range(m), repeat=dim):
            if all(c == 0 for c in o):
                continue
            delta = np.array([min(c, m - c) for c in o])
            if int(_metric_from_delta(delta, norm)) <= s:
                offs.append(o)
    return tuple(offs)


def neighbor_offsets(grid: GridModel) -> tuple:
    """All nonzero offsets o (mod m) with d(I, I+o) <= s; each J counted once."""
    return _neighbor_offsets_cached(grid.norm.kind, grid.norm.dim, grid.s, grid.m)


def neighborhood(I: CellIndex, grid: GridModel) -> frozenset:
    m = grid.m
    out = {tuple(I)}
    for o in neighbor_offsets(grid):
        out.add(tuple((c + oc) % m for c, oc in zip(I, o)))
    return frozenset(out)


def _window_vertices_and_adjacency(norm: Norm, s: int):
    """Vertices of the (s+2)^d anchored window and the pairwise-compatible graph."""
    w = s + 2
    coords = np.array(list(itertools.product(range(w), repeat=norm.dim)))
    delta = np.abs(coords[:, None, :] - coords[None, :, :])
    dist = _metric_from_delta(delta, norm)
    adj = dist <= s
    np.fill_diagonal(adj, False)
    return coords, adj


def _greedy_clique(coords: np.ndarray, adj: np.ndarray) -> list:
    """Disc-swept greedy clique: best over ball-growing orders from many centers."""
    n = len(coords)
    w = int(coords.max()) + 1 if n else 0
    best: list = []
    dim = coords.shape[1]
    centers = itertools.product(np.arange(0, w, 1.0), repeat=dim)
    for c in centers:
        order = np.argsort(((coords - np.array(c)) ** 2).sum(axis=1), kind="stable")
        cur = []
        mask = np.ones(n, dtype=bool)
        for v in order:
            if mask[v]:
                cur.append(int(v))
                mask &= adj[v]
        if len(cur) > len(best):
            best = cur
    return best


def _max_clique_milp(adj: np.ndarray, time_limit: float, fixed: int | None = None):
    """Exact maximum clique by MILP over the complement edges (branch and cut)."""
    n = adj.shape[0]
    comp = ~adj
    np.fill_diagonal(comp, False)
    iu, ju = np.nonzero(np.triu(comp))
    lb = np.zeros(n)
    ub = np.ones(n)
    if fixed is not None:
        lb[fixed] = 1.0
    constraints = []
    if len(iu):
        rows = np.repeat(np.arange(len(iu)), 2)
        cols = np.empty(2 * len(iu), dtype=np.int64)
        cols[0::2] = iu
        cols[1::2] = ju
        A = sparse.csr_matrix(
            (np.ones(2 * len(iu)), (rows, cols)), shape=(len(iu), n)
        )
        constraints = [LinearConstraint(A, -np.inf, 1.0)]
    res = milp(
        c=-np.ones(n),
        constraints=constraints,
        integrality=np.ones(n),
        bounds=Bounds(lb, ub),
        options={"time_limit": time_limit, "disp": False},
    )
    if res.x is None:
        return None, False
    members = np.nonzero(res.x > 0.5)[0]
    return members, res.status == 0


@lru_cache(maxsize=64)
def _tau_s_cached(kind: str, dim: int, s: int, time_limit: float):
    """tau_s and a canonical witness; n-independent, computed once per (norm, d, s)."""
    norm = Norm(kind, dim)
    coords, adj = _window_vertices_and_adjacency(norm, s)
    greedy = _greedy_clique(coords, adj)
    members, exact = _max_clique_milp(adj, time_limit)
    if members is None:
        witness = greedy
        exact = False
    elif len(greedy) >= len(members):
        # prefer the disc-swept witness (deterministic, round) when it is optimal
        witness = greedy
    else:
        witness = sorted(int(v) for v in members)
    pts = coords[list(witness)]
    pts = pts - pts.min(axis=0)  # canonical: min corner at origin
    offsets = tuple(sorted(tuple(int(c) for c in row) for row in pts))
    return len(witness), exact, offsets


def max_clique_set_size(grid: GridModel, time_limit: float = 60.0) -> int:
    return _tau_s_cached(grid.norm.kind, grid.norm.dim, grid.s, time_limit)[0]


def max_clique_info(norm: Norm, s: int, time_limit: float = 60.0) -> CliqueResult:
    size, exact, offsets = _tau_s_cached(norm.kind, norm.dim, s, time_limit)
    return CliqueResult(members=frozenset(offsets), size=size, exact=exact)


def _tau_s_tiny(norm: Norm, s: int, m: int, time_limit: float = 60.0):
    """tau_s on a wrapped grid too small for the window argument (oracle grids)."""
    coords = np.array(list(itertools.product(range(m), repeat=norm.dim)))
    diff = np.abs(coords[:, None, :] - coords[None, :, :])
    delta = np.minimum(diff, m - diff)
    dist = _metric_from_delta(delta, norm)
    adj = dist <= s
    np.fill_diagonal(adj, False)
    greedy = _greedy_clique(coords, adj)
    members, exact = _max_clique_milp(adj, time_limit)
    witness = greedy if members is None or len(greedy) >= len(members) else members
    pts = coords[list(witness)]
    offsets = tuple(sorted(tuple(int(c) for c in row) for row in pts))
    return len(witness), (exact if members is not None else False), offsets


def build_grid(params: ModelParams, s: int, time_limit: float = 60.0) -> GridModel:
    if s < 3:
        raise ValueError("need s >= 3")
    m = int(math.floor(s / params.r))
    if m < 2 * s + 3:
        raise ValueError(f"grid too coarse: m={m} < 2s+3={2 * s + 3}")
    norm = params.norm
    offs = _neighbor_offsets_cached(norm.kind, norm.dim, s, m)
    tau_s, exact, clique = _tau_s_cached(norm.kind, norm.dim, s, time_limit)
    return GridModel(
        s=s,
        m=m,
        n=params.n,
        r=params.r,
        norm=norm,
        D=params.n / m**norm.dim,
        nbhd_size=len(offs) + 1,
        tau_s=tau_s,
        tau_exact=exact,
        clique_offsets=clique,
    )


def tiny_grid(norm: Norm, m: int, s: int, n: float) -> GridModel:
    """Grid for exact-enumeration oracles; bypasses the m >= 2s+3 precondition."""
    offs = _neighbor_offsets_cached(norm.kind, norm.dim, s, m)
    tau_s, exact, clique = _tau_s_tiny(norm, s, m)
    return GridModel(
        s=s,
        m=m,
        n=n,
        r=s / m,
        norm=norm,
        D=n / m**norm.dim,
        nbhd_size=len(offs) + 1,
        tau_s=tau_s,
        tau_exact=exact,
        clique_offsets=clique,
    )


def clique_translate(grid: GridModel, anchor: CellIndex) -> frozenset:
    """The canonical maximal clique set translated to an anchor cell."""
    m = grid.m
    return frozenset(
        tuple((a + o) % m for a, o in zip(anchor, off)) for off in grid.clique_offsets
    )


def enumerate_max_clique_sets(
    grid: GridModel, anchor: CellIndex, cap: int = 1000, time_limit: float = 60.0
) -> list:
    """All maximum-cardinality diameter<=s index sets containing `anchor` (up to cap)."""
    norm = grid.norm
    s = grid.s
    m = grid.m
    d = norm.dim
    if m < 2 * s + 3:
        coords = np.array(list(itertools.product(range(m), repeat=d)))
        diff = np.abs(coords[:, None, :] - coords[None, :, :])
        delta = np.minimum(diff, m - diff)
        cells = [tuple(int(c) for c in row) for row in coords]
    else:
        window = list(itertools.product(range(-(s + 1), s + 2), repeat=d))
        coords = np.array(window)
        delta = np.abs(coords[:, None, :] - coords[None, :, :])
        cells = [
            tuple((a + o) % m for a, o in zip(anchor, off)) for off in window
        ]
    dist = _metric_from_delta(delta, norm)
    adj = dist <= s
    np.fill_diagonal(adj, False)
    anchor_idx = cells.index(tuple(anchor))
    tau = grid.tau_s
    found = []
    extra = []
    n_v = len(cells)
    comp = ~adj
    np.fill_diagonal(comp, False)
    iu, ju = np.nonzero(np.triu(comp))
    rows = np.repeat(np.arange(len(iu)), 2)
    cols = np.empty(2 * len(iu), dtype=np.int64)
    cols[0::2] = iu
    cols[1::2] = ju
    base = [
        LinearConstraint(
            sparse.csr_matrix((np.ones(2 * len(iu)), (rows, cols)), shape=(len(iu), n_v)),
            -np.inf,
            1.0,
        )
    ]
    lb = np.zeros(n_v)
    lb[anchor_idx] = 1.0
    while len(found) < cap:
        res = milp(
            c=-np.ones(n_v),
            constraints=base + extra,
            integrality=np.ones(n_v),
            bounds=Bounds(lb, np.ones(n_v)),
            options={"time_limit": time_limit, "disp": False},
        )
        if res.x is None or res.status != 0:
            break
        size = int(round(-res.fun))
        if size < tau:
            break
        sol = np.nonzero(res.x > 0.5)[0]
        found.append(frozenset(cells[int(v)] for v in sol))
        # exclusion cut: this exact set cannot reappear in full
        row = np.zeros(n_v)
        row[sol] = 1.0
        extra.append(LinearConstraint(row, -np.inf, size - 1))
    return found


def set_diameter(members, grid: GridModel) -> int:
    members = list(members)
    if not members:
        return 0
    best = 0
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            best = max(best, cell_metric(members[i], members[j], grid))
    return best


def is_maximal_clique_set(members, grid: GridModel) -> bool:
    """Pairwise diameter <= s and no adjacent cell can be added without breaking it."""
    members = set(map(tuple, members))
    if set_diameter(members, grid) > grid.s:
        return False
    m = grid.m
    for I in members:
        for o in neighbor_offsets(grid):
            J = tuple((c + oc) % m for c, oc in zip(I, o))
            if J in members:
                continue
            if all(cell_metric(J, K, grid) <= grid.s for K in members):
                return False
    return True


# ---------------------------------------------------------------------------
# configurations


def coarsen(ps: PointSet, grid: GridModel) -> CellConfig:
    m = grid.m
    d = grid.norm.dim
    if len(ps) == 0:
        return CellConfig(np.zeros(grid.num_cells, dtype=np.int64), grid)
    cells = np.minimum((ps.points * m).astype(np.int64), m - 1)
    flat = np.ravel_multi_index(cells.T, grid.shape)
    counts = np.bincount(flat, minlength=grid.num_cells).astype(np.int64)
    return CellConfig(counts, grid, seed=ps.seed)


def sample_cell_config(grid: GridModel, seed: int, replica: int = 0) -> CellConfig:
    g = rng.generator(seed, replica)
    counts = g.poisson(grid.D, size=grid.num_cells).astype(np.int64)
    return CellConfig(counts, grid, seed=seed)


def sgraded_edge_count(cfg: CellConfig) -> int:
    """|E_s| = sum_I [C(X_I,2) + 1/2 sum_{0<d(I,J)<=s} X_I X_J], exact."""
    grid = cfg.grid
    x = cfg.lattice()
    total = int(x.sum())
    if total and float(total) ** 2 > 2**62:
        raise OverflowError("edge count would overflow int64")
    within = int((x * (x - 1)).sum()) // 2
    cross2 = 0
    for o in neighbor_offsets(grid):
        rolled = np.roll(x, shift=tuple(-c for c in o), axis=tuple(range(x.ndim)))
        cross2 += int((x * rolled).sum())
    assert cross2 % 2 == 0
    return within + cross2 // 2


def expected_sgraded_edges(grid: GridModel) -> float:
    return grid.mu_s


# ---------------------------------------------------------------------------
# hulls and inscribed balls (the geometric side of the localization argument)


def _axis_point_interval_dists(c: float, lo: float, length: float):
    """(min, max) wrapped distance from coordinate c to the interval [lo, lo+length]."""
    u = (c - lo) % 1.0
    if u <= length:
        dmin = 0.0
    else:
        dmin = min(u - length, 1.0 - u)
    # farthest point: an endpoint, unless the antipode falls inside the interval
    anti = (c + 0.5 - lo) % 1.0
    if anti <= length:
        dmax = 0.5
    else:
        e0 = min(u, 1.0 - u)
        u1 = (c - (lo + length)) % 1.0
        e1 = min(u1, 1.0 - u1)
        dmax = max(e0, e1)
    return dmin, dmax


def _cell_vs_ball(I: CellIndex, ball: Ball, m: int):
    """(intersects, contained) of cell I vs the ball; exact for monotone norms."""
    dmin = []
    dmax = []
    for k, c in enumerate(ball.center):
        a, b = _axis_point_interval_dists(c, I[k] / m, 1.0 / m)
        dmin.append(a)
        dmax.append(b)
    lo = float(ball.norm.length(np.array(dmin)))
    hi = float(ball.norm.length(np.array(dmax)))
    return lo <= ball.radius, hi <= ball.radius


def _cell_vs_box(I: CellIndex, box: Box, m: int):
    inter = True
    cont = True
    for k in range(len(I)):
        u = (I[k] / m - box.corner[k]) % 1.0
        side = box.sides[k]
        if not (u <= side or u >= 1.0 - 1.0 / m):
            inter = False
        if not (u + 1.0 / m <= side + 1e-12):
            cont = False
    return inter, cont


def _cell_overlap_box(I: CellIndex, box: Box, m: int):
    """The cell∩box region as per-axis intervals [lo, lo+len] or None if empty."""
    los = []
    lens = []
    for k in range(len(I)):
        u = (I[k] / m - box.corner[k]) % 1.0  # cell start in box coordinates
        side = box.sides[k]
        if u <= side:
            lo = u
            hi = min(u + 1.0 / m, side)
        elif u >= 1.0 - 1.0 / m:
            lo = 0.0
            hi = min(u + 1.0 / m - 1.0, side)
        else:
            return None
        los.append((box.corner[k] + lo) % 1.0)
        lens.append(hi - lo)
    return los, lens


def _cell_relation(I: CellIndex, S: Probe, m: int):
    """Return (intersects, contained) of cell I relative to probe S."""
    if isinstance(S, Ball):
        return _cell_vs_ball(I, S, m)
    if isinstance(S, Box):
        return _cell_vs_box(I, S, m)
    ib, cb = _cell_vs_ball(I, S.ball, m)
    ix, cx = _cell_vs_box(I, S.box, m)
    contained = cb and cx
    if not (ib and ix):
        return False, contained
    # overlap with the box is a box; test its closest point against the ball
    ov = _cell_overlap_box(I, S.box, m)
    if ov is None:
        return False, contained
    los, lens = ov
    dmin = []
    for k, c in enumerate(S.ball.center):
        a, _ = _axis_point_interval_dists(c, los[k], lens[k])
        dmin.append(a)
    inter = float(S.ball.norm.length(np.array(dmin))) <= S.ball.radius
    return inter, contained


def _probe_cell_window(S: Probe, m: int):
    """Cells that could meet S: a wrapped per-axis index range."""
    if isinstance(S, Ball):
        los = [c - S.radius for c in S.center]
        lens = [2 * S.radius] * len(S.center)
    elif isinstance(S, Box):
        los = list(S.corner)
        lens = list(S.sides)
    else:
        los = list(S.box.corner)
        lens = list(S.box.sides)
    ranges = []
    for lo, ln in zip(los, lens):
        a = int(math.floor((lo % 1.0) * m)) - 1
        count = int(math.ceil(ln * m)) + 3
        ranges.append([(a + k) % m for k in range(min(count, m))])
    return itertools.product(*ranges)


def outer_hull(S: Probe, grid: GridModel) -> frozenset:
    """{I : A_I ∩ S nonempty}."""
    m = grid.m
    return frozenset(
        I for I in _probe_cell_window(S, m) if _cell_relation(I, S, m)[0]
    )


def inner_hull(S: Probe, grid: GridModel) -> frozenset:
    """{I : A_I ⊆ S} (closed containment)."""
    m = grid.m
    return frozenset(
        I for I in _probe_cell_window(S, m) if _cell_relation(I, S, m)[1]
    )


@dataclass(frozen=True)
class IndexUnion:
    """The region 𝔘(W) = union of cells of W, as measure + membership."""

    members: frozenset
    grid: GridModel

    @property
    def measure(self) -> float:
        return len(self.members) / self.grid.num_cells

    def contains(self, x) -> bool:
        m = self.grid.m
        cell = tuple(min(int(c * m), m - 1) for c in np.asarray(x, dtype=float))
        return cell in self.members


def index_union(members, grid: GridModel) -> IndexUnion:
    return IndexUnion(members=frozenset(map(tuple, members)), grid=grid)


def inscribed_ball_diameter(members, grid: GridModel, refine: int = 8) -> float:
    """Largest ball diameter that fits inside the union of the member cells.

    Centers are searched on a sub-grid with `refine` points per cell per axis,
    so the result is a lower bound with resolution ~ (1/m)/refine.
    """
    members = [tuple(map(int, I)) for I in members]
    if not members:
        raise ValueError("empty index set")
    m = grid.m
    d = grid.norm.dim
    ref = np.array(members[0])
    offs = []
    for I in members:
        rel = (np.array(I) - ref + m // 2) % m - m // 2
        offs.append(rel)
    offs = np.array(offs)
    lo = offs.min(axis=0)
    hi = offs.max(axis=0)
    margin = int(np.ceil((hi - lo).max() / 2)) + 2
    member_set = {tuple(o) for o in offs}
    grids = [np.arange(lo[k] - margin, hi[k] + margin + 1) for k in range(d)]
    if any(len(gk) >= m for gk in grids):
        # set spans the torus: fall back to all cells (tiny grids only)
        grids = [np.arange(m) for _ in range(d)]
    mesh = np.meshgrid(*grids, indexing="ij")
    allc = np.stack([mm.ravel() for mm in mesh], axis=-1)
    nonmem = np.array(
        [row for row in allc if tuple(row) not in member_set], dtype=float
    )
    # candidate centers: refine^d per member cell, in cell units
    sub = (np.arange(refine) + 0.5) / refine
    shifts = np.array(list(itertools.product(sub, repeat=d)))
    centers = (offs[:, None, :] + shifts[None, :, :]).reshape(-1, d)
    best = 0.0
    chunk = max(1, 2_000_000 // max(1, len(nonmem)))
    for i in range(0, len(centers), chunk):
        cs = centers[i : i + chunk]
        # per-axis distance from center to the non-member cell interval [l, l+1]
        diff_lo = nonmem[None, :, :] - cs[:, None, :]
        diff_hi = cs[:, None, :] - (nonmem[None, :, :] + 1.0)
        gap = np.maximum(np.maximum(diff_lo, diff_hi), 0.0)
        dist = grid.norm.length(gap).min(axis=1)
        best = max(best, float(dist.max()))
    return 2.0 * best / m


# ---------------------------------------------------------------------------
# serialization


def dump_config_csv(cfg: CellConfig) -> str:
    d = cfg.grid.norm.dim
    header = ",".join(f"i{k}" for k in range(d)) + ",count\n"
    rows = []
    nz = np.nonzero(cfg.counts)[0]
    for f in nz:
        I = unflat_index(int(f), cfg.grid.m, d)
        rows.append(",".join(str(c) for c in I) + f",{int(cfg.counts[f])}\n")
    return header + "".join(rows)


def config_sidecar(cfg: CellConfig) -> str:
    g = cfg.grid
    return json.dumps(
        {
            "n": g.n,
            "r": g.r,
            "s": g.s,
            "m": g.m,
            "D": g.D,
            "norm": {"kind": g.norm.kind, "dim": g.norm.dim},
            "seed": cfg.seed,
        },
        sort_keys=True,
    )


def load_config_csv(text: str, grid: GridModel, seed: int | None = None) -> CellConfig:
    lines = [ln for ln in text.strip().splitlines() if ln]
    counts = np.zeros(grid.num_cells, dtype=np.int64)
    for ln in lines[1:]:
        parts = [int(p) for p in ln.split(",")]
        counts[flat_index(tuple(parts[:-1]), grid.m)] = parts[-1]
    return CellConfig(counts, grid, seed=seed)
