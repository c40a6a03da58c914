"""Rate function and non-asymptotic sandwich bounds for the upper tail.

The upper tail of the edge count satisfies a large deviation principle at
speed sqrt(mu) log n with rate I(t) = ((2-p)/2) sqrt(2t).  At desk scale the
limit is far away; what can be checked is that estimates sit between the
explicit lower and upper bounds from the localization argument, and that the
bracket tightens toward -I(t) as n grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .grid import GridModel
from .points import ModelParams
from .sampling import TailEstimate
from .stats import derived_scales, log_poisson_pmf, log_poisson_sf


def rate_function(t: float, p: float) -> float:
    """I(t) = ((2 - p)/2) sqrt(2 t)."""
    if not (0.0 < p < 2.0):
        raise ValueError("need 0 < p < 2")
    if t <= 0:
        raise ValueError("need t > 0")
    return 0.5 * (2.0 - p) * math.sqrt(2.0 * t)


def normalized_log_tail(estimate: TailEstimate, mu: float, n: float):
    """(value, err) with value = log_prob / (sqrt(mu) log n); err by delta method."""
    denom = math.sqrt(mu) * math.log(n)
    value = estimate.log_prob / denom
    err = estimate.rel_std_err / denom if math.isfinite(estimate.rel_std_err) else math.inf
    return value, err


@dataclass(frozen=True)
class SandwichBound:
    t: float
    eps: float
    lower_log: float
    upper_log: float
    components: dict

    def normalized(self, mu: float, n: float):
        denom = math.sqrt(mu) * math.log(n)
        return self.lower_log / denom, self.upper_log / denom


def sandwich_bounds(
    params: ModelParams, grid: GridModel, t: float, eps: float
) -> SandwichBound:
    """Non-asymptotic bracket for log P[(|E| - mu)/mu >= t].

    Upper: union bound over the at most m^{d tau_s} maximal clique sets, each
    holding at most Poisson(w) points that must reach sqrt(2 t mu)(1 - eps).
    Lower: plant ceil(sqrt(2 t mu) + n^z) points in one ball of diameter r.
    Exact Poisson tails are used on both sides (tighter than, and dominated
    by, the Chernoff forms used in the derivation); the (1 - eps) side events
    of the argument are assumptions recorded in `components`.
    """
    if not (0.0 < eps < 0.5):
        raise ValueError("need 0 < eps < 1/2")
    mu = params.mu
    n = params.n
    d = params.norm.dim
    scales = derived_scales(grid, delta_tilde=t)
    w = scales.w
    target = math.sqrt(2.0 * t * mu)
    log_comb = d * grid.tau_s * math.log(grid.m)
    log_tail_up = log_poisson_sf(w, target * (1.0 - eps))
    upper = log_comb - math.log1p(-eps) + log_tail_up
    k = math.ceil(target + scales.n_z)
    lam = n * params.tau
    log_point = log_poisson_pmf(lam, k)
    lower = math.log1p(-eps) + log_point
    return SandwichBound(
        t=t,
        eps=eps,
        lower_log=lower,
        upper_log=upper,
        components={
            "log_clique_count": log_comb,
            "log_poisson_upper_tail": log_tail_up,
            "upper_threshold": target * (1.0 - eps),
            "w": w,
            "planted_count": k,
            "ball_mean": lam,
            "log_poisson_point_mass": log_point,
            "assumed_side_event_prob": 1.0 - eps,
        },
    )
