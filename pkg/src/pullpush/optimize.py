"""Frame-design procedures: best q, rate ceilings, guideline tables, crossovers.

The q search is exhaustive (the domain has at most q_max + 1 points and the
weighted objective is not guaranteed unimodal). Rate inversions use plain
bisection on the strictly monotone success-probability maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .frame import FrameConfig, q_max, split_for_q
from .metrics import (
    TrafficLoad,
    Weights,
    evaluate_metrics,
    mean_served_queries,
    push_success_prob,
    push_throughput,
    query_success_prob,
)

_BISECT_REL_TOL = 1e-12
_BISECT_MAX_ITER = 200
_CROSSOVER_REL_TOL = 1e-6
_CROSSOVER_GRID = 256


class InfeasibleTargetError(ValueError):
    """No arrival rate can meet the requested success target."""


class QTableRow(NamedTuple):
    q: int
    p_s_weighted: float
    p_s_query: float
    p_s_push: float
    k_a: int


@dataclass(frozen=True)
class OptimizationResult:
    q_star: int
    p_s_at_star: float
    per_q_table: tuple[QTableRow, ...]


@dataclass(frozen=True)
class GuidelineRow:
    q: int
    lambda_q_max: float  # queries/s
    lambda_p_max: float  # packets/s
    n_served_mean: float  # queries/frame, at lambda_q_max
    throughput_push: float  # packets/s, at lambda_p_max


def optimal_q(
    config: FrameConfig,
    load: TrafficLoad,
    weights: Weights | None = None,
) -> OptimizationResult:
    """Exhaustive scan of q in [0, q_max]; ties go to the smallest q."""
    w = Weights.traffic_fair(load) if weights is None else weights
    table = []
    best_q = 0
    best = -math.inf
    for q in range(q_max(config) + 1):
        rep = evaluate_metrics(config, load, q, w)
        table.append(QTableRow(q, rep.p_s_weighted, rep.p_s_query, rep.p_s_push, rep.k_a))
        if rep.p_s_weighted > best:
            best = rep.p_s_weighted
            best_q = q
    return OptimizationResult(q_star=best_q, p_s_at_star=best, per_q_table=tuple(table))


def _check_p_th(p_th: float) -> float:
    if not (0.0 < p_th < 1.0):
        raise ValueError(f"p_th must lie strictly inside (0, 1), got {p_th!r}")
    return float(p_th)


def _invert_decreasing(f: Callable[[float], float], target: float, hi0: float) -> float:
    """Solve f(x) = target for f strictly decreasing with f(0) >= target.

    Doubles hi0 until f crosses the target, then bisects to relative
    width _BISECT_REL_TOL.
    """
    hi = hi0
    while f(hi) > target:
        hi *= 2.0
        if hi > 1e300:
            raise InfeasibleTargetError("success target is never crossed on the swept range")
    lo = 0.0
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if f(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _BISECT_REL_TOL * hi:
            break
    return 0.5 * (lo + hi)


def max_query_rate(config: FrameConfig, q: int, p_th: float) -> float:
    """Largest query arrival rate [1/s] whose success probability meets p_th."""
    _check_p_th(p_th)
    split_for_q(config, q)  # feasibility check, raises on bad q
    if q == 0:
        raise InfeasibleTargetError("q=0 serves no queries, no arrival rate meets a target")
    t_frame = config.t_frame_s
    return _invert_decreasing(
        lambda lam: query_success_prob(q, lam * t_frame), p_th, hi0=max(q, 1) / t_frame
    )


def max_push_rate(config: FrameConfig, q: int, p_th: float) -> float:
    """Largest packet arrival rate [1/s] whose success probability meets p_th."""
    _check_p_th(p_th)
    k_a = split_for_q(config, q).k_a
    t_frame = config.t_frame_s
    return _invert_decreasing(
        lambda lam: push_success_prob(k_a, lam * t_frame), p_th, hi0=k_a / t_frame
    )


def design_guidelines(config: FrameConfig, p_th: float) -> list[GuidelineRow]:
    """One row per q in [1, q_max]: the rate ceilings at the target and the
    served-query mean / push throughput attained there."""
    _check_p_th(p_th)
    t_frame = config.t_frame_s
    rows = []
    for q in range(1, q_max(config) + 1):
        lam_q = max_query_rate(config, q, p_th)
        lam_p = max_push_rate(config, q, p_th)
        k_a = split_for_q(config, q).k_a
        rows.append(
            GuidelineRow(
                q=q,
                lambda_q_max=lam_q,
                lambda_p_max=lam_p,
                n_served_mean=mean_served_queries(q, lam_q * t_frame),
                throughput_push=push_throughput(k_a, lam_p * t_frame, t_frame),
            )
        )
    return rows


def crossover_push_rate(
    config: FrameConfig,
    q_low: int,
    q_high: int,
    load_ratio: float,
    lambda_p_ceiling: float | None = None,
    grid_points: int = _CROSSOVER_GRID,
) -> float | None:
    """Packet rate where the preference between q_low and q_high flips.

    Sweeps lambda_p over (0, ceiling] with lambda_q = load_ratio * lambda_p
    held proportional and traffic-fair weights; returns the first sign
    change of weighted(q_low) - weighted(q_high), refined by bisection to
    relative width 1e-6, or None when one choice dominates the whole range.
    The default ceiling puts the mean packet count at 3x the access slots
    of q_low.
    """
    if not (0 <= q_low < q_high):
        raise ValueError(f"need 0 <= q_low < q_high, got ({q_low!r}, {q_high!r})")
    if not (isinstance(load_ratio, (int, float)) and 0.0 <= load_ratio < float("inf")):
        raise ValueError(f"load_ratio must be finite and >= 0, got {load_ratio!r}")
    k_a_low = split_for_q(config, q_low).k_a
    split_for_q(config, q_high)  # feasibility check
    t_frame = config.t_frame_s
    ceiling = 3.0 * k_a_low / t_frame if lambda_p_ceiling is None else float(lambda_p_ceiling)
    if not (ceiling > 0.0):
        raise ValueError(f"lambda_p_ceiling must be > 0, got {ceiling!r}")

    def gap(lam_p: float) -> float:
        load = TrafficLoad(lambda_q=load_ratio * lam_p, lambda_p=lam_p)
        w = Weights.traffic_fair(load)
        low = evaluate_metrics(config, load, q_low, w).p_s_weighted
        high = evaluate_metrics(config, load, q_high, w).p_s_weighted
        return low - high

    grid = np.linspace(ceiling / grid_points, ceiling, grid_points)
    values = [gap(x) for x in grid]
    bracket = None
    for i in range(len(grid) - 1):
        if values[i] == 0.0:
            return float(grid[i])
        if values[i] * values[i + 1] < 0.0:
            bracket = (grid[i], grid[i + 1])
            break
    if bracket is None:
        return None
    lo, hi = bracket
    sign_lo = math.copysign(1.0, gap(lo))
    while hi - lo > _CROSSOVER_REL_TOL * hi:
        mid = 0.5 * (lo + hi)
        g = gap(mid)
        if g == 0.0:
            return mid
        if math.copysign(1.0, g) == sign_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
