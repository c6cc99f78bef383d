"""Closed-form performance metrics for one (frame, load, q) design point.

Query service is modelled as an M/D/q/0 loss system, so the success
probability is 1 minus the Erlang-B blocking at the per-frame query load.
This is a tight lower bound of the finite-population truth; the simulator
in :mod:`pullpush.simulate` is the ground truth when the bound matters.

Push access is framed ALOHA over k_a slots on a collision channel: a
packet survives iff it is alone in its slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import erlang_b, _check_mean
from .frame import FrameConfig, split_for_q

_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class TrafficLoad:
    """Arrival rates: lambda_q [queries/s] and lambda_p [packets/s]."""

    lambda_q: float
    lambda_p: float

    def __post_init__(self):
        for name in ("lambda_q", "lambda_p"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0.0 <= v < float("inf")):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")

    def mean_queries_per_frame(self, t_frame_s: float) -> float:
        return self.lambda_q * t_frame_s

    def mean_packets_per_frame(self, t_frame_s: float) -> float:
        return self.lambda_p * t_frame_s


@dataclass(frozen=True)
class Weights:
    """Convex weights for the combined objective; must sum to 1."""

    w_q: float
    w_p: float

    def __post_init__(self):
        if not (0.0 <= self.w_q <= 1.0 and 0.0 <= self.w_p <= 1.0):
            raise ValueError(f"weights must lie in [0, 1], got ({self.w_q!r}, {self.w_p!r})")
        if abs(self.w_q + self.w_p - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {self.w_q + self.w_p!r}")

    @classmethod
    def traffic_fair(cls, load: TrafficLoad) -> "Weights":
        """Weights proportional to the arrival rates; (1/2, 1/2) at zero load."""
        total = load.lambda_q + load.lambda_p
        if total == 0.0:
            return cls(0.5, 0.5)
        return cls(load.lambda_q / total, load.lambda_p / total)


@dataclass(frozen=True)
class MetricsReport:
    """All closed-form metrics for one (config, load, q) point."""

    q: int
    k_a: int
    p_s_query: float
    n_served_mean: float  # queries/frame
    p_s_push: float
    throughput_push: float  # packets/s
    p_s_weighted: float


def query_success_prob(q: int, mean_queries: float) -> float:
    """Probability a query is served: 1 - B(q, mean_queries)."""
    return 1.0 - erlang_b(q, mean_queries)


def mean_served_queries(q: int, mean_queries: float) -> float:
    """Mean successfully served queries per frame (Poisson thinning)."""
    return mean_queries * query_success_prob(q, mean_queries)


def push_success_prob_given(k_a: int, n_packets: int) -> float:
    """Success probability of a packet when exactly n_packets contend.

    0 if k_a = 1 and n_packets > 1; (1 - 1/k_a)^(n_packets - 1) if
    k_a > 1 and n_packets >= 1; 1 otherwise (n_packets <= 1 with a single
    slot, or an empty frame).
    """
    if not (isinstance(k_a, int) and k_a >= 1):
        raise ValueError(f"k_a must be an integer >= 1, got {k_a!r}")
    if not (isinstance(n_packets, int) and n_packets >= 0):
        raise ValueError(f"n_packets must be a nonnegative integer, got {n_packets!r}")
    if n_packets <= 1:
        return 1.0
    if k_a == 1:
        return 0.0
    return (1.0 - 1.0 / k_a) ** (n_packets - 1)


def push_success_prob(k_a: int, mean_packets: float) -> float:
    """Success probability averaged over a Poisson packet count.

    (1 + m) e^{-m} for a single slot. For k_a > 1 the series sums to
    (k_a e^{-m/k_a} - e^{-m}) / (k_a - 1); this form is algebraically the
    same as e^{-m} (k_a e^{(k_a-1)m/k_a} - 1)/(k_a - 1) but cannot
    overflow at large m.
    """
    if not (isinstance(k_a, int) and k_a >= 1):
        raise ValueError(f"k_a must be an integer >= 1, got {k_a!r}")
    m = _check_mean(mean_packets)
    if k_a == 1:
        return (1.0 + m) * math.exp(-m)
    return (k_a * math.exp(-m / k_a) - math.exp(-m)) / (k_a - 1)


def push_throughput(k_a: int, mean_packets: float, t_frame_s: float) -> float:
    """Successfully delivered packets per second: (m / T) e^{-m/k_a}."""
    if not (isinstance(k_a, int) and k_a >= 1):
        raise ValueError(f"k_a must be an integer >= 1, got {k_a!r}")
    if not (0.0 < t_frame_s < float("inf")):
        raise ValueError(f"t_frame_s must be finite and > 0, got {t_frame_s!r}")
    m = _check_mean(mean_packets)
    return m / t_frame_s * math.exp(-m / k_a)


def weighted_success_prob(
    q: int,
    k_a: int,
    mean_queries: float,
    mean_packets: float,
    weights: Weights,
) -> float:
    """Convex combination of query and push success probabilities."""
    return weights.w_q * query_success_prob(q, mean_queries) + weights.w_p * push_success_prob(
        k_a, mean_packets
    )


def evaluate_metrics(
    config: FrameConfig,
    load: TrafficLoad,
    q: int,
    weights: Weights | None = None,
) -> MetricsReport:
    """Evaluate every metric for one design point.

    Default weights are traffic-fair: w_q = lambda_q / (lambda_q + lambda_p),
    degenerating to (1/2, 1/2) at zero load.
    """
    split = split_for_q(config, q)
    w = Weights.traffic_fair(load) if weights is None else weights
    t_frame = config.t_frame_s
    mean_q = load.mean_queries_per_frame(t_frame)
    mean_p = load.mean_packets_per_frame(t_frame)
    p_query = query_success_prob(q, mean_q)
    p_push = push_success_prob(split.k_a, mean_p)
    return MetricsReport(
        q=q,
        k_a=split.k_a,
        p_s_query=p_query,
        n_served_mean=mean_q * p_query,
        p_s_push=p_push,
        throughput_push=push_throughput(split.k_a, mean_p, t_frame),
        p_s_weighted=w.w_q * p_query + w.w_p * p_push,
    )
