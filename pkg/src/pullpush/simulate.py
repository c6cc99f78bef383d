"""Frame-stepped Monte Carlo of the shared pull/push frame.

Dynamics per frame: queries arriving in frame t are accumulated and the
first q of them (FIFO) are served in frame t+1; the rest are discarded
(one-frame deadline). A served query never fails, because wake-up is
ID-addressed and scheduled. Independently, each of the frame's push
packets picks one of the k_a access slots uniformly and survives iff it
is alone in its slot.

Reproducibility: replication r draws from a PCG64 generator keyed by
``numpy.random.SeedSequence(entropy=seed, spawn_key=(r,))``. Within a
replication the stream is consumed in a fixed, documented order: all
query arrival counts first (one inversion chunk at a time, see
:func:`pullpush.core.sample_poisson_array`), then all packet counts, then
slot picks packet-by-packet in frame order, batched over fixed 32768-frame
chunks. Results are therefore bitwise reproducible from (seed, r) alone
and independent of how replications are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import sample_poisson_array
from .frame import FrameConfig, split_for_q
from .metrics import MetricsReport, TrafficLoad, evaluate_metrics

_Z95 = 1.959963984540054  # two-sided 95% normal quantile
_CHUNK_FRAMES = 1 << 15  # fixed chunk so memory stays bounded and streams stay aligned

METRIC_KEYS = ("p_s_query", "p_s_push", "throughput_push", "n_served_mean")


@dataclass(frozen=True)
class SimConfig:
    frames: int = 100_000
    seed: int = 1
    replications: int = 1
    warmup_frames: int = 1  # populates the serve-next-frame pipeline

    def __post_init__(self):
        if not (isinstance(self.frames, int) and self.frames >= 1):
            raise ValueError(f"frames must be an integer >= 1, got {self.frames!r}")
        if not (isinstance(self.replications, int) and self.replications >= 1):
            raise ValueError(f"replications must be an integer >= 1, got {self.replications!r}")
        if not (isinstance(self.warmup_frames, int) and self.warmup_frames >= 0):
            raise ValueError(f"warmup_frames must be an integer >= 0, got {self.warmup_frames!r}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ValueError(f"seed must fit an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class SimResult:
    """Empirical estimates plus raw counts and 95% half-widths."""

    p_s_query_hat: float
    p_s_push_hat: float
    throughput_push_hat: float
    n_served_mean_hat: float
    queries_total: int
    queries_served: int
    queries_discarded: int
    packets_total: int
    packets_success: int
    frames_observed: int
    half_width_95: dict[str, float]
    zero_query_sample: bool = False


@dataclass(frozen=True)
class ValidationRow:
    q: int
    lambda_q: float
    lambda_p: float
    analytic: MetricsReport
    empirical: SimResult
    dev_query: float  # empirical - analytic
    dev_push: float
    dev_throughput: float
    flags: tuple[str, ...]


def replication_stream(seed: int, replication: int = 0) -> np.random.Generator:
    """Independent generator for one replication (PCG64, spawn-keyed)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replication,))
    return np.random.Generator(np.random.PCG64(ss))


def slot_successes(packet_counts: np.ndarray, k_a: int, rng: np.random.Generator) -> np.ndarray:
    """Per-frame count of packets that landed alone in their slot.

    Each packet picks one of k_a slots uniformly; draws are consumed
    packet-by-packet in frame order.
    """
    counts = np.asarray(packet_counts, dtype=np.int64)
    n_frames = len(counts)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(n_frames)
    slots = rng.integers(0, k_a, size=total)
    frame_id = np.repeat(np.arange(n_frames, dtype=np.int64), counts)
    key = frame_id * k_a + slots
    occupancy = np.bincount(key, minlength=n_frames * k_a)
    alone = occupancy[key] == 1
    return np.bincount(frame_id, weights=alone, minlength=n_frames)


@dataclass
class _RepStats:
    replication: int
    frames: int
    queries_total: int = 0
    queries_served: int = 0
    served_sum: float = 0.0
    served_sumsq: float = 0.0
    packets_total: int = 0
    packets_success: int = 0
    push_w_sum: float = 0.0
    push_w_sumsq: float = 0.0
    succ_sumsq: float = 0.0

    def estimates(self, t_frame_s: float) -> dict[str, float]:
        return {
            "p_s_query": self.queries_served / self.queries_total if self.queries_total else 1.0,
            "p_s_push": self.push_w_sum / self.frames,
            "throughput_push": self.packets_success / (self.frames * t_frame_s),
            "n_served_mean": self.queries_served / self.frames,
        }


def _simulate_one(
    config: FrameConfig,
    load: TrafficLoad,
    q: int,
    sim: SimConfig,
    replication: int,
) -> _RepStats:
    split = split_for_q(config, q)
    rng = replication_stream(sim.seed, replication)
    t_frame = config.t_frame_s
    mean_q = load.mean_queries_per_frame(t_frame)
    mean_p = load.mean_packets_per_frame(t_frame)
    frames = sim.frames
    warmup = sim.warmup_frames
    stats = _RepStats(replication=replication, frames=frames)

    # Query pipeline: the batch arriving in frame t is resolved in frame
    # t+1, so the batches resolved inside the observed window are those of
    # frames warmup-1 .. warmup+frames-2. With warmup=0 the first observed
    # frame resolves an empty pipeline.
    n_batches = frames + warmup - 1 if warmup >= 1 else frames - 1
    arrivals = sample_poisson_array(mean_q, max(n_batches, 0), rng)
    if warmup >= 1:
        resolved = arrivals[warmup - 1 :]
    else:
        resolved = np.concatenate([np.zeros(1, dtype=np.int64), arrivals])
    served = np.minimum(resolved, q)
    stats.queries_total = int(resolved.sum())
    stats.queries_served = int(served.sum())
    stats.served_sum = float(served.sum())
    stats.served_sumsq = float(np.dot(served, served))

    # Push side: packet counts for the observed frames, then slot picks.
    n_p = sample_poisson_array(mean_p, frames, rng)
    stats.packets_total = int(n_p.sum())
    for start in range(0, frames, _CHUNK_FRAMES):
        chunk = n_p[start : start + _CHUNK_FRAMES]
        succ = slot_successes(chunk, split.k_a, rng)
        w = np.where(chunk > 0, succ / np.maximum(chunk, 1), 1.0)
        stats.packets_success += int(succ.sum())
        stats.push_w_sum += float(w.sum())
        stats.push_w_sumsq += float(np.dot(w, w))
        stats.succ_sumsq += float(np.dot(succ, succ))
    return stats


def _sample_half_width(total: float, sumsq: float, n: int) -> float:
    """95% half-width of a mean of n per-frame samples."""
    if n < 2:
        return 0.0
    var = max(sumsq - total * total / n, 0.0) / (n - 1)
    return _Z95 * math.sqrt(var / n)


def _merge(stats: list[_RepStats], t_frame_s: float) -> SimResult:
    stats = sorted(stats, key=lambda s: s.replication)  # order-insensitive merge
    frames_observed = sum(s.frames for s in stats)
    queries_total = sum(s.queries_total for s in stats)
    queries_served = sum(s.queries_served for s in stats)
    packets_total = sum(s.packets_total for s in stats)
    packets_success = sum(s.packets_success for s in stats)
    push_w_sum = sum(s.push_w_sum for s in stats)

    zero_query = queries_total == 0
    p_query = queries_served / queries_total if not zero_query else 1.0
    p_push = push_w_sum / frames_observed
    throughput = packets_success / (frames_observed * t_frame_s)
    n_served = queries_served / frames_observed

    if len(stats) == 1:
        s = stats[0]
        hw = {
            "p_s_query": (
                _Z95 * math.sqrt(p_query * (1.0 - p_query) / queries_total)
                if not zero_query
                else 0.0
            ),
            "p_s_push": _sample_half_width(s.push_w_sum, s.push_w_sumsq, s.frames),
            "throughput_push": _sample_half_width(
                float(s.packets_success), s.succ_sumsq, s.frames
            )
            / t_frame_s,
            "n_served_mean": _sample_half_width(s.served_sum, s.served_sumsq, s.frames),
        }
    else:
        per_rep = [s.estimates(t_frame_s) for s in stats]
        n_reps = len(stats)
        hw = {}
        for key in METRIC_KEYS:
            values = np.array([e[key] for e in per_rep])
            hw[key] = _Z95 * float(values.std(ddof=1)) / math.sqrt(n_reps)

    return SimResult(
        p_s_query_hat=p_query,
        p_s_push_hat=p_push,
        throughput_push_hat=throughput,
        n_served_mean_hat=n_served,
        queries_total=queries_total,
        queries_served=queries_served,
        queries_discarded=queries_total - queries_served,
        packets_total=packets_total,
        packets_success=packets_success,
        frames_observed=frames_observed,
        half_width_95=hw,
        zero_query_sample=zero_query,
    )


def simulate(config: FrameConfig, load: TrafficLoad, q: int, sim: SimConfig) -> SimResult:
    """Run ``sim.replications`` independent replications and merge them.

    Estimators: served/total for query success; the frame average of
    (1 if no packets else successes/packets) for push success, which is
    the sample analogue of the analytic average over the packet count;
    total successes/(frames * T_frame) for throughput. Half-widths are
    normal-approximation 95% intervals over per-frame samples, or over
    replication means when replications > 1.
    """
    stats = [_simulate_one(config, load, q, sim, r) for r in range(sim.replications)]
    return _merge(stats, config.t_frame_s)


def validate_grid(
    config: FrameConfig,
    q_list: list[int],
    lambda_q_list: list[float],
    lambda_p_list: list[float],
    sim: SimConfig,
) -> tuple[list[ValidationRow], dict]:
    """Simulate every (q, lambda_q, lambda_p) grid point against the closed forms.

    Grid point i runs with seed ``sim.seed + i`` so each row is independent
    and individually reproducible with :func:`simulate`. A push metric is
    flagged when |empirical - analytic| exceeds 4 half-widths; the query
    metric only when empirical falls more than 4 half-widths BELOW the
    analytic value, which is a lower bound of the finite-population truth.
    """
    if not (q_list and lambda_q_list and lambda_p_list):
        raise ValueError("q_list, lambda_q_list and lambda_p_list must be nonempty")
    rows = []
    index = 0
    for q in q_list:
        for lam_q in lambda_q_list:
            for lam_p in lambda_p_list:
                load = TrafficLoad(lambda_q=lam_q, lambda_p=lam_p)
                analytic = evaluate_metrics(config, load, q)
                empirical = simulate(config, load, q, replace(sim, seed=sim.seed + index))
                dev_query = empirical.p_s_query_hat - analytic.p_s_query
                dev_push = empirical.p_s_push_hat - analytic.p_s_push
                dev_thr = empirical.throughput_push_hat - analytic.throughput_push
                flags = []
                if abs(dev_push) > 4.0 * empirical.half_width_95["p_s_push"]:
                    flags.append("push_success_deviation")
                if abs(dev_thr) > 4.0 * empirical.half_width_95["throughput_push"]:
                    flags.append("push_throughput_deviation")
                if dev_query < -4.0 * empirical.half_width_95["p_s_query"]:
                    flags.append("query_lower_bound_violation")
                rows.append(
                    ValidationRow(
                        q=q,
                        lambda_q=lam_q,
                        lambda_p=lam_p,
                        analytic=analytic,
                        empirical=empirical,
                        dev_query=dev_query,
                        dev_push=dev_push,
                        dev_throughput=dev_thr,
                        flags=tuple(flags),
                    )
                )
                index += 1
    summary = {
        "points": len(rows),
        "flags": sum(len(r.flags) for r in rows),
        "max_abs_deviation_push": max(abs(r.dev_push) for r in rows),
        "max_lower_bound_violation_query": max(max(-r.dev_query, 0.0) for r in rows),
    }
    return rows, summary
