"""Shared numerical primitives: Poisson pmf, Poisson sampling, Erlang-B.

All three are written for stability at the loads this package deals with
(per-frame means up to ~100, server counts up to a few dozen): the pmf is
evaluated in log space, Erlang-B uses the forward recursion instead of
factorial ratios, and sampling is exact inversion with a fixed,
documented uniform-draw budget per call.
"""

from __future__ import annotations

import math

import numpy as np

# Largest per-chunk mean for inversion sampling. Means above this are
# split into ceil(mean / 10) equal sub-means and drawn as a sum of
# independent inversions (Poisson additivity keeps this exact).
_INVERSION_MAX_MEAN = 10.0

# CDF tables are extended until the remaining tail mass drops below this.
_CDF_TAIL = 1e-17


def _check_mean(mean: float) -> float:
    mean = float(mean)
    if math.isnan(mean) or math.isinf(mean) or mean < 0.0:
        raise ValueError(f"mean must be finite and >= 0, got {mean!r}")
    return mean


def poisson_pmf(k: int, mean: float) -> float:
    """P(X = k) for X ~ Poisson(mean).

    Evaluated as exp(k*ln(mean) - mean - lgamma(k+1)) so that large k and
    large means neither overflow nor lose the leading digits.
    """
    mean = _check_mean(mean)
    if k < 0 or k != int(k):
        raise ValueError(f"k must be a nonnegative integer, got {k!r}")
    if mean == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(mean) - mean - math.lgamma(k + 1))


def _inversion_cdf(mean: float) -> np.ndarray:
    """Cumulative Poisson probabilities for inversion, tail < _CDF_TAIL."""
    term = math.exp(-mean)
    cdf = [term]
    # Hard cap: the tail beyond mean + 15*sqrt(mean) + 60 is far below
    # _CDF_TAIL for any mean <= _INVERSION_MAX_MEAN.
    k_cap = 1 + int(mean + 15.0 * math.sqrt(mean) + 60.0)
    k = 0
    while 1.0 - cdf[-1] > _CDF_TAIL and k < k_cap:
        k += 1
        term *= mean / k
        cdf.append(cdf[-1] + term)
    return np.asarray(cdf)


def sample_poisson_array(mean: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized Poisson draws; the array analogue of :func:`sample_poisson`.

    Consumes exactly ``ceil(mean / 10)`` batches of ``size`` uniforms from
    ``rng`` (zero for ``mean == 0``), in chunk order, so a sequence of
    calls is reproducible from the seed alone.
    """
    mean = _check_mean(mean)
    out = np.zeros(size, dtype=np.int64)
    if mean == 0.0 or size == 0:
        return out
    n_chunks = max(1, math.ceil(mean / _INVERSION_MAX_MEAN))
    cdf = _inversion_cdf(mean / n_chunks)
    top = len(cdf) - 1
    for _ in range(n_chunks):
        u = rng.random(size)
        out += np.minimum(np.searchsorted(cdf, u, side="left"), top)
    return out


def sample_poisson(mean: float, rng: np.random.Generator) -> int:
    """One draw from Poisson(mean), by inversion of the CDF.

    Means below 10 use a single sequential-search inversion (one uniform
    per draw). Larger means are drawn as the sum of ceil(mean/10)
    independent inversions with equal sub-means, which is exact and keeps
    the uniform consumption fixed at ceil(mean/10) per call.
    """
    return int(sample_poisson_array(mean, 1, rng)[0])


def erlang_b(servers: int, load: float) -> float:
    """Erlang-B blocking probability B(servers, load).

    Forward recursion B(0) = 1, B(m) = E*B(m-1) / (m + E*B(m-1)); exact in
    exact arithmetic and free of the factorial overflow of the ratio form.
    """
    if servers < 0 or servers != int(servers):
        raise ValueError(f"servers must be a nonnegative integer, got {servers!r}")
    load = _check_mean(load)
    b = 1.0
    for m in range(1, int(servers) + 1):
        eb = load * b
        b = eb / (m + eb)
    return b
