"""Pure-numpy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` function by function. The simulator reproduces the
compiled one bit for bit: same counter-based generator, same inverse-CDF
routine, sequential accumulation of outcomes.
"""

import math

import numpy as np
from scipy.special import ndtr, ndtri

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 2.0**-53
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# max number of kernel cells materialized at once
_BLOCK = 1 << 21


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_keys(seed, rep_start, count):
    reps = np.arange(rep_start, rep_start + count, dtype=np.uint64)
    return _mix64(np.uint64(seed) + (reps + np.uint64(1)) * GOLDEN)


def uniforms(seed, rep_start, count, j_start, j_count):
    """Uniforms in (0, 1) at positions ``j_start..j_start+j_count-1`` of each replication stream."""
    keys = stream_keys(seed, rep_start, count)[:, None]
    j = np.arange(j_start, j_start + j_count, dtype=np.uint64)[None, :]
    bits = _mix64(keys + (j + np.uint64(1)) * GOLDEN)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def outcomes(seed, rep_start, count, n_total, theta, sigma):
    """Outcome matrix ``(count, n_total)`` of N(theta, sigma^2) draws by inversion."""
    return theta + sigma * ndtri(uniforms(seed, rep_start, count, 0, n_total))


def normal_mix_pdf(t, s, wf, a, m, b):
    """out[i] = sum_j wf[j] * phi((t[i] - a*s[j] - m)/b) / b."""
    t = np.ascontiguousarray(t, dtype=float)
    s = np.ascontiguousarray(s, dtype=float)
    wf = np.ascontiguousarray(wf, dtype=float)
    out = np.empty(t.size)
    shift = a * s + m
    step = max(1, _BLOCK // max(s.size, 1))
    for i in range(0, t.size, step):
        z = (t[i : i + step, None] - shift[None, :]) / b
        out[i : i + step] = np.exp(-0.5 * z * z) @ wf
    return out * (_INV_SQRT_2PI / b)


def normal_mix_cdf(t, s, wf, a, m, b, upper=False):
    """out[i] = sum_j wf[j] * Phi(+-(t[i] - a*s[j] - m)/b); ``upper`` gives the survival form."""
    t = np.ascontiguousarray(t, dtype=float)
    s = np.ascontiguousarray(s, dtype=float)
    wf = np.ascontiguousarray(wf, dtype=float)
    out = np.empty(t.size)
    shift = a * s + m
    sign = -1.0 if upper else 1.0
    step = max(1, _BLOCK // max(s.size, 1))
    for i in range(0, t.size, step):
        z = (t[i : i + step, None] - shift[None, :]) / b
        out[i : i + step] = ndtr(sign * z) @ wf
    return out


def simulate_block(seed, rep_start, count, theta, sigma, stage_n, boundaries):
    """Simulate ``count`` trials; returns (stopping stage, cumulative z path, outcome sum)."""
    stage_n = np.asarray(stage_n, dtype=np.int64)
    bounds = np.asarray(boundaries, dtype=float)
    k = stage_n.size
    cum = np.cumsum(stage_n)
    x = outcomes(seed, rep_start, count, int(cum[-1]), theta, sigma)
    sums = np.cumsum(x, axis=1)
    del x
    d = np.full(count, k, dtype=np.int32)
    z = np.full((count, k), np.nan)
    total = np.empty(count)
    alive = np.ones(count, dtype=bool)
    for stage in range(k):
        ncum = int(cum[stage])
        zs = sums[:, ncum - 1] / (sigma * math.sqrt(ncum))
        z[alive, stage] = zs[alive]
        total[alive] = sums[alive, ncum - 1]
        if stage < k - 1:
            stop = alive & (zs > bounds[stage])
            d[stop] = stage + 1
            alive &= ~stop
    return d, z, total
