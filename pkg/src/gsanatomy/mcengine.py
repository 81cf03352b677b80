"""Reproducible outcome-level Monte Carlo of sequential trials.

Random numbers come from a counter-based generator: replication ``r`` owns the
SplitMix64 stream seeded with ``mix64(seed + (r + 1) * GOLDEN)`` and its j-th
outcome is ``theta + sigma * Phi^-1(u_j)``. Any replication can therefore be
regenerated on its own, and chunking or thread count never changes results.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import _backend
from .design import SequentialDesign, cumulative_sizes
from .errors import ConditioningError, UsageError

THREADS_ENV = "GSANATOMY_THREADS"
_CELLS_PER_CHUNK = 1 << 22


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SimConfig:
    design: SequentialDesign
    theta: float
    replications: int
    seed: int = 20240101
    bins: int = 60

    def __post_init__(self):
        if int(self.replications) < 1:
            raise UsageError("replications must be >= 1")
        if int(self.bins) < 2:
            raise UsageError("bins must be >= 2")
        if not 0 <= int(self.seed) < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        self.design.check()


@dataclass(frozen=True)
class TrialRecord:
    d: int
    t_stage: tuple[float, ...]
    mle: float
    rejected: bool
    sum_x: float


@dataclass(frozen=True, eq=False)
class SimulationResult:
    """All replications of one configuration, stored column-wise."""

    config: SimConfig
    d: np.ndarray
    t_stage: np.ndarray
    sum_x: np.ndarray
    n_stopped: np.ndarray = field(init=False)

    def __post_init__(self):
        cum = np.asarray(cumulative_sizes(self.config.design))
        object.__setattr__(self, "n_stopped", cum[self.d - 1])

    def __len__(self) -> int:
        return self.d.size

    @property
    def mle(self) -> np.ndarray:
        return self.sum_x / self.n_stopped

    @property
    def terminal_z(self) -> np.ndarray:
        return self.t_stage[np.arange(self.d.size), self.d - 1]

    @property
    def rejected(self) -> np.ndarray:
        k = self.config.design.K
        return (self.d < k) | (self.terminal_z > self.config.design.boundaries[-1])

    def stop_frequencies(self) -> np.ndarray:
        k = self.config.design.K
        return np.bincount(self.d, minlength=k + 1)[1:] / self.d.size

    def record(self, i: int) -> TrialRecord:
        d = int(self.d[i])
        return TrialRecord(
            d=d,
            t_stage=tuple(float(v) for v in self.t_stage[i, :d]),
            mle=float(self.mle[i]),
            rejected=bool(self.rejected[i]),
            sum_x=float(self.sum_x[i]),
        )

    def outcomes(self, i: int) -> np.ndarray:
        """Regenerate the observed outcomes of replication ``i``."""
        cfg = self.config
        n = int(self.n_stopped[i])
        return _backend.kernels.outcomes(cfg.seed, i, 1, n, cfg.theta, cfg.design.sigma)[0]


def _chunks(total: int, n_total: int) -> list[tuple[int, int]]:
    size = max(1, min(1 << 16, _CELLS_PER_CHUNK // max(n_total, 1)))
    return [(start, min(size, total - start)) for start in range(0, total, size)]


def run_simulation(cfg: SimConfig, workers: int | None = None) -> SimulationResult:
    """Simulate ``cfg.replications`` trials; output is independent of ``workers``."""
    design = cfg.design
    kern = _backend.kernels
    n_total = int(sum(design.stage_n))
    stage_n = np.asarray(design.stage_n, dtype=np.int64)
    bounds = np.asarray(design.boundaries, dtype=float)

    def block(span):
        start, count = span
        return kern.simulate_block(int(cfg.seed), start, count, float(cfg.theta),
                                   float(design.sigma), stage_n, bounds)

    spans = _chunks(int(cfg.replications), n_total)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(spans) == 1:
        parts = [block(sp) for sp in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, spans))
    d = np.concatenate([p[0] for p in parts])
    z = np.concatenate([p[1] for p in parts])
    tot = np.concatenate([p[2] for p in parts])
    return SimulationResult(cfg, d, z, tot)


@dataclass(frozen=True, eq=False)
class EmpiricalDist:
    condition: str
    statistic: str
    sample: np.ndarray
    count: int
    mean: float
    sd: float

    def cdf(self, y):
        return np.searchsorted(self.sample, np.asarray(y, dtype=float), side="right") / self.count

    def histogram(self, edges) -> np.ndarray:
        counts, _ = np.histogram(self.sample, bins=edges)
        return counts


def condition_mask(result: SimulationResult, condition: str) -> np.ndarray:
    c = condition.replace(" ", "")
    if c == "all":
        return np.ones(len(result), dtype=bool)
    if c.startswith("D>="):
        return result.d >= int(c[3:])
    if c.startswith("D="):
        return result.d == int(c[2:])
    raise UsageError(f"unknown condition {condition!r}")


def empirical_views(result: SimulationResult, condition: str = "all",
                    statistic: str = "mle") -> EmpiricalDist:
    """Empirical law of the estimator or terminal z under ``condition``.

    ``condition`` is ``'all'``, ``'D=d'`` or ``'D>=d'``; ``statistic`` is
    ``'mle'`` or ``'z'``.
    """
    if statistic == "mle":
        values = result.mle
    elif statistic == "z":
        values = result.terminal_z
    else:
        raise UsageError(f"statistic must be 'mle' or 'z', got {statistic!r}")
    sample = np.sort(values[condition_mask(result, condition)])
    if sample.size == 0:
        raise ConditioningError(f"no simulated trial satisfies {condition}")
    return EmpiricalDist(
        condition=condition,
        statistic=statistic,
        sample=sample,
        count=int(sample.size),
        mean=float(sample.mean()),
        sd=float(sample.std(ddof=1)) if sample.size > 1 else 0.0,
    )


def ks_distance(emp: EmpiricalDist, exact_cdf: Callable) -> float:
    """Kolmogorov-Smirnov sup distance between the sample and ``exact_cdf``."""
    sample = getattr(emp, "sample", None)
    if sample is None or len(sample) == 0:
        raise UsageError("KS distance needs a non-empty raw sample")
    n = len(sample)
    f = np.asarray(exact_cdf(sample), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_critical(n: int, level: float = 0.01) -> float:
    """Two-sided KS critical distance at significance ``level`` for sample size ``n``."""
    return float(stats.kstwo.ppf(1.0 - level, n))


def histogram_edges(lo: float, hi: float, bins: int) -> np.ndarray:
    return np.linspace(lo, hi, int(bins) + 1)


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)
