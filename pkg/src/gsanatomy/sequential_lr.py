"""Likelihood machinery for stopped samples and the sequential LR test.

For normal outcomes with known sigma the stopped likelihood is the ordinary
product of normal densities on the adapted support, so the MLE is the sample
mean and the interim log-LR is linear in the running sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _backend
from .design import Hypotheses, SequentialDesign, cumulative_sizes, operational_characteristics
from .errors import DomainError, InputError, SetupError, SupportError, UsageError
from .subdensity import is_possible_path

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class StoppedSample:
    """Outcomes observed up to (and including) stopping stage ``d``."""

    d: int
    x: np.ndarray
    design: SequentialDesign

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        object.__setattr__(self, "x", x)
        if not 1 <= self.d <= self.design.K:
            raise UsageError(f"stage {self.d} outside 1..{self.design.K}")
        need = cumulative_sizes(self.design)[self.d - 1]
        if x.size != need:
            raise UsageError(f"stage {self.d} needs {need} outcomes, got {x.size}")

    def statistic_path(self) -> np.ndarray:
        """Cumulative z-statistics at stages 1..d."""
        return statistic_path(self.design, self.x)[: self.d]

    def in_support(self) -> bool:
        """Whether the sample could have been observed with stopping at ``d``."""
        path = self.statistic_path()
        if not is_possible_path(self.design, path):
            return False
        if self.d < self.design.K:
            return bool(path[-1] > self.design.boundaries[self.d - 1])
        return True


@dataclass(frozen=True)
class SufficientStat:
    sum_x: float
    d: int


@dataclass(frozen=True)
class LRDecision:
    stage: int
    log_lr: float
    rejected: bool
    statistic: float


def statistic_path(design: SequentialDesign, x) -> np.ndarray:
    """Cumulative z-statistics for every stage completed by the outcomes ``x``."""
    x = np.asarray(x, dtype=float)
    sums = np.cumsum(x)
    out = []
    for n in cumulative_sizes(design):
        if n > x.size:
            break
        out.append(sums[n - 1] / (design.sigma * math.sqrt(n)))
    return np.asarray(out)


def sufficient_statistic(sample: StoppedSample) -> SufficientStat:
    return SufficientStat(float(np.cumsum(sample.x)[-1]), sample.d)


def joint_log_density(sample: StoppedSample, theta: float) -> float:
    """Log of the stopped joint density of the outcomes and the stopping stage."""
    if not sample.in_support():
        raise SupportError("sample lies outside the adapted support (density is zero)")
    sigma = sample.design.sigma
    z = (sample.x - theta) / sigma
    return float(-0.5 * np.dot(z, z) - sample.x.size * (LOG_SQRT_2PI + math.log(sigma)))


def mle(sample: StoppedSample) -> float:
    """Maximum likelihood estimate of the mean; the stopping rule does not change it."""
    if sample.x.size == 0:
        raise UsageError("empty sample")
    return float(np.cumsum(sample.x)[-1]) / sample.x.size


def recursive_mle(sample: StoppedSample) -> float:
    """MLE built stage by stage from the previous cumulative and the new stage-specific means."""
    if sample.x.size == 0:
        raise UsageError("empty sample")
    est = 0.0
    n_prev = 0
    for n_d, n_cum in zip(sample.design.stage_n, cumulative_sizes(sample.design)[: sample.d]):
        stage_mean = float(np.mean(sample.x[n_prev:n_cum]))
        est = (n_prev / n_cum) * est + (n_d / n_cum) * stage_mean
        n_prev = n_cum
    return est


def interim_log_lr(sum_x: float, n_cum: int, theta0: float, theta1: float,
                   sigma: float = 1.0) -> float:
    """Log LR of theta1 against theta0 given the running sum of ``n_cum`` outcomes.

    Conditioning on having reached the stage cancels from the ratio, leaving
    the exponential-family form ``(theta1 - theta0) * S / sigma^2 -
    n (theta1^2 - theta0^2) / (2 sigma^2)``. Equal hypotheses give 0.
    """
    if theta1 < theta0:
        raise DomainError("theta1 must not be below theta0")
    return ((theta1 - theta0) * sum_x - n_cum * (theta1**2 - theta0**2) / 2.0) / sigma**2


def sample_log_lr(sample: StoppedSample, theta0: float, theta1: float) -> float:
    n = cumulative_sizes(sample.design)[sample.d - 1]
    return interim_log_lr(float(np.cumsum(sample.x)[-1]), n, theta0, theta1, sample.design.sigma)


def log_lr_threshold(design: SequentialDesign, hyp: Hypotheses, d: int) -> float:
    """Log-LR value equivalent to the boundary ``c_d`` at stage ``d``."""
    n = cumulative_sizes(design)[d - 1]
    s = design.boundaries[d - 1] * design.sigma * math.sqrt(n)
    return interim_log_lr(s, n, hyp.theta0, hyp.theta1, design.sigma)


def run_sequential_lr_test(stream: Iterable[Sequence[float]], design: SequentialDesign,
                           hyp: Hypotheses) -> LRDecision:
    """Run the interim tests stage by stage, pulling one stage of outcomes at a time.

    Stops at the first stage whose cumulative z exceeds its boundary; ties
    continue. Exactly the outcomes up to the stopping stage are consumed.
    """
    design.check()
    it = iter(stream)
    total = 0.0
    n_cum = 0
    for d, (n_d, c) in enumerate(zip(design.stage_n, design.boundaries), start=1):
        try:
            block = np.asarray(next(it), dtype=float).ravel()
        except StopIteration:
            raise InputError(f"outcome stream ended before stage {d}") from None
        if block.size != n_d:
            raise InputError(f"stage {d} needs {n_d} outcomes, got {block.size}")
        for v in block:
            total += v
        n_cum += n_d
        z = total / (design.sigma * math.sqrt(n_cum))
        llr = interim_log_lr(total, n_cum, hyp.theta0, hyp.theta1, design.sigma)
        if z > c or d == design.K:
            return LRDecision(stage=d, log_lr=llr, rejected=bool(z > c), statistic=z)
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# power comparison against a competing sequential test

StatisticMap = Callable[[np.ndarray, SequentialDesign], np.ndarray]


def lr_statistic(x_cum: np.ndarray, design: SequentialDesign) -> np.ndarray:
    """Cumulative z-statistic of a block of outcome rows (the LR-equivalent statistic)."""
    n = x_cum.shape[1]
    return x_cum.sum(axis=1) / (design.sigma * math.sqrt(n))


def sign_statistic(x_cum: np.ndarray, design: SequentialDesign) -> np.ndarray:
    """Standardized count of positive outcomes."""
    n = x_cum.shape[1]
    return ((x_cum > 0).sum(axis=1) - 0.5 * n) / (0.5 * math.sqrt(n))


@dataclass(frozen=True)
class CompetingTest:
    """A sequential test defined by a statistic map and randomized boundaries.

    At stage d it rejects when the statistic exceeds ``boundaries[d]``, and
    with probability ``gammas[d]`` when it equals it exactly.
    """

    name: str
    statistic: StatisticMap
    boundaries: tuple[float, ...]
    gammas: tuple[float, ...]


@dataclass(frozen=True)
class PowerRow:
    theta: float
    power_lr: float
    se_lr: float
    power_comp: float
    se_comp: float
    se_diff: float
    flag: bool
    beta_stage_lr: tuple[float, ...]
    identity_gap: float


@dataclass(frozen=True)
class ComparisonReport:
    competitor: CompetingTest
    alpha_stage: tuple[float, ...]
    replications: int
    seed: int
    rows: tuple[PowerRow, ...]

    @property
    def any_flag(self) -> bool:
        return any(r.flag for r in self.rows)


def _stage_statistics(design: SequentialDesign, maps: Sequence[StatisticMap], theta: float,
                      seed: int, rep_start: int, count: int):
    """Every map's statistic at every stage plus one auxiliary uniform per stage."""
    kern = _backend.kernels
    cum = cumulative_sizes(design)
    x = kern.outcomes(seed, rep_start, count, cum[-1], theta, design.sigma)
    stats = [np.column_stack([f(x[:, :n], design) for n in cum]) for f in maps]
    aux = kern.uniforms(seed, rep_start, count, cum[-1], design.K)
    return stats, aux


def _simulate_statistics(design, maps, theta, seed, reps):
    chunk = max(1, min(20000, (1 << 22) // sum(design.stage_n)))
    parts = [_stage_statistics(design, maps, theta, seed, s, min(chunk, reps - s))
             for s in range(0, reps, chunk)]
    stats = [np.vstack([p[0][i] for p in parts]) for i in range(len(maps))]
    return stats, np.vstack([p[1] for p in parts])


def _decide(stats: np.ndarray, aux: np.ndarray, boundaries, gammas) -> tuple[np.ndarray, np.ndarray]:
    """Stopping stage (1-based) and rejection flag for each replication."""
    reps, k = stats.shape
    d = np.full(reps, k, dtype=np.int32)
    rejected = np.zeros(reps, dtype=bool)
    alive = np.ones(reps, dtype=bool)
    for j in range(k):
        s = stats[:, j]
        rej = (s > boundaries[j]) | ((s == boundaries[j]) & (aux[:, j] < gammas[j]))
        hit = alive & rej
        rejected |= hit
        if j < k - 1:
            d[hit] = j + 1
            alive &= ~hit
    return d, rejected


def calibrate_competitor(design: SequentialDesign, alpha_stage: Sequence[float], statistic: StatisticMap,
                         name: str = "competitor", theta0: float = 0.0, replications: int = 10**6,
                         seed: int = 1) -> CompetingTest:
    """Randomized boundaries giving ``statistic`` the stage-wise type I errors ``alpha_stage``.

    Stage d is calibrated on the null replications that continued past
    stages 1..d-1 under the already-calibrated earlier boundaries.
    """
    (stats,), aux = _simulate_statistics(design, [statistic], theta0, seed, replications)
    alive = np.ones(stats.shape[0], dtype=bool)
    bounds, gammas = [], []
    for j, a in enumerate(alpha_stage):
        s = np.sort(stats[alive, j])
        n = s.size
        if n == 0:
            raise SetupError(f"{name}: no null replication reaches stage {j + 1}")
        target = a * n
        # smallest boundary value with at most `target` strictly greater observations
        idx = n - int(math.floor(target)) - 1
        if idx < 0:
            raise SetupError(f"{name}: stage {j + 1} alpha {a} cannot be spent")
        c = float(s[idx])
        above = n - np.searchsorted(s, c, side="right")
        ties = np.searchsorted(s, c, side="right") - np.searchsorted(s, c, side="left")
        gamma = (target - above) / ties
        if not 0.0 <= gamma <= 1.0:
            raise SetupError(f"{name}: stage {j + 1} randomization weight {gamma} out of range")
        bounds.append(c)
        gammas.append(float(gamma))
        col = stats[:, j]
        rej = (col > c) | ((col == c) & (aux[:, j] < gamma))
        alive &= ~rej
    return CompetingTest(name, statistic, tuple(bounds), tuple(gammas))


def power_dominance_trial(design: SequentialDesign, hyp: Hypotheses, competitor: CompetingTest | StatisticMap,
                          thetas: Sequence[float], replications: int = 10**5, seed: int = 7,
                          calibration_replications: int = 10**6, calibration_seed: int | None = None,
                          name: str = "competitor") -> ComparisonReport:
    """Monte Carlo power of the LR sequential test versus a calibrated competitor.

    Both tests see the same outcomes at every theta (common random numbers:
    one uniform stream per replication, shifted by theta). A row is flagged
    when the competitor's power exceeds the LR power by more than three
    standard errors of the paired difference.
    """
    oc = operational_characteristics(design, hyp)
    alpha_stage = oc.alpha_stage
    if not isinstance(competitor, CompetingTest):
        cal_seed = seed + 1 if calibration_seed is None else calibration_seed
        competitor = calibrate_competitor(design, alpha_stage, competitor, name=name, theta0=hyp.theta0,
                                          replications=calibration_replications, seed=cal_seed)
    if len(competitor.boundaries) != design.K:
        raise SetupError("competitor needs one boundary per stage")

    k = design.K
    zeros = (0.0,) * k
    rows = []
    for theta in thetas:
        (z, s), aux = _simulate_statistics(design, [lr_statistic, competitor.statistic], float(theta),
                                           seed, replications)
        d_lr, rej_lr = _decide(z, aux, design.boundaries, zeros)
        _, rej_c = _decide(s, aux, competitor.boundaries, competitor.gammas)
        p_lr, p_c = rej_lr.mean(), rej_c.mean()
        diff = rej_c.astype(float) - rej_lr.astype(float)
        se_diff = float(diff.std(ddof=1) / math.sqrt(replications))
        betas = []
        for j in range(1, k + 1):
            reached = d_lr >= j
            n_reached = int(reached.sum())
            if n_reached == 0:
                betas.append(math.nan)
                continue
            stopped_rej = rej_lr & (d_lr == j)
            betas.append(1.0 - stopped_rej.sum() / n_reached)
        identity_gap = float(abs((1.0 - np.prod(betas)) - p_lr))
        rows.append(PowerRow(
            theta=float(theta),
            power_lr=float(p_lr),
            se_lr=float(math.sqrt(p_lr * (1 - p_lr) / replications)),
            power_comp=float(p_c),
            se_comp=float(math.sqrt(p_c * (1 - p_c) / replications)),
            se_diff=se_diff,
            flag=bool(p_c - p_lr > 3.0 * max(se_diff, 1e-300)),
            beta_stage_lr=tuple(float(b) for b in betas),
            identity_gap=identity_gap,
        ))
    return ComparisonReport(competitor, tuple(alpha_stage), int(replications), int(seed), tuple(rows))
