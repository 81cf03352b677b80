"""Sequential design objects and their operating characteristics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DesignError, DomainError


@dataclass(frozen=True)
class SequentialDesign:
    """A K-stage one-sided (upper) group sequential design.

    Boundaries live on the standardized cumulative z-scale
    ``T_(d) = sum(x_1..x_n(d)) / (sigma * sqrt(n(d)))``. The trial stops and
    rejects at the first stage with ``T_(d) > c_d``; at stage K it rejects iff
    ``T_(K) > c_K``.

    Construction does not validate; call :func:`validate_design` for a report
    or :meth:`check` to raise.
    """

    stage_n: tuple[int, ...]
    boundaries: tuple[float, ...]
    sigma: float = 1.0
    direction: str = "upper"

    def __init__(self, stage_n: Sequence[int], boundaries: Sequence[float], sigma: float = 1.0,
                 direction: str = "upper"):
        object.__setattr__(self, "stage_n", tuple(int(n) for n in stage_n))
        object.__setattr__(self, "boundaries", tuple(float(c) for c in boundaries))
        object.__setattr__(self, "sigma", float(sigma))
        object.__setattr__(self, "direction", direction)

    @property
    def K(self) -> int:
        return len(self.stage_n)

    def cumulative_sizes(self) -> tuple[int, ...]:
        return cumulative_sizes(self)

    def drift(self, theta: float) -> np.ndarray:
        """Mean of the cumulative z-statistic at each stage."""
        return theta * np.sqrt(np.asarray(self.cumulative_sizes(), dtype=float)) / self.sigma

    def with_boundaries(self, boundaries: Sequence[float]) -> "SequentialDesign":
        return SequentialDesign(self.stage_n, boundaries, self.sigma, self.direction)

    def check(self) -> "SequentialDesign":
        report = validate_design(self)
        if report:
            raise DesignError("; ".join(report))
        return self


@dataclass(frozen=True)
class Hypotheses:
    theta0: float = 0.0
    theta1: float = 1.0

    def __post_init__(self):
        if not self.theta1 > self.theta0:
            raise DomainError(f"theta1 must exceed theta0 (got {self.theta0}, {self.theta1})")


@dataclass(frozen=True)
class OperationalCharacteristics:
    """Stage-wise and overall error rates, spending and sample-size summaries.

    ``alpha_stage[d]`` and ``beta_stage[d]`` are conditional on reaching stage
    d: the rejection probability under theta0 and the non-rejection
    probability under theta1 respectively. ``alpha_spending[d]`` is the
    cumulative probability of rejecting by stage d under theta0 and
    ``beta_spending[d]`` the probability of *not* having rejected by stage d
    under theta1, so ``1 - beta_spending`` is the cumulative power.
    """

    design: SequentialDesign
    hypotheses: Hypotheses
    alpha_stage: tuple[float, ...]
    alpha_spending: tuple[float, ...]
    beta_stage: tuple[float, ...]
    beta_spending: tuple[float, ...]
    overall_alpha: float
    overall_power: float
    stop_probs_null: tuple[float, ...]
    stop_probs_alt: tuple[float, ...]
    expected_n: float
    expected_n_null: float = field(default=math.nan)

    @property
    def cumulative_power(self) -> tuple[float, ...]:
        return tuple(1.0 - b for b in self.beta_spending)


def cumulative_sizes(design: SequentialDesign) -> tuple[int, ...]:
    return tuple(int(v) for v in np.cumsum(design.stage_n))


def validate_design(design: SequentialDesign) -> list[str]:
    """List every violated design invariant; an empty list means valid."""
    problems = []
    if design.K < 1:
        problems.append("design needs at least one stage")
    if any(n < 1 for n in design.stage_n):
        problems.append("stage size must be >=1")
    if len(design.boundaries) != design.K:
        problems.append(f"expected {design.K} boundaries, got {len(design.boundaries)}")
    if any(not math.isfinite(c) for c in design.boundaries):
        problems.append("boundary must be finite")
    if not (math.isfinite(design.sigma) and design.sigma > 0):
        problems.append("sigma must be positive and finite")
    if design.direction != "upper":
        problems.append(f"unsupported direction {design.direction!r}; only 'upper' is modeled")
    return problems


def _conditional_rates(reach: np.ndarray, reject: np.ndarray) -> np.ndarray:
    if np.any(reach <= 0.0):
        d = int(np.argmax(reach <= 0.0)) + 1
        raise DesignError(f"stage {d} is unreachable (continuation probability 0)")
    return reject / reach


def operational_characteristics(design: SequentialDesign, hyp: Hypotheses,
                                grid_points: int | None = None) -> OperationalCharacteristics:
    """Type I/II error decomposition of ``design`` at ``hyp.theta0`` and ``hyp.theta1``."""
    from .subdensity import compute_anatomy

    design.check()
    kw = {} if grid_points is None else {"grid_points": grid_points}
    null = compute_anatomy(design, hyp.theta0, **kw)
    alt = compute_anatomy(design, hyp.theta1, **kw)

    alpha_stage = _conditional_rates(null.reach_probs, null.reject_probs)
    power_stage = _conditional_rates(alt.reach_probs, alt.reject_probs)
    alpha_spending = np.cumsum(null.reject_probs)
    beta_spending = 1.0 - np.cumsum(alt.reject_probs)
    cum = np.asarray(cumulative_sizes(design), dtype=float)
    return OperationalCharacteristics(
        design=design,
        hypotheses=hyp,
        alpha_stage=tuple(float(v) for v in alpha_stage),
        alpha_spending=tuple(float(v) for v in alpha_spending),
        beta_stage=tuple(float(1.0 - v) for v in power_stage),
        beta_spending=tuple(float(v) for v in beta_spending),
        overall_alpha=float(alpha_spending[-1]),
        overall_power=float(1.0 - beta_spending[-1]),
        stop_probs_null=tuple(float(v) for v in null.stop_probs),
        stop_probs_alt=tuple(float(v) for v in alt.stop_probs),
        expected_n=float(cum @ alt.stop_probs),
        expected_n_null=float(cum @ null.stop_probs),
    )
