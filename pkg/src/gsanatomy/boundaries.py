"""Critical values from alpha-spending plans."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from . import _backend
from .design import SequentialDesign
from .errors import ConfigurationError, InfeasibleError, SolverError, UsageError
from .numkernel import DEFAULT_GRID_POINTS, DEFAULT_TOL, find_root
from .subdensity import anatomy_from_sizes

BRACKET = (0.0, 6.0)
WIDEN = 6.0


@dataclass(frozen=True)
class SpendingPlan:
    """How the overall type I error is spread over the stages.

    ``increments[d]`` is the unconditional probability ``Pr0(D = d, reject)``
    for an explicit plan; the Pocock plan only fixes ``alpha_total`` and
    uses one constant boundary.
    """

    kind: str
    alpha_total: float
    K: int
    increments: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("pocock_constant", "explicit"):
            raise UsageError(f"unknown plan kind {self.kind!r}")
        if not 0.0 < self.alpha_total < 1.0:
            raise UsageError("alpha_total must lie in (0, 1)")
        if self.K < 1:
            raise UsageError("K must be >= 1")
        if self.kind == "explicit":
            if self.increments is None or len(self.increments) != self.K:
                raise UsageError(f"explicit plan needs {self.K} increments")
            object.__setattr__(self, "increments", tuple(float(v) for v in self.increments))
            if any(v < 0 for v in self.increments):
                raise UsageError("spending increments must be nonnegative")
            if abs(math.fsum(self.increments) - self.alpha_total) > 1e-12:
                raise UsageError("spending increments must sum to alpha_total")

    @classmethod
    def explicit(cls, increments: Sequence[float]) -> "SpendingPlan":
        inc = tuple(float(v) for v in increments)
        return cls("explicit", math.fsum(inc), len(inc), inc)

    @classmethod
    def pocock(cls, alpha_total: float, K: int) -> "SpendingPlan":
        return cls("pocock_constant", alpha_total, K)


@dataclass(frozen=True)
class BoundarySolution:
    design: SequentialDesign
    achieved_spending: tuple[float, ...]
    target_spending: tuple[float, ...]
    residuals: tuple[float, ...]
    iterations: tuple[int, ...]
    elapsed: float = field(default=0.0, compare=False)

    @property
    def boundaries(self) -> tuple[float, ...]:
        return self.design.boundaries


def _template(template: SequentialDesign | Sequence[int], K: int) -> SequentialDesign:
    if not isinstance(template, SequentialDesign):
        template = SequentialDesign(template, [0.0] * len(template))
    if template.K != K:
        raise UsageError(f"plan has K={K} but the template has {template.K} stages")
    if any(n < 1 for n in template.stage_n) or not template.sigma > 0:
        raise UsageError("template needs positive stage sizes and sigma")
    return template


def _bracketed_root(f, label: str):
    lo, hi = BRACKET
    try:
        return find_root(f, lo, hi, tol=DEFAULT_TOL, full_output=True)
    except SolverError:
        pass
    try:
        return find_root(f, lo - WIDEN, hi + WIDEN, tol=DEFAULT_TOL, full_output=True)
    except SolverError as exc:
        raise SolverError(f"{label}: no root in [{lo - WIDEN}, {hi + WIDEN}] ({exc})") from exc


def achieved_spending(design: SequentialDesign, theta0: float = 0.0,
                      grid_points: int = DEFAULT_GRID_POINTS) -> tuple[float, ...]:
    """Cumulative rejection probability under ``theta0`` through each stage."""
    design.check()
    sd = anatomy_from_sizes(design.stage_n, design.boundaries, theta0, design.sigma, grid_points)
    return tuple(float(v) for v in np.cumsum(sd.reject_probs))


def solve_explicit(plan: SpendingPlan, template, theta0: float = 0.0,
                   grid_points: int = DEFAULT_GRID_POINTS) -> BoundarySolution:
    """Solve ``c_1..c_K`` stage by stage so each stage spends its increment."""
    if plan.kind != "explicit":
        raise UsageError("solve_explicit needs an explicit plan")
    template = _template(template, plan.K)
    started = time.perf_counter()
    sizes = template.stage_n
    bounds: list[float] = []
    iterations: list[int] = []
    kern = _backend.kernels
    for d, target in enumerate(plan.increments, start=1):
        if target <= 0.0:
            raise ConfigurationError(f"stage {d}: zero spending implies an infinite boundary")
        if d == 1:
            drift = theta0 * math.sqrt(sizes[0]) / template.sigma
            available = 1.0

            def excess(c, drift=drift, target=target):
                return float(ndtr(-(c - drift))) - target
        else:
            prefix = anatomy_from_sizes(sizes[:d], bounds + [0.0], theta0, template.sigma, grid_points)
            state, tr = prefix.continuation[-1], prefix.transitions[-1]
            s, wf = state.points, state.grid.weights * state.values
            available = float(wf.sum())

            def excess(c, s=s, wf=wf, tr=tr, target=target):
                return float(kern.normal_mix_cdf(np.array([c]), s, wf, tr.a, tr.m, tr.b, True)[0]) - target
        if target >= available:
            raise InfeasibleError(
                f"stage {d}: increment {target:.6g} exceeds continuation mass {available:.6g}")
        c, it = _bracketed_root(excess, f"stage {d}")
        bounds.append(c)
        iterations.append(it)
    design = template.with_boundaries(bounds)
    achieved = achieved_spending(design, theta0, grid_points)
    targets = tuple(float(v) for v in np.cumsum(plan.increments))
    return BoundarySolution(
        design=design,
        achieved_spending=achieved,
        target_spending=targets,
        residuals=tuple(float(a - t) for a, t in zip(achieved, targets)),
        iterations=tuple(iterations),
        elapsed=time.perf_counter() - started,
    )


def solve_pocock(alpha_total: float, K: int, template, theta0: float = 0.0,
                 grid_points: int = DEFAULT_GRID_POINTS) -> BoundarySolution:
    """Find the constant boundary whose overall type I error is ``alpha_total``."""
    plan = SpendingPlan.pocock(alpha_total, K)
    template = _template(template, plan.K)
    if len(set(template.stage_n)) != 1:
        raise ConfigurationError("the constant-boundary family assumes equal stage sizes")
    started = time.perf_counter()

    def excess(c):
        sd = anatomy_from_sizes(template.stage_n, [c] * K, theta0, template.sigma, grid_points)
        return float(sd.reject_probs.sum()) - alpha_total

    c, it = _bracketed_root(excess, "pocock constant")
    design = template.with_boundaries([c] * K)
    achieved = achieved_spending(design, theta0, grid_points)
    targets = tuple([math.nan] * (K - 1) + [alpha_total])
    return BoundarySolution(
        design=design,
        achieved_spending=achieved,
        target_spending=targets,
        residuals=tuple([math.nan] * (K - 1) + [float(achieved[-1] - alpha_total)]),
        iterations=(it,),
        elapsed=time.perf_counter() - started,
    )


def solve(plan: SpendingPlan, template, theta0: float = 0.0,
          grid_points: int = DEFAULT_GRID_POINTS) -> BoundarySolution:
    if plan.kind == "pocock_constant":
        return solve_pocock(plan.alpha_total, plan.K, template, theta0, grid_points)
    return solve_explicit(plan, template, theta0, grid_points)
