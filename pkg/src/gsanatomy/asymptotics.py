"""Limit laws of the terminal statistic under local alternatives theta = h / sqrt(n_1).

With stage sizes growing proportionally, the stage-wise z-statistics keep
their joint normal structure and the terminal statistic converges to a
mixture of truncated normals whose weights are the limiting stopping
probabilities. For two stages there is a closed one-dimensional integral; for
general K the recursion of :mod:`gsanatomy.subdensity` is run on the limiting
size ratios (under normal outcomes it is exact at every n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .design import SequentialDesign
from .errors import ConditioningError, DomainError, UsageError
from .numkernel import INV_SQRT_2PI, TAIL_WIDTH
from .subdensity import StageDistributions, anatomy_from_sizes, compute_anatomy, view_for


@dataclass(frozen=True)
class RatioLimits:
    """Limiting ratios ``r[d] = lim n_(d)/n_d`` and ``r_cross[d][j] = lim n_(d)/n_j``."""

    r: tuple[float, ...]
    r_cross: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if len(self.r) != len(self.r_cross):
            raise DomainError("r and r_cross must cover the same stages")
        for d, (rd, row) in enumerate(zip(self.r, self.r_cross), start=1):
            if not (math.isfinite(rd) and rd >= 1.0):
                raise DomainError(f"r_({d}) = {rd} must be >= 1")
            if d >= 2 and rd <= 1.0:
                raise DomainError(f"r_({d}) = {rd} must exceed 1 (earlier stages carry no weight)")
            if len(row) != d or any(not (0 < v < math.inf) for v in row):
                raise DomainError(f"r_cross row {d} must hold {d} positive finite ratios")
            if not math.isclose(row[-1], rd, rel_tol=1e-12):
                raise DomainError(f"r_({d}){d} must equal r_({d})")

    @property
    def K(self) -> int:
        return len(self.r)

    @classmethod
    def from_stage_sizes(cls, stage_n: Sequence[float]) -> "RatioLimits":
        n = np.asarray(stage_n, dtype=float)
        cum = np.cumsum(n)
        r = tuple(float(c / s) for c, s in zip(cum, n))
        cross = tuple(tuple(float(cum[d] / n[j]) for j in range(d + 1)) for d in range(n.size))
        return cls(r, cross)

    def relative_sizes(self) -> np.ndarray:
        """Stage sizes relative to the first stage."""
        last = self.r_cross[-1]
        return np.array([last[0] / v for v in last])


@dataclass(frozen=True)
class LocalAlternative:
    h: float

    def __post_init__(self):
        if not math.isfinite(self.h):
            raise DomainError("local parameter h must be finite")

    def theta(self, n1: float) -> float:
        return self.h / math.sqrt(n1)


@dataclass(frozen=True, eq=False)
class LimitCDF:
    view: str
    evaluate: Callable
    weights: tuple[float, ...]

    def __call__(self, v):
        return self.evaluate(v)


def _limit_anatomy(ratios: RatioLimits, design: SequentialDesign, local: LocalAlternative) -> StageDistributions:
    if ratios.K != design.K:
        raise UsageError(f"ratios cover {ratios.K} stages, design has {design.K}")
    # with n_1 = 1 the local alternative theta = h gives stage-1 drift h / sigma
    return anatomy_from_sizes(ratios.relative_sizes(), design.boundaries, local.h, design.sigma)


def _two_stage_pieces(ratios: RatioLimits, design: SequentialDesign, local: LocalAlternative):
    """Closed-form ingredients for K = 2: p1, D=1 sub-CDF and D=2 sub-CDF."""
    if ratios.K != 2:
        raise UsageError(f"ratios cover {ratios.K} stages, the closed form needs 2")
    r = ratios.r[1]
    c1 = design.boundaries[0]
    delta = local.h / design.sigma
    shift = delta / math.sqrt(r - 1.0)
    p1 = float(ndtr(-(c1 - delta)))
    lo = delta - TAIL_WIDTH

    def stage1(v):
        return max(0.0, p1 - float(ndtr(-(v - delta)))) if v > c1 else 0.0

    def stage2(v):
        def integrand(y):
            return ndtr(math.sqrt(r) * v - math.sqrt(r - 1.0) * y - shift) * INV_SQRT_2PI * math.exp(-0.5 * (y - delta) ** 2)
        if c1 <= lo:
            return 0.0
        val, _ = integrate.quad(integrand, lo, c1, epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    return p1, np.vectorize(stage1, otypes=[float]), np.vectorize(stage2, otypes=[float])


def limit_cdf_design(ratios: RatioLimits, design: SequentialDesign, local: LocalAlternative,
                     closed_form: bool | None = None) -> LimitCDF:
    """Limit of ``Pr(T_(D) <= v)``; the two-stage case uses the closed-form mixture integral."""
    design.check()
    closed = design.K == 2 if closed_form is None else closed_form
    if closed:
        if design.K != 2:
            raise UsageError("the closed form covers two stages only")
        p1, f1, f2 = _two_stage_pieces(ratios, design, local)

        def evaluate(v):
            v = np.asarray(v, dtype=float)
            return f1(v) + f2(v)

        return LimitCDF("design", evaluate, (p1, 1.0 - p1))
    sd = _limit_anatomy(ratios, design, local)
    return LimitCDF("design", view_for(sd, "all").cdf, tuple(float(p) for p in sd.stop_probs))


def limit_cdf_conditional(ratios: RatioLimits, design: SequentialDesign, local: LocalAlternative,
                          condition: str, closed_form: bool | None = None) -> LimitCDF:
    """Limit of ``Pr(T_(D) <= v | condition)`` for ``'D=d'`` or ``'D>=d'``."""
    design.check()
    cond = condition.replace(" ", "")
    if not cond.startswith("D"):
        raise UsageError(f"unknown condition {condition!r}")
    closed = design.K == 2 if closed_form is None else closed_form
    if closed:
        if design.K != 2:
            raise UsageError("the closed form covers two stages only")
        p1, f1, f2 = _two_stage_pieces(ratios, design, local)
        if cond in ("D>=1",):
            return limit_cdf_design(ratios, design, local, closed_form=True)
        if cond == "D=1":
            pieces, norm = (f1,), p1
        elif cond in ("D=2", "D>=2"):
            pieces, norm = (f2,), 1.0 - p1
        else:
            raise UsageError(f"unknown condition {condition!r}")
        if not norm > 0.0:
            raise ConditioningError(f"limiting Pr({cond}) is zero")

        def evaluate(v):
            v = np.asarray(v, dtype=float)
            return sum(f(v) for f in pieces) / norm

        return LimitCDF(cond, evaluate, (1.0,))
    sd = _limit_anatomy(ratios, design, local)
    view = view_for(sd, cond)
    if cond.startswith("D>="):
        d = int(cond[3:])
        w = sd.stop_probs[d - 1:] / sd.stop_probs[d - 1:].sum()
    else:
        w = np.array([1.0])
    return LimitCDF(cond, view.cdf, tuple(float(x) for x in w))


def degeneracy_demo(theta: float, n1_grid: Sequence[int], design: SequentialDesign) -> list[tuple[int, float]]:
    """``Pr(D=1)`` at a fixed alternative as the first-stage size grows.

    Stage sizes keep the proportions of ``design.stage_n``.
    """
    design.check()
    base = design.stage_n[0]
    rows = []
    for n1 in n1_grid:
        sizes = [max(1, round(n * n1 / base)) for n in design.stage_n]
        sd = compute_anatomy(SequentialDesign(sizes, design.boundaries, design.sigma), theta)
        rows.append((int(n1), float(sd.stop_probs[0])))
    return rows


def limit_moments(ratios: RatioLimits, design: SequentialDesign, local: LocalAlternative) -> tuple[float, float]:
    """Mean and standard deviation of the limiting terminal statistic."""
    view = view_for(_limit_anatomy(ratios, design, local), "all")
    return view.mean(), math.sqrt(view.variance())


def moment_matched_deviation(cdf: Callable, mean: float, sd: float, v: np.ndarray) -> float:
    """Largest gap between ``cdf`` and the normal law with the same mean and sd on ``v``."""
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(np.asarray(cdf(v)) - ndtr((v - mean) / sd))))


def finite_n_design(design: SequentialDesign, n1: int) -> SequentialDesign:
    """``design`` with stage sizes rescaled so the first stage has ``n1`` observations."""
    base = design.stage_n[0]
    return SequentialDesign([max(1, round(n * n1 / base)) for n in design.stage_n],
                            design.boundaries, design.sigma)


__all__ = [
    "RatioLimits",
    "LocalAlternative",
    "LimitCDF",
    "limit_cdf_design",
    "limit_cdf_conditional",
    "degeneracy_demo",
    "limit_moments",
    "moment_matched_deviation",
    "finite_n_design",
]
