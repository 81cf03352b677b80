"""Stage-wise anatomy of the monitored statistic via the Armitage recursion.

Everything lives on the standardized cumulative z-scale. With cumulative
sizes ``N_d`` the statistic evolves as

    T_d = sqrt(N_{d-1}/N_d) * T_{d-1} + sqrt(n_d/N_d) * Z_d,
    Z_d ~ N(sqrt(n_d) * theta / sigma, 1),

so given ``T_{d-1} = s`` the next value is normal with mean ``a*s + m`` and
standard deviation ``b``. The recursion state at stage d is the density of
``T_d`` on the continuation region ``(-inf, c_d]``; each new sub-density is a
Simpson-weighted mixture of normal kernels over that state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import ndtr

from . import _backend
from .design import SequentialDesign, cumulative_sizes
from .errors import AccuracyError, ConditioningError, ConfigurationError, UsageError
from .numkernel import DEFAULT_GRID_POINTS, INV_SQRT_2PI, TAIL_WIDTH, Grid, find_root

MASS_DEFICIT_LIMIT = 1e-6


@dataclass(frozen=True, eq=False)
class GridDensity:
    """A (sub-)density tabulated on a uniform grid.

    ``cdf_values`` holds the exact cumulative sub-mass at each grid point when
    known; it is zero below the grid and ``mass`` above it.
    """

    grid: Grid
    values: np.ndarray
    mass: float
    cdf_values: np.ndarray | None = None

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.points, self.values, left=0.0, right=0.0)
        return out

    def cdf(self, t):
        """Cumulative sub-mass; cubic Hermite through exact values and slopes."""
        if self.cdf_values is None:
            raise UsageError("this density carries no exact CDF table")
        t = np.asarray(t, dtype=float)
        spline = self._spline()
        out = np.where(t <= self.grid.lo, 0.0,
                       np.where(t >= self.grid.hi, self.mass, spline(np.clip(t, self.grid.lo, self.grid.hi))))
        return np.clip(out, 0.0, self.mass)

    def _spline(self):
        cached = self.__dict__.get("_spline_cache")
        if cached is None:
            cached = CubicHermiteSpline(self.points, self.cdf_values, self.values)
            object.__setattr__(self, "_spline_cache", cached)
        return cached

    def scaled(self, factor: float) -> "GridDensity":
        """The same shape with total mass multiplied by ``factor``."""
        cdf = None if self.cdf_values is None else self.cdf_values * factor
        return GridDensity(self.grid, self.values * factor, self.mass * factor, cdf)


@dataclass(frozen=True)
class _Transition:
    a: float
    m: float
    b: float


@dataclass(frozen=True, eq=False)
class StageDistributions:
    """Full stage-wise anatomy at one parameter value.

    ``sub[d]`` is the sub-density of ``T_(d)`` on the event ``D = d`` (for
    d < K restricted to the stopping region above ``c_d``). ``continuation[d]``
    is the density of ``T_(d)`` on ``(-inf, c_d]`` for d < K.
    ``reject_probs[d]`` is ``Pr(D = d, reject)``, equal to ``stop_probs[d]``
    except at the final stage.
    """

    theta: float
    boundaries: tuple[float, ...]
    cumulative: tuple[float, ...]
    sigma: float
    drift: tuple[float, ...]
    sub: tuple[GridDensity, ...]
    continuation: tuple[GridDensity, ...]
    stop_probs: np.ndarray
    reject_probs: np.ndarray
    reach_probs: np.ndarray
    mass_deficit: float
    transitions: tuple[_Transition, ...] = field(repr=False, default=())

    @property
    def K(self) -> int:
        return len(self.boundaries)

    def sub_cdf(self, d: int, v) -> np.ndarray:
        """Exact ``Pr(D = d, T_(d) <= v)`` by direct kernel quadrature (no interpolation)."""
        _check_stage(d, self.K)
        v = np.atleast_1d(np.asarray(v, dtype=float))
        k = self.K
        c = self.boundaries[d - 1]
        if d == 1:
            if k == 1:
                return ndtr(v - self.drift[0])
            return np.where(v > c, ndtr(-(c - self.drift[0])) - ndtr(-(v - self.drift[0])), 0.0)
        tr = self.transitions[d - 1]
        state = self.continuation[d - 2]
        wf = state.grid.weights * state.values
        kern = _backend.kernels
        if d == k:
            return kern.normal_mix_cdf(v, state.points, wf, tr.a, tr.m, tr.b)
        vv = np.maximum(v, c)
        upper_c = kern.normal_mix_cdf(np.array([c]), state.points, wf, tr.a, tr.m, tr.b, True)[0]
        return np.where(v > c, upper_c - kern.normal_mix_cdf(vv, state.points, wf, tr.a, tr.m, tr.b, True), 0.0)


def _check_stage(d: int, k: int) -> None:
    if not 1 <= d <= k:
        raise UsageError(f"stage index must be in 1..{k}, got {d}")


def _transition(prev_cum: float, cum: float, n: float, theta: float, sigma: float) -> _Transition:
    return _Transition(
        a=math.sqrt(prev_cum / cum),
        m=n * theta / (sigma * math.sqrt(cum)),
        b=math.sqrt(n / cum),
    )


def anatomy_from_sizes(stage_sizes: Sequence[float], boundaries: Sequence[float], theta: float,
                       sigma: float = 1.0, grid_points: int = DEFAULT_GRID_POINTS,
                       width: float = TAIL_WIDTH) -> StageDistributions:
    """Armitage recursion for (possibly non-integer) stage sizes.

    Only the ratios of the stage sizes and the drift matter, which is what
    lets the same recursion serve the local-asymptotic limits.
    """
    if grid_points < 3 or grid_points % 2 == 0:
        raise ConfigurationError(f"grid_points must be odd and >= 3, got {grid_points}")
    if width < 5.0:
        raise ConfigurationError(f"grid half-width {width} leaves tail mass above tolerance")
    sizes = np.asarray(stage_sizes, dtype=float)
    bounds = tuple(float(c) for c in boundaries)
    k = sizes.size
    if len(bounds) != k:
        raise ConfigurationError("one boundary per stage is required")
    cum = np.cumsum(sizes)
    drift = theta * np.sqrt(cum) / sigma
    kern = _backend.kernels

    subs, conts, transitions = [], [], []
    stop = np.zeros(k)
    reject = np.zeros(k)
    reach = np.ones(k)
    deficit = 0.0

    # stage 1: T_1 ~ N(drift_1, 1)
    d1 = drift[0]
    c1 = bounds[0]
    hi1 = max(c1, d1) + width
    transitions.append(_Transition(0.0, d1, 1.0))
    if k == 1:
        g = Grid(d1 - width, hi1, grid_points)
        x = g.points
        vals = INV_SQRT_2PI * np.exp(-0.5 * (x - d1) ** 2)
        subs.append(GridDensity(g, vals, 1.0, ndtr(x - d1)))
        stop[0] = 1.0
        reject[0] = ndtr(-(c1 - d1))
    else:
        g = Grid(c1, hi1, grid_points)
        x = g.points
        tail = ndtr(-(c1 - d1))
        vals = INV_SQRT_2PI * np.exp(-0.5 * (x - d1) ** 2)
        subs.append(GridDensity(g, vals, tail, tail - ndtr(-(x - d1))))
        stop[0] = reject[0] = tail
        gc = Grid(min(d1 - width, c1 - 1.0), c1, grid_points)
        xc = gc.points
        cvals = INV_SQRT_2PI * np.exp(-0.5 * (xc - d1) ** 2)
        exact = float(ndtr(c1 - d1))
        deficit = abs(float(gc.weights @ cvals) - exact)
        conts.append(GridDensity(gc, cvals, exact))

    for i in range(1, k):
        tr = _transition(cum[i - 1], cum[i], sizes[i], theta, sigma)
        transitions.append(tr)
        state = conts[-1]
        s = state.points
        wf = state.grid.weights * state.values
        reach[i] = state.mass
        c = bounds[i]
        di = drift[i]
        hi = max(c, di) + width
        upper_at_c = kern.normal_mix_cdf(np.array([c]), s, wf, tr.a, tr.m, tr.b, True)[0]
        if i == k - 1:
            g = Grid(di - width, hi, grid_points)
            x = g.points
            vals = kern.normal_mix_pdf(x, s, wf, tr.a, tr.m, tr.b)
            cdf = kern.normal_mix_cdf(x, s, wf, tr.a, tr.m, tr.b)
            total = float(wf.sum())
            subs.append(GridDensity(g, vals, total, cdf))
            stop[i] = total
            reject[i] = upper_at_c
        else:
            g = Grid(c, hi, grid_points)
            x = g.points
            vals = kern.normal_mix_pdf(x, s, wf, tr.a, tr.m, tr.b)
            cdf = upper_at_c - kern.normal_mix_cdf(x, s, wf, tr.a, tr.m, tr.b, True)
            subs.append(GridDensity(g, vals, float(upper_at_c), cdf))
            stop[i] = reject[i] = upper_at_c
            gc = Grid(min(di - width, c - 1.0), c, grid_points)
            cvals = kern.normal_mix_pdf(gc.points, s, wf, tr.a, tr.m, tr.b)
            exact = float(kern.normal_mix_cdf(np.array([c]), s, wf, tr.a, tr.m, tr.b)[0])
            deficit = max(deficit, abs(float(gc.weights @ cvals) - exact))
            conts.append(GridDensity(gc, cvals, exact))

    if deficit > MASS_DEFICIT_LIMIT:
        raise AccuracyError(f"recursion mass deficit {deficit:.3g} exceeds {MASS_DEFICIT_LIMIT}")
    return StageDistributions(
        theta=float(theta),
        boundaries=bounds,
        cumulative=tuple(float(v) for v in cum),
        sigma=float(sigma),
        drift=tuple(float(v) for v in drift),
        sub=tuple(subs),
        continuation=tuple(conts),
        stop_probs=stop,
        reject_probs=reject,
        reach_probs=reach,
        mass_deficit=deficit,
        transitions=tuple(transitions),
    )


def compute_anatomy(design: SequentialDesign, theta: float,
                    grid_points: int = DEFAULT_GRID_POINTS) -> StageDistributions:
    """Sub-densities, continuation densities and stopping probabilities at ``theta``."""
    design.check()
    return anatomy_from_sizes(design.stage_n, design.boundaries, theta, design.sigma, grid_points)


def is_possible_path(design: SequentialDesign, t: Sequence[float]) -> bool:
    """Whether a cumulative-statistic path lies in the support adapted to the stopping rule."""
    t = list(t)
    if len(t) > design.K:
        raise UsageError(f"path of length {len(t)} exceeds K={design.K}")
    return all(tj <= cj for tj, cj in zip(t[:-1], design.boundaries))


# ---------------------------------------------------------------------------
# distribution views


@dataclass(frozen=True, eq=False)
class DistributionView:
    """A normalized law of the terminal statistic (or estimator) under some conditioning.

    ``components`` are ``(sub_density, scale)`` pairs: the view's variable
    ``y`` relates to the z-statistic of that stage by ``t = scale * y``.
    """

    kind: str
    stage: int | None
    components: tuple[tuple[GridDensity, float], ...]
    normalizer: float

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        out = sum(g.cdf(y * scale) for g, scale in self.components) / self.normalizer
        return np.clip(out, 0.0, 1.0)

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        return sum(scale * g.pdf(y * scale) for g, scale in self.components) / self.normalizer

    @property
    def support(self) -> tuple[float, float]:
        lo = min(g.grid.lo / scale for g, scale in self.components)
        hi = max(g.grid.hi / scale for g, scale in self.components)
        return lo, hi

    @property
    def density(self) -> GridDensity:
        """The normalized density as a single GridDensity (single-component views only)."""
        if len(self.components) != 1:
            raise UsageError("mixture view has several grids; use components")
        g, scale = self.components[0]
        grid = Grid(g.grid.lo / scale, g.grid.hi / scale, g.grid.n_points)
        cdf = None if g.cdf_values is None else g.cdf_values / self.normalizer
        return GridDensity(grid, g.values * scale / self.normalizer, g.mass / self.normalizer, cdf)

    def total_mass(self) -> float:
        """Integral of the normalized pdf, by Simpson on each component grid."""
        return sum(float(g.grid.weights @ g.values) for g, _ in self.components) / self.normalizer

    def moment(self, power: int) -> float:
        total = 0.0
        for g, scale in self.components:
            y = g.points / scale
            total += float(g.grid.weights @ (g.values * y**power))
        return total / self.normalizer

    def mean(self) -> float:
        return self.moment(1)

    def variance(self) -> float:
        return self.moment(2) - self.mean() ** 2

    def quantile(self, p: float) -> float:
        lo, hi = self.support
        return find_root(lambda y: float(self.cdf(y)) - p, lo, hi, tol=1e-12)


def _scale(sd: StageDistributions, d: int, statistic: str) -> float:
    if statistic == "z":
        return 1.0
    if statistic == "mle":
        return math.sqrt(sd.cumulative[d - 1]) / sd.sigma
    raise UsageError(f"statistic must be 'z' or 'mle', got {statistic!r}")


def final_view(sd: StageDistributions, d: int, statistic: str = "z") -> DistributionView:
    """Law conditional on stopping at stage ``d``."""
    _check_stage(d, sd.K)
    p = float(sd.stop_probs[d - 1])
    if not p > 0.0:
        raise ConditioningError(f"Pr(D={d}) is zero")
    return DistributionView("final", d, ((sd.sub[d - 1], _scale(sd, d, statistic)),), p)


def interim_view(sd: StageDistributions, d: int, statistic: str = "z") -> DistributionView:
    """Law conditional on reaching stage ``d``: mixture of the final views for k >= d."""
    _check_stage(d, sd.K)
    p = float(sd.stop_probs[d - 1:].sum())
    if not p > 0.0:
        raise ConditioningError(f"Pr(D>={d}) is zero")
    comps = tuple((sd.sub[k - 1], _scale(sd, k, statistic)) for k in range(d, sd.K + 1))
    return DistributionView("interim", d, comps, p)


def design_view(sd: StageDistributions, statistic: str = "z") -> DistributionView:
    """Unconditional law of the terminal statistic."""
    comps = tuple((sd.sub[k - 1], _scale(sd, k, statistic)) for k in range(1, sd.K + 1))
    return DistributionView("design", None, comps, float(sd.stop_probs.sum()))


def view_cdf(sd: StageDistributions, condition: str, statistic: str = "z") -> Callable:
    """CDF for a condition string: ``'all'``, ``'D=d'`` or ``'D>=d'``."""
    return view_for(sd, condition, statistic).cdf


def view_for(sd: StageDistributions, condition: str, statistic: str = "z") -> DistributionView:
    condition = condition.replace(" ", "")
    if condition == "all":
        return design_view(sd, statistic)
    if condition.startswith("D>="):
        return interim_view(sd, int(condition[3:]), statistic)
    if condition.startswith("D="):
        return final_view(sd, int(condition[2:]), statistic)
    raise UsageError(f"unknown condition {condition!r}")
