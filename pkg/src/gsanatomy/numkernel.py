"""Numerical primitives: normal and truncated-normal laws, Simpson rules, root finding.

All functions accept scalars or numpy arrays and return the same kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize, special

from .errors import BracketError, DomainError, SolverError, UsageError

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Half-width (in standard deviations) used to truncate infinite integration limits.
TAIL_WIDTH = 8.5
DEFAULT_GRID_POINTS = 1025
DEFAULT_TOL = 1e-10


def _check_sigma(sigma: float) -> None:
    if not (np.isfinite(sigma) and sigma > 0):
        raise DomainError(f"sigma must be positive and finite, got {sigma!r}")


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


def normal_pdf(x, mu: float = 0.0, sigma: float = 1.0):
    """Density of N(mu, sigma^2) at ``x``."""
    _check_sigma(sigma)
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)) or not np.isfinite(mu):
        raise DomainError("normal_pdf requires finite arguments")
    z = (xa - mu) / sigma
    return _scalar_or_array(x, INV_SQRT_2PI * np.exp(-0.5 * z * z) / sigma)


def normal_cdf(x, mu: float = 0.0, sigma: float = 1.0):
    """Distribution function of N(mu, sigma^2); ``x`` may be +-inf."""
    _check_sigma(sigma)
    xa = np.asarray(x, dtype=float)
    if np.any(np.isnan(xa)) or not np.isfinite(mu):
        raise DomainError("normal_cdf requires non-NaN arguments")
    return _scalar_or_array(x, special.ndtr((xa - mu) / sigma))


def normal_sf(x, mu: float = 0.0, sigma: float = 1.0):
    """Upper tail 1 - normal_cdf, accurate far in the right tail."""
    _check_sigma(sigma)
    xa = np.asarray(x, dtype=float)
    if np.any(np.isnan(xa)) or not np.isfinite(mu):
        raise DomainError("normal_sf requires non-NaN arguments")
    return _scalar_or_array(x, special.ndtr(-(xa - mu) / sigma))


def normal_quantile(p):
    """Standard normal quantile function on the open unit interval."""
    pa = np.asarray(p, dtype=float)
    if not np.all((pa > 0.0) & (pa < 1.0)):
        raise DomainError("normal_quantile requires 0 < p < 1")
    return _scalar_or_array(p, special.ndtri(pa))


@dataclass(frozen=True)
class Grid:
    """Uniform grid with an odd number of points, suitable for Simpson's rule."""

    lo: float
    hi: float
    n_points: int = DEFAULT_GRID_POINTS

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise UsageError(f"grid requires finite lo < hi, got [{self.lo}, {self.hi}]")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise UsageError(f"grid needs an odd number (>= 3) of points, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_points)

    @property
    def weights(self) -> np.ndarray:
        return simpson_weights(self.n_points, self.spacing)


def simpson_weights(n_points: int, h: float) -> np.ndarray:
    """Composite Simpson weights 1,4,2,...,4,1 times h/3."""
    if n_points < 3 or n_points % 2 == 0:
        raise UsageError(f"Simpson's rule needs an odd number (>= 3) of points, got {n_points}")
    w = np.full(n_points, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def simpson_integrate(values, grid: Grid) -> float:
    """Integrate tabulated ``values`` over ``grid`` with composite Simpson."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size != grid.n_points:
        raise UsageError(f"expected {grid.n_points} values, got shape {v.shape}")
    return float(np.dot(grid.weights, v))


@dataclass(frozen=True)
class TruncatedNormalSpec:
    """N(mu, sigma^2) restricted to (lower, upper); bounds may be infinite."""

    mu: float = 0.0
    sigma: float = 1.0
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        _check_sigma(self.sigma)
        if not self.lower < self.upper:
            raise DomainError("truncation requires lower < upper")
        if self.mass <= 0.0:
            raise DomainError("truncation interval carries no probability")

    @property
    def _alpha(self) -> float:
        return (self.lower - self.mu) / self.sigma

    @property
    def _beta(self) -> float:
        return (self.upper - self.mu) / self.sigma

    @property
    def mass(self) -> float:
        # pick the tail that avoids cancellation
        a, b = self._alpha, self._beta
        if a > 0:
            return float(special.ndtr(-a) - special.ndtr(-b))
        return float(special.ndtr(b) - special.ndtr(a))

    def pdf(self, x):
        xa = np.asarray(x, dtype=float)
        z = (xa - self.mu) / self.sigma
        dens = INV_SQRT_2PI * np.exp(-0.5 * z * z) / (self.sigma * self.mass)
        out = np.where((xa >= self.lower) & (xa <= self.upper), dens, 0.0)
        return _scalar_or_array(x, out)

    def cdf(self, x):
        xa = np.clip(np.asarray(x, dtype=float), self.lower, self.upper)
        z = (xa - self.mu) / self.sigma
        a = self._alpha
        if a > 0:
            out = (special.ndtr(-a) - special.ndtr(-z)) / self.mass
        else:
            out = (special.ndtr(z) - special.ndtr(a)) / self.mass
        return _scalar_or_array(x, np.clip(out, 0.0, 1.0))

    def mean(self) -> float:
        a, b = self._alpha, self._beta
        pa = INV_SQRT_2PI * math.exp(-0.5 * a * a) if math.isfinite(a) else 0.0
        pb = INV_SQRT_2PI * math.exp(-0.5 * b * b) if math.isfinite(b) else 0.0
        return self.mu + self.sigma * (pa - pb) / self.mass

    def variance(self) -> float:
        a, b = self._alpha, self._beta
        pa = INV_SQRT_2PI * math.exp(-0.5 * a * a) if math.isfinite(a) else 0.0
        pb = INV_SQRT_2PI * math.exp(-0.5 * b * b) if math.isfinite(b) else 0.0
        apa = a * pa if math.isfinite(a) else 0.0
        bpb = b * pb if math.isfinite(b) else 0.0
        z = self.mass
        return self.sigma**2 * (1.0 + (apa - bpb) / z - ((pa - pb) / z) ** 2)

    def grid(self, n_points: int = DEFAULT_GRID_POINTS) -> Grid:
        lo = max(self.lower, self.mu - TAIL_WIDTH * self.sigma)
        hi = min(self.upper, self.mu + TAIL_WIDTH * self.sigma)
        return Grid(lo, hi, n_points)


def find_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = DEFAULT_TOL,
    maxiter: int = 200,
    full_output: bool = False,
):
    """Brent's method on a bracketing interval ``[lo, hi]``.

    Returns the root, or ``(root, iterations)`` when ``full_output`` is set.

    Raises:
        BracketError: ``f(lo)`` and ``f(hi)`` share a sign.
        SolverError: ``f`` returned a non-finite value or Brent did not converge.
    """
    if not (tol > 0):
        raise UsageError("tol must be positive")

    def checked(x):
        y = f(x)
        if not np.isfinite(y):
            raise SolverError(f"non-finite function value {y!r} at x={x!r}")
        return y

    flo, fhi = checked(lo), checked(hi)
    if flo == 0.0:
        return (lo, 0) if full_output else lo
    if fhi == 0.0:
        return (hi, 0) if full_output else hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f(lo)={flo:.3g}, f(hi)={fhi:.3g}")
    try:
        root, res = optimize.brentq(checked, lo, hi, xtol=tol, maxiter=maxiter, full_output=True)
    except RuntimeError as exc:
        raise SolverError(str(exc)) from exc
    root = min(max(root, lo), hi)
    return (root, res.iterations) if full_output else root
