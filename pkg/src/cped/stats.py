"""Quantile thresholds, top-gamma subsets, 1-D densities and Pearson divergences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from cped.errors import AbsoluteContinuityError, DataError, QuantileError
from cped.space import CategoricalSet, ContinuousInterval, EvaluationSet

DEFAULT_GRID_SIZE = 128
EPS_Q = 1e-12
MASS_TOL = 1e-9
# relative floor on the KDE bandwidth, as a fraction of the domain width
BANDWIDTH_FLOOR = 1e-3


@dataclass(frozen=True)
class QuantilePair:
    gamma: float
    gamma_prime: float

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma_prime < self.gamma <= 1.0:
            raise DataError(
                f"need 0 < gamma_prime < gamma <= 1, got gamma={self.gamma}, gamma_prime={self.gamma_prime}"
            )

    @property
    def kappa(self) -> float:
        return self.gamma_prime / self.gamma


def top_count(n: int, gamma: float) -> int:
    """``floor(gamma * n)``, tolerant of decimal gammas like 0.29 that are inexact in binary."""
    return int(math.floor(gamma * n + 1e-9))


def quantile_threshold(values: Sequence[float] | np.ndarray, gamma: float) -> float:
    """The ``floor(gamma * N)``-th smallest of ``values``.

    Raises :class:`QuantileError` when that count is zero.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise QuantileError("cannot take a quantile of no values")
    k = top_count(arr.size, gamma)
    if k < 1:
        raise QuantileError(
            f"gamma={gamma} selects no trials out of N={arr.size}; the smallest feasible gamma is {1 / arr.size:.6g}"
        )
    return float(np.partition(arr, k - 1)[k - 1])


def top_mask(values: np.ndarray, gamma: float) -> np.ndarray:
    """Boolean mask of values at or below the gamma-quantile threshold (ties included)."""
    return values <= quantile_threshold(values, gamma)


def top_subset(evalset: EvaluationSet, gamma: float) -> EvaluationSet:
    """Trials whose objective is at or below the gamma-quantile, in original order."""
    return evalset.subset(top_mask(evalset.objectives, gamma))


# -- densities ---------------------------------------------------------------------


@dataclass(frozen=True)
class GriddedDensity:
    domain: ContinuousInterval
    points: np.ndarray
    masses: np.ndarray
    bandwidth: float


@dataclass(frozen=True)
class PmfDensity:
    labels: tuple[str, ...]
    masses: np.ndarray


@dataclass(frozen=True)
class DegenerateDensity:
    """Point mass at the inactive marker."""


DEGENERATE = DegenerateDensity()
Density = Union[GriddedDensity, PmfDensity, DegenerateDensity]


def scott_bandwidth(samples: np.ndarray, domain: ContinuousInterval) -> float:
    """``sigma * n**(-1/5)`` with ``sigma`` the sample std, floored at ``1e-3 * width``."""
    n = samples.size
    sigma = float(np.std(samples, ddof=1)) if n > 1 else 0.0
    floor = (domain.hi - domain.lo) * BANDWIDTH_FLOOR
    return max(sigma * n ** -0.2, floor)


def fit_continuous_density(
    samples: Sequence[float] | np.ndarray,
    domain: ContinuousInterval,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> GriddedDensity:
    """Gaussian KDE on a uniform grid over ``domain``, renormalised to unit mass.

    Mass that the kernels put outside the domain is discarded before the
    renormalisation, i.e. the estimate is truncated to the domain.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DataError("cannot fit a density to zero samples")
    if grid_size < 2:
        raise DataError(f"grid_size must be at least 2, got {grid_size}")
    if x.min() < domain.lo or x.max() > domain.hi:
        raise DataError(f"samples fall outside the domain {domain}")
    # sort so the summation order (and therefore the rounding) ignores sample order
    x = np.sort(x)
    h = scott_bandwidth(x, domain)
    grid = np.linspace(domain.lo, domain.hi, grid_size)
    z = (grid[:, None] - x[None, :]) / h
    dens = np.exp(-0.5 * z * z).sum(axis=1)
    masses = dens / dens.sum()
    return GriddedDensity(domain, grid, masses, h)


def fit_categorical_density(
    samples: Sequence[str],
    labels: Sequence[str],
    smoothing: float = 1.0,
) -> PmfDensity:
    """Additively smoothed label frequencies, ``(count + s) / (n + s * L)``.

    ``smoothing=1`` is Laplace smoothing; ``smoothing=0`` gives the exact
    empirical PMF.
    """
    labels = tuple(labels)
    if not samples:
        raise DataError("cannot fit a PMF to zero samples")
    index = {label: j for j, label in enumerate(labels)}
    counts = np.zeros(len(labels))
    for s in samples:
        if s not in index:
            raise DataError(f"unknown label {s!r}; expected one of {list(labels)}")
        counts[index[s]] += 1
    masses = (counts + smoothing) / (len(samples) + smoothing * len(labels))
    return PmfDensity(labels, masses)


def pearson_divergence_density(p: Density, q: Density) -> float:
    """Pearson divergence ``sum_j (p_j / q_j - 1)**2 q_j`` between two densities.

    Both must be of the same kind and share the grid (or label list). Cells
    where both masses are below ``1e-12`` contribute nothing; a cell where only
    ``q`` is below it raises :class:`AbsoluteContinuityError`.
    """
    if isinstance(p, DegenerateDensity) or isinstance(q, DegenerateDensity):
        if isinstance(p, DegenerateDensity) and isinstance(q, DegenerateDensity):
            return 0.0
        raise DataError("a degenerate density can only be compared with another degenerate one")
    if type(p) is not type(q):
        raise DataError(f"cannot compare a {type(p).__name__} with a {type(q).__name__}")
    if isinstance(p, GriddedDensity):
        if p.domain != q.domain or p.points.shape != q.points.shape or not np.array_equal(p.points, q.points):  # type: ignore[union-attr]
            raise DataError("densities are evaluated on different grids")
    elif p.labels != q.labels:  # type: ignore[union-attr]
        raise DataError("PMFs are defined over different labels")
    return _pearson(p.masses, q.masses)


def _pearson(p: np.ndarray, q: np.ndarray) -> float:
    small_q = q < EPS_Q
    if np.any(small_q & (p >= EPS_Q)):
        raise AbsoluteContinuityError("p has mass where q has (numerically) none")
    keep = ~small_q
    ratio = p[keep] / q[keep]
    return float(np.sum((ratio - 1.0) ** 2 * q[keep]))


def pearson_divergence_discrete(alpha: Sequence[float] | np.ndarray, beta: Sequence[float] | np.ndarray) -> float:
    """Pearson divergence between two probability vectors over the same index set.

    Entries with ``beta_i == 0`` must have ``alpha_i == 0`` and contribute nothing.
    """
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    if a.shape != b.shape:
        raise DataError(f"probability vectors differ in length: {a.size} vs {b.size}")
    for name, v in (("alpha", a), ("beta", b)):
        if np.any(v < 0) or abs(v.sum() - 1.0) > MASS_TOL:
            raise DataError(f"{name} is not a probability vector: {v.tolist()}")
    zero = b == 0
    if np.any(zero & (a > 0)):
        raise AbsoluteContinuityError("alpha has mass on an index where beta is zero")
    keep = ~zero
    return float(np.sum((a[keep] / b[keep] - 1.0) ** 2 * b[keep]))


def fit_regime_density(
    samples: np.ndarray,
    domain: ContinuousInterval | CategoricalSet,
    grid_size: int = DEFAULT_GRID_SIZE,
    smoothing: float = 1.0,
) -> GriddedDensity | PmfDensity:
    """Dispatch on the domain kind; categorical samples arrive as label indices."""
    if isinstance(domain, ContinuousInterval):
        return fit_continuous_density(samples, domain, grid_size)
    labels = [domain.labels[int(j)] for j in samples]
    return fit_categorical_density(labels, domain.labels, smoothing)
