"""Local hyperparameter importance estimators.

All estimators work with the indicator of the tighter top set (top-gamma') and
never materialise the local marginal mean itself; everything goes through
Pearson divergences of one-dimensional densities:

* ``cped``: within-regime variance, regimes weighted by alpha**2 / beta
* ``standard``: within-regime plus inter-regime variance
* ``naive-within``: unweighted sum of the within-regime divergences
* ``ped``: the single-domain estimator; conditional parameters need a
  transform from :mod:`cped.baselines` first
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from cped.baselines import EXTENSIONS, apply_expansion, apply_filtering, apply_imputation
from cped.errors import ConditionalParameterError, DataError, InsufficientSamplesWarning, NumericalError
from cped.space import EvaluationSet, Inactive
from cped.stats import (
    DEFAULT_GRID_SIZE,
    QuantilePair,
    fit_regime_density,
    pearson_divergence_density,
    pearson_divergence_discrete,
    top_mask,
)

METHODS = ("cped", "ped", "standard", "naive-within")
MIN_SAMPLES = 2


@dataclass(frozen=True)
class RegimeStats:
    """Per-regime quantities for one parameter.

    ``alpha`` and ``beta`` are the shares of the top-gamma' and top-gamma sets
    that fall in this regime; ``divergence`` is the Pearson divergence between
    the regime's top-gamma' and top-gamma densities.
    """

    index: int
    alpha: float
    beta: float
    n_top_prime: int
    n_top: int
    divergence: float
    inactive: bool = False
    insufficient: bool = False
    samples_top_prime: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False, compare=False)
    samples_top: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False, compare=False)

    @property
    def weight(self) -> float:
        return self.alpha**2 / self.beta if self.beta > 0 else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "alpha": self.alpha,
            "beta": self.beta,
            "n_top_prime": self.n_top_prime,
            "n_top": self.n_top,
            "divergence": self.divergence,
            "inactive": self.inactive,
            "insufficient": self.insufficient,
        }


@dataclass(frozen=True)
class VarianceBreakdown:
    param: str
    within: float
    inter: float
    total: float
    kappa: float
    regimes: tuple[RegimeStats, ...]
    empirical_ratio: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "param": self.param,
            "within": self.within,
            "inter": self.inter,
            "total": self.total,
            "kappa": self.kappa,
            "empirical_ratio": self.empirical_ratio,
            "regimes": [r.to_dict() for r in self.regimes],
        }


@dataclass(frozen=True)
class HpiReport:
    method: str
    quantiles: QuantilePair
    raw: dict[str, float]
    normalized: dict[str, float]
    degenerate: bool
    extension: str | None = None
    grid_size: int = DEFAULT_GRID_SIZE
    smoothing: float = 1.0
    empirical_ratio: float | None = None
    breakdowns: dict[str, VarianceBreakdown] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "extension": self.extension,
            "quantiles": {"gamma": self.quantiles.gamma, "gamma_prime": self.quantiles.gamma_prime},
            "kappa": self.quantiles.kappa,
            "empirical_ratio": self.empirical_ratio,
            "grid_size": self.grid_size,
            "smoothing": self.smoothing,
            "raw": dict(self.raw),
            "normalized": dict(self.normalized),
            "degenerate": self.degenerate,
            "breakdowns": {k: v.to_dict() for k, v in self.breakdowns.items()},
        }


def _top_masks(evalset: EvaluationSet, q: QuantilePair) -> tuple[np.ndarray, np.ndarray]:
    f = evalset.objectives
    top = top_mask(f, q.gamma)
    top_prime = top_mask(f, q.gamma_prime)
    return top, top_prime


def _divergence(
    prime: np.ndarray,
    full: np.ndarray,
    domain: Any,
    grid_size: int,
    smoothing: float,
) -> float:
    p = fit_regime_density(prime, domain, grid_size, smoothing)
    q = fit_regime_density(full, domain, grid_size, smoothing)
    return pearson_divergence_density(p, q)


def _warn_insufficient(param: str, index: int, min_samples: int) -> None:
    warnings.warn(
        f"regime {index} of {param!r} has fewer than {min_samples} active samples in a top set; "
        "its within-regime divergence is set to 0",
        InsufficientSamplesWarning,
        stacklevel=3,
    )


def regime_stats(
    evalset: EvaluationSet,
    param: str,
    q: QuantilePair,
    grid_size: int = DEFAULT_GRID_SIZE,
    smoothing: float = 1.0,
    min_samples: int = MIN_SAMPLES,
    masks: tuple[np.ndarray, np.ndarray] | None = None,
) -> list[RegimeStats]:
    """Regime shares and within-regime divergences of ``param``.

    Regimes absent from the top-gamma set get ``beta = 0`` and divergence 0.
    A regime present in both top sets but with fewer than ``min_samples``
    active values in either also gets divergence 0, with an
    :class:`InsufficientSamplesWarning`.
    """
    top, top_prime = masks if masks is not None else _top_masks(evalset, q)
    spec = evalset.space[param]
    col = evalset.columns[param]
    n_top = int(top.sum())
    n_prime = int(top_prime.sum())
    out = []
    for regime in spec.regimes:
        in_regime = col.regime == regime.index
        sel_top = in_regime & top
        sel_prime = in_regime & top_prime
        k_top = int(sel_top.sum())
        k_prime = int(sel_prime.sum())
        alpha = k_prime / n_prime
        beta = k_top / n_top
        if alpha > 0 and beta == 0:
            raise NumericalError(f"{param!r} regime {regime.index}: alpha > 0 with beta = 0; top sets are not nested")
        inactive = isinstance(regime.domain, Inactive)
        divergence = 0.0
        insufficient = False
        vals_top = col.value[sel_top] if not inactive else np.empty(0)
        vals_prime = col.value[sel_prime] if not inactive else np.empty(0)
        if not inactive and k_prime > 0:
            if k_prime < min_samples or k_top < min_samples:
                insufficient = True
                _warn_insufficient(param, regime.index, min_samples)
            else:
                divergence = _divergence(vals_prime, vals_top, regime.domain, grid_size, smoothing)
        out.append(
            RegimeStats(
                index=regime.index,
                alpha=alpha,
                beta=beta,
                n_top_prime=k_prime,
                n_top=k_top,
                divergence=divergence,
                inactive=inactive,
                insufficient=insufficient,
                samples_top_prime=vals_prime,
                samples_top=vals_top,
            )
        )
    return out


def cped_within_variance(stats: list[RegimeStats], q: QuantilePair) -> float:
    """Within-regime local marginal variance in closed form.

    ``kappa**2 * sum_i alpha_i**2 / beta_i * D_i`` over regimes with
    ``beta_i > 0``, where ``kappa = gamma' / gamma``.
    """
    total = sum(s.alpha**2 / s.beta * s.divergence for s in stats if s.beta > 0)
    return q.kappa**2 * total


def naive_within_variance(stats: list[RegimeStats], q: QuantilePair) -> float:
    """``kappa**2 * sum_i D_i``, the within-regime divergences without regime weights."""
    return q.kappa**2 * sum(s.divergence for s in stats if s.beta > 0)


def standard_local_variance(stats: list[RegimeStats], q: QuantilePair, param: str = "") -> VarianceBreakdown:
    """Standard local marginal variance split into within- and inter-regime parts.

    The inter-regime part is ``kappa**2 * D_PE(alpha || beta)``.
    """
    within = cped_within_variance(stats, q)
    alpha = np.array([s.alpha for s in stats])
    beta = np.array([s.beta for s in stats])
    inter = q.kappa**2 * pearson_divergence_discrete(alpha, beta)
    ratio = None
    if stats:
        n_prime = sum(s.n_top_prime for s in stats)
        n_top = sum(s.n_top for s in stats)
        ratio = n_prime / n_top if n_top else None
    return VarianceBreakdown(param, within, inter, within + inter, q.kappa, tuple(stats), ratio)


def ped_variance(
    evalset: EvaluationSet,
    param: str,
    q: QuantilePair,
    grid_size: int = DEFAULT_GRID_SIZE,
    smoothing: float = 1.0,
    min_samples: int = MIN_SAMPLES,
    masks: tuple[np.ndarray, np.ndarray] | None = None,
) -> float:
    """Single-domain local marginal variance ``kappa**2 * D_PE(p_gamma' || p_gamma)``.

    Only defined for parameters with one regime. Apply a transform from
    :mod:`cped.baselines` (or use the ``cped`` method) for conditional ones.
    """
    spec = evalset.space[param]
    if spec.is_conditional:
        raise ConditionalParameterError(
            f"{param!r} is conditional ({spec.n_regimes} regimes); plain PED-ANOVA needs a single domain. "
            "Use method 'cped', or method 'ped' with an extension (filtering, imputation or expansion)"
        )
    domain = spec.regimes[0].domain
    if isinstance(domain, Inactive) or len(evalset) == 0:
        return 0.0
    top, top_prime = masks if masks is not None else _top_masks(evalset, q)
    values = evalset.columns[param].value
    prime, full = values[top_prime], values[top]
    if prime.size < min_samples or full.size < min_samples:
        _warn_insufficient(param, 1, min_samples)
        return 0.0
    return q.kappa**2 * _divergence(prime, full, domain, grid_size, smoothing)


def normalize_hpi(raw: Mapping[str, float]) -> tuple[dict[str, float], bool]:
    """Divide by the total. All-zero input gives all zeros and ``degenerate=True``."""
    for name, v in raw.items():
        if v < 0:
            raise NumericalError(f"negative raw variance {v} for {name!r}")
    total = sum(raw.values())
    if total == 0:
        return {name: 0.0 for name in raw}, True
    return {name: v / total for name, v in raw.items()}, False


def analyze(
    evalset: EvaluationSet,
    q: QuantilePair,
    method: str = "cped",
    grid_size: int = DEFAULT_GRID_SIZE,
    extension: str | None = None,
    smoothing: float = 1.0,
    min_samples: int = MIN_SAMPLES,
) -> HpiReport:
    """Importance of every parameter of ``evalset`` by the chosen method."""
    if method not in METHODS:
        raise DataError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if extension is not None and method != "ped":
        raise DataError("an extension is only meaningful with method 'ped'")
    if extension is not None and extension not in EXTENSIONS:
        raise DataError(f"unknown extension {extension!r}; choose from {', '.join(EXTENSIONS)}")

    opts = dict(grid_size=grid_size, smoothing=smoothing, min_samples=min_samples)
    raw: dict[str, float] = {}
    breakdowns: dict[str, VarianceBreakdown] = {}
    ratio = None

    if method == "ped":
        names = evalset.space.names
        if extension == "filtering":
            for name in names:
                filtered = apply_filtering(evalset, name).evalset
                raw[name] = ped_variance(filtered, name, q, **opts) if len(filtered) else 0.0
        else:
            if extension == "imputation":
                evalset = apply_imputation(evalset).evalset
            elif extension == "expansion":
                evalset = apply_expansion(evalset).evalset
            masks = _top_masks(evalset, q)
            ratio = masks[1].sum() / masks[0].sum()
            for name in names:
                raw[name] = ped_variance(evalset, name, q, masks=masks, **opts)
    else:
        masks = _top_masks(evalset, q)
        ratio = masks[1].sum() / masks[0].sum()
        for spec in evalset.space:
            stats = regime_stats(evalset, spec.name, q, masks=masks, **opts)
            bd = standard_local_variance(stats, q, spec.name)
            breakdowns[spec.name] = bd
            if method == "cped":
                raw[spec.name] = bd.within
            elif method == "standard":
                raw[spec.name] = bd.total
            else:
                raw[spec.name] = naive_within_variance(stats, q)

    normalized, degenerate = normalize_hpi(raw)
    return HpiReport(
        method=method,
        quantiles=q,
        raw=raw,
        normalized=normalized,
        degenerate=degenerate,
        extension=extension,
        grid_size=grid_size,
        smoothing=smoothing,
        empirical_ratio=None if ratio is None else float(ratio),
        breakdowns=breakdowns,
    )
