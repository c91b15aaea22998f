"""Naive ways of feeding a conditional evaluation set to a single-domain estimator.

Each transform returns a :class:`TransformedSet` whose search space has one
unconditional regime per parameter, so plain PED-ANOVA applies to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from cped.errors import DataError
from cped.space import (
    CategoricalSet,
    ContinuousInterval,
    EvaluationSet,
    Inactive,
    ParameterSpec,
    RegimeSpec,
    SearchSpace,
    Trial,
    hull_domain,
)

EXTENSIONS = ("filtering", "imputation", "expansion")


@dataclass(frozen=True)
class TransformedSet:
    evalset: EvaluationSet
    transform: str
    param: str | None = None
    provenance: Mapping[str, Any] = field(default_factory=dict)


def _flat_space(domains: Mapping[str, Any]) -> SearchSpace:
    return SearchSpace(tuple(ParameterSpec(name, (RegimeSpec(1, (), dom),)) for name, dom in domains.items()))


def apply_filtering(evalset: EvaluationSet, param: str) -> TransformedSet:
    """Keep only the trials in which ``param`` is active.

    ``param`` gets the hull of its active regime domains. Other parameters are
    kept (with their hull domains) only if they are active in every retained
    trial; the rest are dropped and listed in the provenance.
    """
    space = evalset.space
    kept_idx = [n for n, t in enumerate(evalset.trials) if t.params[param] is not None]
    kept = [evalset.trials[n] for n in kept_idx]
    domains: dict[str, Any] = {}
    dropped = []
    for spec in space:
        if spec.name == param:
            domains[spec.name] = hull_domain(spec)
        elif kept and all(t.params[spec.name] is not None for t in kept):
            domains[spec.name] = hull_domain(spec)
        else:
            dropped.append(spec.name)
    new_space = _flat_space(domains)
    trials = tuple(Trial({k: t.params[k] for k in domains}, t.value) for t in kept)
    provenance = {"kept": kept_idx, "dropped_params": dropped}
    return TransformedSet(EvaluationSet(new_space, trials), "filtering", param, provenance)


def apply_imputation(evalset: EvaluationSet) -> TransformedSet:
    """Replace every inactive value by a default inside the parameter's hull domain.

    Continuous parameters get the hull midpoint; categorical ones get their
    first label. The provenance maps each parameter to its default and the
    indices of the trials that were imputed.
    """
    domains: dict[str, Any] = {}
    defaults: dict[str, Any] = {}
    for spec in evalset.space:
        hull = hull_domain(spec)
        if isinstance(hull, Inactive):
            raise DataError(f"{spec.name!r} is active in no regime; nothing to impute from")
        domains[spec.name] = hull
        defaults[spec.name] = hull.midpoint if isinstance(hull, ContinuousInterval) else hull.labels[0]

    imputed: dict[str, list[int]] = {name: [] for name in domains}
    trials = []
    for n, t in enumerate(evalset.trials):
        params = dict(t.params)
        for name, v in t.params.items():
            if v is None:
                params[name] = defaults[name]
                imputed[name].append(n)
        trials.append(Trial(params, t.value))
    provenance = {
        "defaults": defaults,
        "imputed": {k: v for k, v in imputed.items() if v},
    }
    return TransformedSet(EvaluationSet(_flat_space(domains), tuple(trials)), "imputation", None, provenance)


def apply_expansion(evalset: EvaluationSet) -> TransformedSet:
    """Treat each parameter as drawn from one domain covering all its regimes."""
    domains: dict[str, ContinuousInterval | CategoricalSet] = {}
    for spec in evalset.space:
        if spec.can_be_inactive:
            raise DataError(
                f"{spec.name!r} has an inactive regime; expansion is undefined, use filtering or imputation"
            )
        domains[spec.name] = hull_domain(spec)  # type: ignore[assignment]
    provenance = {"domains": {k: str(v) for k, v in domains.items()}}
    trials = tuple(Trial(t.params, t.value) for t in evalset.trials)
    return TransformedSet(EvaluationSet(_flat_space(domains), trials), "expansion", None, provenance)
