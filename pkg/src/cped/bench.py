"""Synthetic conditional objectives and gamma' sweeps over random seeds.

Randomness comes from numpy's PCG64 bit generator seeded directly with each
seed, so a given seed yields the same samples on every platform.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Mapping, Sequence

import numpy as np

from cped.errors import DataError, InsufficientSamplesWarning, TrialError
from cped.hpi import analyze
from cped.space import (
    CategoricalSet,
    ContinuousInterval,
    EvaluationSet,
    Inactive,
    ParamValue,
    SearchSpace,
    Trial,
    assign_regime,
    parse_space,
)
from cped.stats import DEFAULT_GRID_SIZE, QuantilePair

GATE = 0.5


def _require(params: Mapping[str, ParamValue], name: str) -> float:
    v = params[name]
    if v is None:
        raise TrialError(f"objective needs {name!r} but it is inactive")
    return float(v)  # type: ignore[arg-type]


def _activation_rule(params: Mapping[str, ParamValue]) -> float:
    # c == 0.5 belongs to the y branch
    return _require(params, "x") if _require(params, "c") < GATE else _require(params, "y")


def _sum_rule(params: Mapping[str, ParamValue]) -> float:
    return _require(params, "x") + _require(params, "y")


def _gated(name: str, low: dict | None, high: dict | None) -> dict:
    inactive = {"kind": "inactive"}
    return {
        "name": name,
        "regimes": [
            {"conditions": [{"parent": "c", "in": [0.0, GATE]}], "domain": low or inactive},
            {"conditions": [{"parent": "c", "in": [GATE, 1.0]}], "domain": high or inactive},
        ],
    }


def _interval(lo: float, hi: float) -> dict:
    return {"kind": "continuous", "lo": lo, "hi": hi}


def _gate_param() -> dict:
    return {"name": "c", "regimes": [{"conditions": [], "domain": _interval(0.0, 1.0)}]}


def activation_space(x: tuple[float, float], y: tuple[float, float]) -> SearchSpace:
    """``x`` is active iff ``c < 0.5``, ``y`` iff ``c >= 0.5``."""
    return parse_space(
        {"parameters": [_gate_param(), _gated("x", _interval(*x), None), _gated("y", None, _interval(*y))]}
    )


def regime_domains_space() -> SearchSpace:
    return parse_space(
        {
            "parameters": [
                _gate_param(),
                _gated("x", _interval(-7.0, -2.0), _interval(2.0, 7.0)),
                _gated("y", _interval(-5.0, -2.0), _interval(2.0, 5.0)),
            ]
        }
    )


@dataclass(frozen=True)
class SyntheticObjective:
    name: str
    space: SearchSpace = field(repr=False)
    rule: Callable[[Mapping[str, ParamValue]], float] = field(repr=False)


def activation_disjoint() -> SyntheticObjective:
    return SyntheticObjective("activation-disjoint", activation_space((-5.0, -2.0), (2.0, 5.0)), _activation_rule)


def activation_overlap() -> SyntheticObjective:
    return SyntheticObjective("activation-overlap", activation_space((-5.0, 2.0), (-2.0, 5.0)), _activation_rule)


def regime_domains() -> SyntheticObjective:
    return SyntheticObjective("regime-domains", regime_domains_space(), _sum_rule)


OBJECTIVES: dict[str, Callable[[], SyntheticObjective]] = {
    "activation-disjoint": activation_disjoint,
    "activation-overlap": activation_overlap,
    "regime-domains": regime_domains,
}


def get_objective(name: str) -> SyntheticObjective:
    try:
        return OBJECTIVES[name]()
    except KeyError:
        raise DataError(f"unknown objective {name!r}; choose from {', '.join(OBJECTIVES)}") from None


def evaluate_objective(obj: SyntheticObjective, trial: Trial | Mapping[str, ParamValue]) -> float:
    params = trial.params if isinstance(trial, Trial) else trial
    return obj.rule(params)


def sample_uniform(space: SearchSpace, n: int, seed: int) -> list[dict[str, ParamValue]]:
    """Draw ``n`` configurations uniformly, parents first.

    Every parameter consumes exactly ``n`` uniforms from the stream whether or
    not it is active, which keeps later parameters' draws independent of the
    earlier regime pattern.
    """
    if n < 1:
        raise DataError(f"n must be at least 1, got {n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    configs: list[dict[str, ParamValue]] = [{} for _ in range(n)]
    for spec in space:
        u = rng.random(n)
        for k, cfg in enumerate(configs):
            domain = spec.regime(assign_regime(space, spec.name, cfg)).domain
            if isinstance(domain, Inactive):
                cfg[spec.name] = None
            elif isinstance(domain, ContinuousInterval):
                cfg[spec.name] = domain.lo + float(u[k]) * (domain.hi - domain.lo)
            else:
                j = min(int(u[k] * len(domain.labels)), len(domain.labels) - 1)
                cfg[spec.name] = domain.labels[j]
    return configs


def make_evalset(obj: SyntheticObjective, n: int, seed: int) -> EvaluationSet:
    configs = sample_uniform(obj.space, n, seed)
    return EvaluationSet(obj.space, tuple(Trial(cfg, evaluate_objective(obj, cfg)) for cfg in configs))


def gamma_prime_grid(gamma: float, step: float) -> np.ndarray:
    """``step, 2*step, ...`` up to and including ``gamma - step``."""
    if not 0.0 < step < gamma:
        raise DataError(f"step must lie in (0, gamma), got step={step}, gamma={gamma}")
    count = int(math.floor((gamma - step) / step + 1e-9))
    return np.round(step * np.arange(1, count + 1), 10)


@dataclass(frozen=True)
class SweepConfig:
    objective: SyntheticObjective
    n: int = 1000
    gamma: float = 1.0
    gamma_prime_step: float = 0.01
    seeds: tuple[int, ...] = tuple(range(10))
    grid_size: int = DEFAULT_GRID_SIZE

    def __post_init__(self) -> None:
        object.__setattr__(self, "seeds", tuple(self.seeds))
        if not self.seeds:
            raise DataError("need at least one seed")
        if not 0.0 < self.gamma <= 1.0:
            raise DataError(f"gamma must lie in (0, 1], got {self.gamma}")
        gamma_prime_grid(self.gamma, self.gamma_prime_step)

    @property
    def gamma_primes(self) -> np.ndarray:
        return gamma_prime_grid(self.gamma, self.gamma_prime_step)


@dataclass(frozen=True)
class SweepRow:
    gamma_prime: float
    param: str
    method: str
    mean_hpi: float
    stderr_hpi: float
    n_seeds: int


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    # (seed, gamma') pairs whose analysis had all-zero raw variances
    degenerate: tuple[tuple[int, float], ...] = ()

    def curve(self, param: str, method: str | None = None) -> tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.rows if r.param == param and (method is None or r.method == method)]
        rows.sort(key=lambda r: r.gamma_prime)
        return np.array([r.gamma_prime for r in rows]), np.array([r.mean_hpi for r in rows])

    @property
    def params(self) -> list[str]:
        return list(dict.fromkeys(r.param for r in self.rows))

    @property
    def methods(self) -> list[str]:
        return list(dict.fromkeys(r.method for r in self.rows))


def method_label(method: str, extension: str | None) -> str:
    return f"{method}+{extension}" if extension else method


def aggregate_seeds(per_seed: Sequence[Mapping[str, float]]) -> dict[str, tuple[float, float, int]]:
    """Mean and standard error (``std(ddof=1) / sqrt(n)``) per parameter."""
    if not per_seed:
        raise DataError("need at least one seed to aggregate")
    out = {}
    for name in per_seed[0]:
        vals = np.array([s[name] for s in per_seed], dtype=float)
        stderr = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
        out[name] = (float(np.mean(vals)), stderr, int(vals.size))
    return out


def _seed_curves(
    config: SweepConfig, seed: int, method: str, extension: str | None, raw: bool
) -> list[dict[str, float] | None]:
    evalset = make_evalset(config.objective, config.n, seed)
    out: list[dict[str, float] | None] = []
    for gp in config.gamma_primes:
        with warnings.catch_warnings():
            # small top sets at tiny gamma' trip the per-regime sample warning on every seed
            warnings.simplefilter("ignore", InsufficientSamplesWarning)
            report = analyze(evalset, QuantilePair(config.gamma, float(gp)), method, config.grid_size, extension)
        if raw:
            out.append(dict(report.raw))
        else:
            out.append(None if report.degenerate else dict(report.normalized))
    return out


def run_sweep(
    config: SweepConfig,
    method: str = "cped",
    extension: str | None = None,
    jobs: int = 1,
    raw: bool = False,
) -> SweepResult:
    """HPI curves over the gamma' grid, averaged over the configured seeds.

    With ``raw=True`` the unnormalised variances are aggregated instead.
    Degenerate (seed, gamma') analyses are left out of the normalised means
    and listed in :attr:`SweepResult.degenerate`.
    """
    work = partial(_seed_curves, config, method=method, extension=extension, raw=raw)
    if jobs > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(config.seeds))) as pool:
            per_seed = list(pool.map(work, config.seeds))
        # pool.map preserves input order, so the merge below is seed-ordered
    else:
        per_seed = [work(seed) for seed in config.seeds]

    label = method_label(method, extension)
    names = config.objective.space.names
    rows = []
    degenerate = []
    for k, gp in enumerate(config.gamma_primes):
        good = []
        for seed, curves in zip(config.seeds, per_seed):
            if curves[k] is None:
                degenerate.append((seed, float(gp)))
            else:
                good.append(curves[k])
        if good:
            agg = aggregate_seeds(good)
        else:
            agg = {name: (0.0, 0.0, 0) for name in names}
        for name in names:
            mean, stderr, count = agg[name]
            rows.append(SweepRow(float(gp), name, label, mean, stderr, count))
    return SweepResult(tuple(rows), tuple(sorted(degenerate)))
