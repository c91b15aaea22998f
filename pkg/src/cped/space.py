"""Conditional search spaces, regimes, trials and their ingestion.

A parameter has one or more *regimes*. Each regime is selected by a conjunction
of tests on earlier (parent) parameters and carries its own domain, which may be
:data:`INACTIVE`. Inactive values are represented by ``None`` everywhere, and by
``null`` in JSON.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Any, Iterator, Mapping, Sequence, Union

import jsonschema
import numpy as np

from cped.errors import RegimeAssignmentError, SpaceError, TrialError

ParamValue = Union[float, str, None]


@dataclass(frozen=True)
class ContinuousInterval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise SpaceError(f"interval bounds must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise SpaceError(f"interval needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def kind(self) -> str:
        return "continuous"

    @property
    def midpoint(self) -> float:
        return (self.lo + self.hi) / 2.0

    def contains(self, value: ParamValue) -> bool:
        return _is_number(value) and self.lo <= value <= self.hi  # type: ignore[operator]

    def __str__(self) -> str:
        return f"[{self.lo:g}, {self.hi:g}]"


@dataclass(frozen=True)
class CategoricalSet:
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise SpaceError("categorical domain needs at least one label")
        if len(set(self.labels)) != len(self.labels):
            raise SpaceError(f"categorical labels must be distinct, got {list(self.labels)}")

    @property
    def kind(self) -> str:
        return "categorical"

    def contains(self, value: ParamValue) -> bool:
        return isinstance(value, str) and value in self.labels

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def __str__(self) -> str:
        return "{" + ", ".join(self.labels) + "}"


@dataclass(frozen=True)
class Inactive:
    """The domain ``{⊥}`` of a regime in which the parameter is absent."""

    @property
    def kind(self) -> str:
        return "inactive"

    def contains(self, value: ParamValue) -> bool:
        return value is None

    def __str__(self) -> str:
        return "inactive"


INACTIVE = Inactive()
Domain = Union[ContinuousInterval, CategoricalSet, Inactive]


@dataclass(frozen=True)
class Equals:
    label: str

    def holds(self, value: ParamValue) -> bool:
        return value == self.label

    def __str__(self) -> str:
        return f"== {self.label!r}"


@dataclass(frozen=True)
class InInterval:
    """Half-open test ``lo <= v < hi``; ``closed_high`` also admits ``v == hi``."""

    lo: float
    hi: float
    closed_high: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise SpaceError(f"condition interval needs finite lo < hi, got [{self.lo}, {self.hi}]")

    def holds(self, value: ParamValue) -> bool:
        if not _is_number(value):
            return False
        return self.lo <= value < self.hi or (self.closed_high and value == self.hi)  # type: ignore[operator]

    def __str__(self) -> str:
        return f"in [{self.lo:g}, {self.hi:g}{']' if self.closed_high else ')'}"


@dataclass(frozen=True)
class RegimeCondition:
    parent: str
    test: Equals | InInterval

    def holds(self, params: Mapping[str, ParamValue]) -> bool:
        if self.parent not in params:
            raise RegimeAssignmentError(f"parent {self.parent!r} has no value")
        value = params[self.parent]
        if value is None:
            raise RegimeAssignmentError(f"parent {self.parent!r} is inactive")
        return self.test.holds(value)


@dataclass(frozen=True)
class RegimeSpec:
    index: int
    conditions: tuple[RegimeCondition, ...]
    domain: Domain

    def __post_init__(self) -> None:
        object.__setattr__(self, "conditions", tuple(self.conditions))

    def matches(self, params: Mapping[str, ParamValue]) -> bool:
        return all(cond.holds(params) for cond in self.conditions)


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    regimes: tuple[RegimeSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "regimes", tuple(self.regimes))
        if not self.regimes:
            raise SpaceError(f"parameter {self.name!r} has no regimes")
        indices = [r.index for r in self.regimes]
        if indices != list(range(1, len(self.regimes) + 1)):
            raise SpaceError(f"parameter {self.name!r}: regime indices must be 1..K, got {indices}")

    @property
    def n_regimes(self) -> int:
        return len(self.regimes)

    @property
    def is_conditional(self) -> bool:
        return len(self.regimes) > 1

    @property
    def parents(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for regime in self.regimes:
            for cond in regime.conditions:
                seen.setdefault(cond.parent, None)
        return tuple(seen)

    @property
    def can_be_inactive(self) -> bool:
        return any(isinstance(r.domain, Inactive) for r in self.regimes)

    @property
    def active_domains(self) -> list[ContinuousInterval | CategoricalSet]:
        return [r.domain for r in self.regimes if not isinstance(r.domain, Inactive)]

    def regime(self, index: int) -> RegimeSpec:
        return self.regimes[index - 1]


@dataclass(frozen=True)
class SearchSpace:
    """An ordered collection of parameters; parents always precede children.

    Construction checks that every parameter's regimes partition the space of
    its parents' values (exactly one regime holds for every reachable parent
    configuration).
    """

    parameters: tuple[ParameterSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parameters", tuple(self.parameters))
        seen: dict[str, ParameterSpec] = {}
        for pos, spec in enumerate(self.parameters):
            path = f"parameters/{pos}"
            if spec.name in seen:
                raise SpaceError(f"duplicate parameter name {spec.name!r}", path)
            for parent in spec.parents:
                if parent == spec.name:
                    raise SpaceError(f"{spec.name!r} conditions on itself", path)
                if parent not in seen:
                    later = any(p.name == parent for p in self.parameters)
                    reason = "cyclic or out-of-order parent reference" if later else "unknown parent"
                    raise SpaceError(f"{reason} {parent!r}", path)
            _check_regime_cover(spec, seen, path)
            seen[spec.name] = spec

    def __iter__(self) -> Iterator[ParameterSpec]:
        return iter(self.parameters)

    def __len__(self) -> int:
        return len(self.parameters)

    def __contains__(self, name: object) -> bool:
        return any(p.name == name for p in self.parameters)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.parameters]

    def __getitem__(self, name: str) -> ParameterSpec:
        for spec in self.parameters:
            if spec.name == name:
                return spec
        raise KeyError(name)


def hull_domain(spec: ParameterSpec) -> ContinuousInterval | CategoricalSet | Inactive:
    """Smallest single domain containing every active regime domain of ``spec``.

    Continuous domains merge to ``[min lo, max hi]``; categorical ones to the
    union of labels in first-seen order. Returns :data:`INACTIVE` when the
    parameter is never active.
    """
    domains = spec.active_domains
    if not domains:
        return INACTIVE
    kinds = {d.kind for d in domains}
    if len(kinds) > 1:
        raise SpaceError(f"parameter {spec.name!r} mixes continuous and categorical regimes")
    if kinds == {"continuous"}:
        return ContinuousInterval(min(d.lo for d in domains), max(d.hi for d in domains))  # type: ignore[union-attr]
    labels: dict[str, None] = {}
    for d in domains:
        for label in d.labels:  # type: ignore[union-attr]
            labels.setdefault(label, None)
    return CategoricalSet(tuple(labels))


def _is_number(value: object) -> bool:
    return isinstance(value, (int, float, np.floating, np.integer)) and not isinstance(value, bool)


# -- regime cover analysis ---------------------------------------------------


def _parent_pieces(parent: ParameterSpec, tests: list[Equals | InInterval], path: str) -> list[tuple[ParamValue, str]]:
    """Representative values for the cells on which every test is constant."""
    if parent.can_be_inactive:
        raise SpaceError(
            f"parent {parent.name!r} can be inactive; conditions must reference always-active parameters",
            path,
        )
    hull = hull_domain(parent)
    if isinstance(hull, CategoricalSet):
        if any(isinstance(t, InInterval) for t in tests):
            raise SpaceError(f"interval condition on categorical parent {parent.name!r}", path)
        return [(label, f"{parent.name}={label!r}") for label in hull.labels]

    if any(isinstance(t, Equals) for t in tests):
        raise SpaceError(f"equality condition on continuous parent {parent.name!r}", path)
    domains = parent.active_domains
    breaks = {d.lo for d in domains} | {d.hi for d in domains}  # type: ignore[union-attr]
    for t in tests:
        breaks.update((t.lo, t.hi))  # type: ignore[union-attr]
    points = sorted(breaks)
    pieces: list[tuple[ParamValue, str]] = []
    for a, b in zip(points, points[1:]):
        if any(d.contains(a) for d in domains):
            pieces.append((a, f"{parent.name}={a:g}"))
        mid = 0.5 * (a + b)
        if any(d.contains(mid) for d in domains):
            pieces.append((mid, f"{parent.name} in ({a:g}, {b:g})"))
    if any(d.contains(points[-1]) for d in domains):
        pieces.append((points[-1], f"{parent.name}={points[-1]:g}"))
    return pieces


def _check_regime_cover(spec: ParameterSpec, declared: Mapping[str, ParameterSpec], path: str) -> None:
    parents = spec.parents
    if not parents:
        if spec.is_conditional:
            raise SpaceError(f"{spec.name!r} has {spec.n_regimes} regimes but no conditions", path)
        return
    cells = []
    for parent in parents:
        tests = [c.test for r in spec.regimes for c in r.conditions if c.parent == parent]
        cells.append(_parent_pieces(declared[parent], tests, path))
    for combo in itertools.product(*cells):
        params = {p: value for p, (value, _) in zip(parents, combo)}
        hits = [r.index for r in spec.regimes if r.matches(params)]
        if len(hits) != 1:
            where = ", ".join(desc for _, desc in combo)
            if hits:
                msg = f"overlapping regimes {hits} for {spec.name!r} at {where}"
            else:
                msg = f"non-exhaustive regimes for {spec.name!r}: nothing covers {where}"
            raise SpaceError(msg, f"{path}/regimes")


# -- JSON documents ------------------------------------------------------------

_DOMAIN_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"kind": {"const": "continuous"}, "lo": {"type": "number"}, "hi": {"type": "number"}},
            "required": ["kind", "lo", "hi"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "categorical"},
                "labels": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            },
            "required": ["kind", "labels"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"kind": {"const": "inactive"}},
            "required": ["kind"],
            "additionalProperties": False,
        },
    ]
}

_CONDITION_SCHEMA = {
    "type": "object",
    "properties": {
        "parent": {"type": "string"},
        "equals": {"type": "string"},
        "in": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    },
    "required": ["parent"],
    "oneOf": [{"required": ["equals"]}, {"required": ["in"]}],
    "additionalProperties": False,
}

SPACE_SCHEMA = {
    "type": "object",
    "properties": {
        "parameters": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "regimes": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "properties": {
                                "conditions": {"type": "array", "items": _CONDITION_SCHEMA},
                                "domain": _DOMAIN_SCHEMA,
                            },
                            "required": ["conditions", "domain"],
                            "additionalProperties": False,
                        },
                    },
                },
                "required": ["name", "regimes"],
                "additionalProperties": False,
            },
        }
    },
    "required": ["parameters"],
    "additionalProperties": False,
}


def _parse_domain(doc: Mapping[str, Any], path: str) -> Domain:
    try:
        if doc["kind"] == "continuous":
            return ContinuousInterval(float(doc["lo"]), float(doc["hi"]))
        if doc["kind"] == "categorical":
            return CategoricalSet(tuple(doc["labels"]))
    except SpaceError as exc:
        raise SpaceError(str(exc), path) from None
    return INACTIVE


def parse_space(document: Mapping[str, Any] | str) -> SearchSpace:
    """Build a validated :class:`SearchSpace` from a JSON document (or its text).

    Interval conditions are half-open ``[lo, hi)``, except that an interval whose
    upper end equals the parent's largest admissible value is closed there, so
    that every real parent value matches exactly one regime.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SpaceError(f"invalid JSON: {exc}") from None
    validator = jsonschema.Draft202012Validator(SPACE_SCHEMA)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SpaceError(err.message, "/".join(str(p) for p in err.absolute_path) or "<root>")

    declared: dict[str, ParameterSpec] = {}
    params = []
    for pos, pdoc in enumerate(document["parameters"]):
        name = pdoc["name"]
        regimes = []
        for ri, rdoc in enumerate(pdoc["regimes"]):
            rpath = f"parameters/{pos}/regimes/{ri}"
            conditions = []
            for ci, cdoc in enumerate(rdoc["conditions"]):
                parent = cdoc["parent"]
                cpath = f"{rpath}/conditions/{ci}"
                if "equals" in cdoc:
                    test: Equals | InInterval = Equals(cdoc["equals"])
                else:
                    lo, hi = (float(v) for v in cdoc["in"])
                    top = _parent_top(declared.get(parent))
                    try:
                        test = InInterval(lo, hi, closed_high=top is not None and hi == top)
                    except SpaceError as exc:
                        raise SpaceError(str(exc), cpath) from None
                conditions.append(RegimeCondition(parent, test))
            domain = _parse_domain(rdoc["domain"], f"{rpath}/domain")
            regimes.append(RegimeSpec(ri + 1, tuple(conditions), domain))
        try:
            spec = ParameterSpec(name, tuple(regimes))
        except SpaceError as exc:
            raise SpaceError(str(exc), f"parameters/{pos}") from None
        params.append(spec)
        declared.setdefault(name, spec)
    return SearchSpace(tuple(params))


def _parent_top(parent: ParameterSpec | None) -> float | None:
    if parent is None:
        return None
    try:
        hull = hull_domain(parent)
    except SpaceError:
        return None
    return hull.hi if isinstance(hull, ContinuousInterval) else None


def _domain_to_doc(domain: Domain) -> dict[str, Any]:
    if isinstance(domain, ContinuousInterval):
        return {"kind": "continuous", "lo": domain.lo, "hi": domain.hi}
    if isinstance(domain, CategoricalSet):
        return {"kind": "categorical", "labels": list(domain.labels)}
    return {"kind": "inactive"}


def serialize_space(space: SearchSpace) -> dict[str, Any]:
    """Inverse of :func:`parse_space`."""
    out = []
    for spec in space:
        regimes = []
        for regime in spec.regimes:
            conds = []
            for cond in regime.conditions:
                if isinstance(cond.test, Equals):
                    conds.append({"parent": cond.parent, "equals": cond.test.label})
                else:
                    conds.append({"parent": cond.parent, "in": [cond.test.lo, cond.test.hi]})
            regimes.append({"conditions": conds, "domain": _domain_to_doc(regime.domain)})
        out.append({"name": spec.name, "regimes": regimes})
    return {"parameters": out}


def load_space(path: str | Path) -> SearchSpace:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpaceError(f"cannot read {path}: {exc.strerror}") from None
    return parse_space(text)


# -- trials ----------------------------------------------------------------------


@dataclass(frozen=True)
class Trial:
    """One evaluated configuration. ``None`` marks an inactive parameter."""

    params: Mapping[str, ParamValue]
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        object.__setattr__(self, "value", float(self.value))

    def __getitem__(self, name: str) -> ParamValue:
        return self.params[name]

    def to_json(self) -> dict[str, Any]:
        return {"params": dict(self.params), "value": self.value}


@dataclass(frozen=True)
class Violation:
    param: str
    reason: str

    def __str__(self) -> str:
        return f"{self.param}: {self.reason}"


def _params_of(trial: Trial | Mapping[str, ParamValue]) -> Mapping[str, ParamValue]:
    return trial.params if isinstance(trial, Trial) else trial


def assign_regime(space: SearchSpace, param: str, trial: Trial | Mapping[str, ParamValue]) -> int:
    """Return the 1-based index of the unique regime of ``param`` that ``trial`` falls in."""
    spec = space[param]
    params = _params_of(trial)
    hits = [r.index for r in spec.regimes if r.matches(params)]
    if len(hits) != 1:
        kind = "no regime" if not hits else f"regimes {hits}"
        raise RegimeAssignmentError(f"{kind} of {param!r} match the trial's parent values")
    return hits[0]


def validate_trial(space: SearchSpace, trial: Trial | Mapping[str, ParamValue]) -> list[Violation]:
    """Every way in which ``trial`` breaks the space; an empty list means valid."""
    params = _params_of(trial)
    out: list[Violation] = []
    if isinstance(trial, Trial) and not math.isfinite(trial.value):
        out.append(Violation("<value>", f"objective must be finite, got {trial.value}"))
    for name in params:
        if name not in space:
            out.append(Violation(name, "not a parameter of the search space"))
    for spec in space:
        if spec.name not in params:
            out.append(Violation(spec.name, "missing"))
            continue
        try:
            index = assign_regime(space, spec.name, params)
        except RegimeAssignmentError as exc:
            out.append(Violation(spec.name, str(exc)))
            continue
        domain = spec.regime(index).domain
        value = params[spec.name]
        if isinstance(domain, Inactive):
            if value is not None:
                out.append(Violation(spec.name, f"must be inactive in regime {index}, got {value!r}"))
        elif value is None:
            out.append(Violation(spec.name, f"must be active in regime {index} (domain {domain})"))
        elif _is_number(value) and not math.isfinite(value):  # type: ignore[arg-type]
            out.append(Violation(spec.name, f"value {value} is not finite"))
        elif not domain.contains(value):
            out.append(Violation(spec.name, f"{spec.name}={value!r} outside {domain} (regime {index})"))
    return out


@dataclass(frozen=True)
class ParamColumn:
    """Columnar view of one parameter: regime index and numeric value per trial.

    Continuous values are stored as-is; categorical values as the label's index
    within its regime domain; inactive entries hold 0.0 and are told apart by
    their regime.
    """

    regime: np.ndarray
    value: np.ndarray


@dataclass(frozen=True)
class EvaluationSet:
    space: SearchSpace
    trials: tuple[Trial, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "trials", tuple(self.trials))
        for n, trial in enumerate(self.trials):
            problems = validate_trial(self.space, trial)
            if problems:
                raise TrialError(f"trial {n}: " + "; ".join(map(str, problems)))

    def __len__(self) -> int:
        return len(self.trials)

    @cached_property
    def objectives(self) -> np.ndarray:
        return np.array([t.value for t in self.trials], dtype=float)

    @cached_property
    def columns(self) -> dict[str, ParamColumn]:
        cols = {}
        for spec in self.space:
            regime = np.empty(len(self.trials), dtype=np.int64)
            value = np.zeros(len(self.trials), dtype=float)
            for n, trial in enumerate(self.trials):
                i = assign_regime(self.space, spec.name, trial)
                regime[n] = i
                v = trial.params[spec.name]
                domain = spec.regime(i).domain
                if isinstance(domain, CategoricalSet):
                    value[n] = domain.index(v)  # type: ignore[arg-type]
                elif v is not None:
                    value[n] = float(v)  # type: ignore[arg-type]
            regime.flags.writeable = False
            value.flags.writeable = False
            cols[spec.name] = ParamColumn(regime, value)
        return cols

    def subset(self, mask: Sequence[bool] | np.ndarray) -> EvaluationSet:
        keep = [t for t, m in zip(self.trials, mask) if m]
        return EvaluationSet(self.space, tuple(keep))


def load_trials(path: str | Path, space: SearchSpace) -> EvaluationSet:
    """Read a JSON Lines trial log; errors carry the 1-based line number."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise TrialError(f"cannot read {path}: {exc.strerror}") from None
    trials = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TrialError(f"invalid JSON: {exc.msg}", lineno) from None
        if not isinstance(record, dict) or not isinstance(record.get("params"), dict):
            raise TrialError('expected an object with a "params" object', lineno)
        value = record.get("value")
        if not _is_number(value):
            raise TrialError(f'"value" must be a number, got {value!r}', lineno)
        trial = Trial(record["params"], value)
        problems = validate_trial(space, trial)
        if problems:
            raise TrialError("; ".join(map(str, problems)), lineno)
        trials.append(trial)
    if not trials:
        raise TrialError(f"empty evaluation set in {path}")
    return EvaluationSet(space, tuple(trials))


def write_trials(path: str | Path, trials: Sequence[Trial]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for trial in trials:
            fh.write(json.dumps(trial.to_json()) + "\n")
