"""Typed measurement requests and total, collect-everything validation.

``validate_request`` never raises on a bad document: every violation in a
request is reported as one diagnostic, and a typed request is produced only
when there are none. ``canonicalize`` is the inverse direction, emitting a
deterministic wire document for a valid request.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional

from falcon.core.types import InvariantViolation, SymbolUnit
from falcon.schemas.docs import PropertySpec, get_schema


@dataclass(frozen=True)
class ValidationIssue:
    """One violation found in a request document."""

    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}" if self.path else self.message


@dataclass(frozen=True)
class ValidationResult:
    request: Optional[object]
    diagnostics: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def _frozen_mapping(values: Mapping[str, float]) -> Mapping[str, float]:
    return MappingProxyType({str(k): float(v) for k, v in values.items()})


@dataclass(frozen=True, eq=False)
class GetSetRequest:
    """Set the listed voltages, then read one value from every getter."""

    SCHEMA_ID = "Measure_Get_Set"

    set_voltages: Mapping[str, float]
    sample_rate: float
    num_points: int
    getters: tuple[str, ...]
    setters: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "set_voltages", _frozen_mapping(self.set_voltages))
        object.__setattr__(self, "sample_rate", float(self.sample_rate))
        object.__setattr__(self, "getters", tuple(self.getters))
        object.__setattr__(self, "setters", tuple(self.setters))
        if self.sample_rate <= 0:
            raise InvariantViolation("sample rate must be positive")
        if self.num_points < 1:
            raise InvariantViolation("number of points must be at least 1")
        if not self.getters:
            raise InvariantViolation("getters must not be empty")
        missing = [k for k in self.set_voltages if k not in self.setters]
        if missing:
            raise InvariantViolation(
                f"set voltages name targets outside setters: {missing}"
            )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GetSetRequest):
            return NotImplemented
        return (
            dict(self.set_voltages) == dict(other.set_voltages)
            and self.sample_rate == other.sample_rate
            and self.num_points == other.num_points
            and self.getters == other.getters
            and self.setters == other.setters
        )

    __hash__ = None

    def to_document(self) -> dict:
        return {
            "setVoltages": dict(self.set_voltages),
            "sampleRate": self.sample_rate,
            "numPoints": self.num_points,
            "getters": list(self.getters),
            "setters": list(self.setters),
        }


@dataclass(frozen=True)
class Sweep1DRequest:
    """Step one target across an inclusive range, reading getters per step."""

    SCHEMA_ID = "Measure_Sweep1D"

    swept_target: str
    start: float
    stop: float
    num_steps: int
    getters: tuple[str, ...]
    settle_points: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "stop", float(self.stop))
        object.__setattr__(self, "getters", tuple(self.getters))
        if self.start == self.stop:
            raise InvariantViolation("start and stop must differ")
        if self.num_steps < 2:
            raise InvariantViolation("number of steps must be at least 2")
        if self.settle_points < 0:
            raise InvariantViolation("settle points must not be negative")

    def to_document(self) -> dict:
        return {
            "sweptTarget": self.swept_target,
            "start": self.start,
            "stop": self.stop,
            "numSteps": self.num_steps,
            "getters": list(self.getters),
            "settlePoints": self.settle_points,
        }


@dataclass(frozen=True)
class MeasurementResponse:
    """One acquired value from one target."""

    target: str
    value: float
    unit: SymbolUnit
    timestamp_ms: int

    def __post_init__(self) -> None:
        if not isinstance(self.target, str) or not self.target:
            raise InvariantViolation("response target must be a nonempty string")
        object.__setattr__(self, "value", float(self.value))
        if not math.isfinite(self.value):
            raise InvariantViolation("response value must be finite")
        if not isinstance(self.unit, SymbolUnit):
            raise InvariantViolation("response unit must be a SymbolUnit")
        if not isinstance(self.timestamp_ms, int) or isinstance(self.timestamp_ms, bool):
            raise InvariantViolation("response timestamp must be an integer")

    def to_jsonable(self) -> dict:
        return {
            "target": self.target,
            "value": self.value,
            "unit": self.unit.symbol,
            "timestamp_ms": self.timestamp_ms,
        }

    @classmethod
    def from_jsonable(cls, payload: object) -> "MeasurementResponse":
        if not isinstance(payload, dict):
            raise InvariantViolation("measurement response must be an object")
        try:
            target = payload["target"]
            value = payload["value"]
            unit = payload["unit"]
            timestamp_ms = payload["timestamp_ms"]
        except KeyError as exc:
            raise InvariantViolation(f"measurement response missing field {exc}")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise InvariantViolation("response value must be a number")
        if not isinstance(unit, str):
            raise InvariantViolation("response unit must be a string symbol")
        return cls(
            target=target,
            value=float(value),
            unit=SymbolUnit(unit),
            timestamp_ms=timestamp_ms,
        )


# ---------------------------------------------------------------------------
# Validation


def _is_number(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_integer(value: object) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_type(spec: PropertySpec, value: object) -> list[ValidationIssue]:
    name = spec.name
    issues: list[ValidationIssue] = []
    if spec.type == "number":
        if not _is_number(value):
            issues.append(ValidationIssue(name, f"property {name} must be a number"))
        elif not math.isfinite(value):
            issues.append(ValidationIssue(name, f"property {name} must be finite"))
    elif spec.type == "integer":
        if not _is_integer(value):
            issues.append(ValidationIssue(name, f"property {name} must be an integer"))
    elif spec.type == "string":
        if not isinstance(value, str):
            issues.append(ValidationIssue(name, f"property {name} must be a string"))
    elif spec.type == "boolean":
        if not isinstance(value, bool):
            issues.append(ValidationIssue(name, f"property {name} must be a boolean"))
    elif spec.type == "array":
        if not isinstance(value, list):
            issues.append(ValidationIssue(name, f"property {name} must be an array"))
        elif spec.element_type == "string":
            for i, element in enumerate(value):
                if not isinstance(element, str):
                    issues.append(
                        ValidationIssue(name, f"{name}[{i}] must be a string")
                    )
    elif spec.type == "object":
        if not isinstance(value, dict):
            issues.append(ValidationIssue(name, f"property {name} must be an object"))
        elif spec.value_type == "number":
            for key, element in value.items():
                if not _is_number(element) or not math.isfinite(element):
                    issues.append(
                        ValidationIssue(
                            name, f"{name} value for {key} must be a finite number"
                        )
                    )
    return issues


def _get_set_constraints(props: dict) -> list[ValidationIssue]:
    issues: list[ValidationIssue] = []
    if "sampleRate" in props and props["sampleRate"] <= 0:
        issues.append(ValidationIssue("sampleRate", "sampleRate must be positive"))
    if "numPoints" in props and props["numPoints"] < 1:
        issues.append(ValidationIssue("numPoints", "numPoints must be at least 1"))
    if "getters" in props and not props["getters"]:
        issues.append(ValidationIssue("getters", "getters must not be empty"))
    if "setVoltages" in props and "setters" in props:
        setters = set(props["setters"])
        for key in props["setVoltages"]:
            if key not in setters:
                issues.append(
                    ValidationIssue(
                        "setVoltages", f"setVoltages key {key} is not in setters"
                    )
                )
    return issues


def _sweep_constraints(props: dict) -> list[ValidationIssue]:
    issues: list[ValidationIssue] = []
    if "numSteps" in props and props["numSteps"] < 2:
        issues.append(ValidationIssue("numSteps", "numSteps must be at least 2"))
    if "settlePoints" in props and props["settlePoints"] < 0:
        issues.append(
            ValidationIssue("settlePoints", "settlePoints must not be negative")
        )
    if "start" in props and "stop" in props and props["start"] == props["stop"]:
        issues.append(ValidationIssue("start", "start and stop must differ"))
    return issues


def _build_get_set(props: dict) -> GetSetRequest:
    return GetSetRequest(
        set_voltages=props["setVoltages"],
        sample_rate=float(props["sampleRate"]),
        num_points=props["numPoints"],
        getters=tuple(props["getters"]),
        setters=tuple(props["setters"]),
    )


def _build_sweep(props: dict) -> Sweep1DRequest:
    return Sweep1DRequest(
        swept_target=props["sweptTarget"],
        start=float(props["start"]),
        stop=float(props["stop"]),
        num_steps=props["numSteps"],
        getters=tuple(props["getters"]),
        settle_points=props["settlePoints"],
    )


_CONSTRAINTS = {
    "Measure_Get_Set": _get_set_constraints,
    "Measure_Sweep1D": _sweep_constraints,
}

_BUILDERS = {
    "Measure_Get_Set": _build_get_set,
    "Measure_Sweep1D": _build_sweep,
}


def validate_request(schema_id: str, document: object) -> ValidationResult:
    """Validate a request document, collecting every violation.

    ``document`` may be a parsed JSON object or UTF-8 JSON text/bytes. Never
    raises: malformed input yields diagnostics, including an unknown schema
    id.
    """
    schema = get_schema(schema_id)
    if schema is None:
        return ValidationResult(
            None, (ValidationIssue("", f"unknown schema id {schema_id!r}"),)
        )

    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except (ValueError, UnicodeDecodeError) as exc:
            return ValidationResult(
                None,
                (ValidationIssue("", f"request document is not valid JSON: {exc}"),),
            )
    if not isinstance(document, dict):
        return ValidationResult(
            None, (ValidationIssue("", "request document must be a JSON object"),)
        )

    issues: list[ValidationIssue] = []
    props: dict = {}
    for spec in schema.properties:
        if spec.name not in document:
            if spec.required:
                issues.append(
                    ValidationIssue(
                        spec.name, f"required property {spec.name} missing"
                    )
                )
            elif spec.has_default:
                props[spec.name] = spec.default
            continue
        value = document[spec.name]
        type_issues = _check_type(spec, value)
        if type_issues:
            issues.extend(type_issues)
        else:
            props[spec.name] = value
    for name in document:
        if schema.property(name) is None:
            issues.append(ValidationIssue(name, f"unknown property {name}"))

    issues.extend(_CONSTRAINTS[schema_id](props))
    if issues:
        return ValidationResult(None, tuple(issues))
    return ValidationResult(_BUILDERS[schema_id](props), ())


def canonicalize(request: object) -> str:
    """Deterministic document text for a valid request.

    Defaults are materialized, keys are sorted, and separators are compact,
    so equal requests canonicalize byte-identically and
    ``validate_request(request.SCHEMA_ID, canonicalize(request))`` returns an
    equal request.
    """
    document = request.to_document()
    return json.dumps(
        document, sort_keys=True, separators=(",", ":"), allow_nan=False
    )
