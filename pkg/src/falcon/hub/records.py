"""Registry and job bookkeeping records for the instrument hub."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Mapping, Optional

from falcon.core.types import UNIT_WHITELIST


@dataclass(frozen=True)
class InstrumentParameter:
    """One addressable channel of an instrument."""

    name: str
    unit: str
    settable: bool
    gettable: bool

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "unit": self.unit,
            "settable": self.settable,
            "gettable": self.gettable,
        }


@dataclass(frozen=True)
class InstrumentRecord:
    """Registration metadata for one instrument.

    The hub keys its registry on ``id``; re-registering the same id replaces
    the record so a restarted server converges on the fresh description.
    """

    id: str
    name: str
    kind: str
    parameters: tuple[InstrumentParameter, ...]
    registered_at: int

    def parameter(self, name: str) -> Optional[InstrumentParameter]:
        for parameter in self.parameters:
            if parameter.name == name:
                return parameter
        return None

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "kind": self.kind,
            "parameters": [parameter.to_jsonable() for parameter in self.parameters],
            "registered_at": self.registered_at,
        }


def parse_instrument_document(
    document: object, registered_at: int
) -> tuple[Optional[InstrumentRecord], tuple[str, ...]]:
    """Validate a registration document, returning (record, diagnostics).

    The record is None exactly when diagnostics are nonempty; all problems are
    reported in one pass.
    """
    diagnostics: list[str] = []
    if not isinstance(document, Mapping):
        return None, ("registration must be a JSON object",)

    def text_field(key: str) -> str:
        value = document.get(key)
        if not isinstance(value, str) or not value:
            diagnostics.append(f"field {key!r} must be a nonempty string")
            return ""
        return value

    instrument_id = text_field("id")
    name = text_field("name")
    kind = text_field("kind")

    parameters: list[InstrumentParameter] = []
    raw_parameters = document.get("parameters")
    if not isinstance(raw_parameters, (list, tuple)):
        diagnostics.append("field 'parameters' must be an array")
        raw_parameters = []
    seen_names: set[str] = set()
    for index, raw in enumerate(raw_parameters):
        where = f"parameters[{index}]"
        if not isinstance(raw, Mapping):
            diagnostics.append(f"{where} must be an object")
            continue
        parameter_name = raw.get("name")
        if not isinstance(parameter_name, str) or not parameter_name:
            diagnostics.append(f"{where}.name must be a nonempty string")
            continue
        if parameter_name in seen_names:
            diagnostics.append(f"duplicate parameter name {parameter_name!r}")
            continue
        seen_names.add(parameter_name)
        unit = raw.get("unit")
        if not isinstance(unit, str) or unit not in UNIT_WHITELIST:
            diagnostics.append(
                f"{where}.unit {unit!r} is not one of {', '.join(UNIT_WHITELIST)}"
            )
            continue
        settable = raw.get("settable", False)
        gettable = raw.get("gettable", False)
        if not isinstance(settable, bool) or not isinstance(gettable, bool):
            diagnostics.append(f"{where} settable/gettable must be booleans")
            continue
        parameters.append(
            InstrumentParameter(
                name=parameter_name, unit=unit, settable=settable, gettable=gettable
            )
        )

    if diagnostics:
        return None, tuple(diagnostics)
    return (
        InstrumentRecord(
            id=instrument_id,
            name=name,
            kind=kind,
            parameters=tuple(parameters),
            registered_at=registered_at,
        ),
        (),
    )


class JobStatus(Enum):
    """Lifecycle of a measurement job; transitions only move forward."""

    PENDING = "Pending"
    RUNNING = "Running"
    FINISHED = "Finished"
    FAILED = "Failed"


_ALLOWED_TRANSITIONS = {
    JobStatus.PENDING: {JobStatus.RUNNING, JobStatus.FAILED},
    JobStatus.RUNNING: {JobStatus.FINISHED, JobStatus.FAILED},
    JobStatus.FINISHED: set(),
    JobStatus.FAILED: set(),
}


def transition_allowed(current: JobStatus, target: JobStatus) -> bool:
    return target in _ALLOWED_TRANSITIONS[current]


@dataclass(frozen=True)
class JobRecord:
    """Tracking record for one submitted measurement job."""

    job_id: str
    schema_id: str
    request: Mapping[str, Any]
    status: JobStatus = JobStatus.PENDING
    created_at: int = 0
    updated_at: int = 0
    result_count: int = 0
    reason: Optional[str] = field(default=None)

    def advanced(
        self, status: JobStatus, at: int, reason: Optional[str] = None
    ) -> "JobRecord":
        if not transition_allowed(self.status, status):
            raise ValueError(
                f"job {self.job_id} cannot move {self.status.value} -> {status.value}"
            )
        return replace(self, status=status, updated_at=at, reason=reason)

    def to_jsonable(self) -> dict[str, Any]:
        document: dict[str, Any] = {
            "job_id": self.job_id,
            "schema_id": self.schema_id,
            "request": dict(self.request),
            "status": self.status.value,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "result_count": self.result_count,
        }
        if self.reason is not None:
            document["reason"] = self.reason
        return document
