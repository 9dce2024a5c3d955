"""Run configuration: device connections, plunger gates, and passthrough
sections for the simulated device, the stepper, and instrument definitions."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from falcon.core import Connection, DeviceFeature, InvariantViolation


@dataclass(frozen=True)
class RunConfig:
    """Parsed run configuration.

    ``device_connections`` lists every named device terminal with its
    feature; ``plunger_gates`` is the subset used for dot accumulation.
    Everything else in the source document (sim parameters, stepper
    settings, instrument definitions) is carried in ``raw`` for the
    components that consume it.
    """

    device_connections: tuple[Connection, ...]
    plunger_gates: tuple[Connection, ...]
    raw: dict

    def __post_init__(self) -> None:
        names = {c.name for c in self.device_connections}
        if len(names) != len(self.device_connections):
            raise InvariantViolation("device connection names must be unique")
        for gate in self.plunger_gates:
            if gate.name not in names:
                raise InvariantViolation(
                    f"plunger gate {gate.name!r} is not a device connection"
                )

    def connection(self, name: str) -> Optional[Connection]:
        for conn in self.device_connections:
            if conn.name == name:
                return conn
        return None

    def section(self, name: str) -> dict:
        value = self.raw.get(name, {})
        if not isinstance(value, dict):
            raise InvariantViolation(f"configuration section {name!r} must be an object")
        return value

    @classmethod
    def from_dict(cls, document: dict) -> "RunConfig":
        if not isinstance(document, dict):
            raise InvariantViolation("run configuration must be a JSON object")
        connections = []
        for entry in document.get("device_connections", []):
            if not isinstance(entry, dict) or "name" not in entry or "feature" not in entry:
                raise InvariantViolation(
                    "device_connections entries must be objects with name and feature"
                )
            connections.append(
                Connection(entry["name"], DeviceFeature.parse(entry["feature"]))
            )
        by_name = {c.name: c for c in connections}
        plungers = []
        for name in document.get("plunger_gates", []):
            if name not in by_name:
                raise InvariantViolation(
                    f"plunger gate {name!r} is not a device connection"
                )
            plungers.append(by_name[name])
        return cls(tuple(connections), tuple(plungers), document)

    @classmethod
    def from_json_text(cls, text: str) -> "RunConfig":
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvariantViolation(f"run configuration is not valid JSON: {exc}")
        return cls.from_dict(document)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_json_text(handle.read())


def default_config() -> RunConfig:
    """The packaged default configuration."""
    from falcon.programs import default_config_text

    return RunConfig.from_json_text(default_config_text())
