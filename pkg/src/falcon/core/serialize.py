"""Byte-deterministic JSON serialization for the core types.

Every serialized document is a single UTF-8 JSON object whose field names are
emitted in lexicographic order with compact separators, so equal values always
produce identical bytes. The concrete type travels in a top-level ``type``
field; the remaining top-level fields are the type's payload.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Callable

from falcon.core.types import (
    Connection,
    DeviceFeature,
    DeviceState,
    DeviceStates,
    InvariantViolation,
    Quantity,
    SymbolUnit,
)


class SerializationError(Exception):
    """Base class for serialization failures."""


class UnknownTypeTag(SerializationError):
    """The document names a type this registry does not know."""


class MalformedPayload(SerializationError):
    """The document is not valid JSON or does not have the expected shape."""


@dataclass(frozen=True)
class SerializedSong:
    """A type tag plus the canonical JSON document for one value."""

    type_tag: str
    payload: str


def _canonical(document: dict[str, Any]) -> str:
    return json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _require(payload: dict[str, Any], field: str) -> Any:
    if field not in payload:
        raise MalformedPayload(f"payload is missing field {field!r}")
    return payload[field]


def _require_str(payload: dict[str, Any], field: str) -> str:
    value = _require(payload, field)
    if not isinstance(value, str):
        raise MalformedPayload(f"field {field!r} must be a string, got {type(value).__name__}")
    return value


def _encode_feature(value: DeviceFeature) -> dict[str, Any]:
    return {"feature": value.value}


def _decode_feature(payload: dict[str, Any]) -> DeviceFeature:
    return DeviceFeature.parse(_require_str(payload, "feature"))


def _encode_unit(value: SymbolUnit) -> dict[str, Any]:
    return {"symbol": value.symbol}


def _decode_unit(payload: dict[str, Any]) -> SymbolUnit:
    return SymbolUnit(_require_str(payload, "symbol"))


def _encode_connection(value: Connection) -> dict[str, Any]:
    return {"name": value.name, "feature": value.feature.value}


def _decode_connection(payload: dict[str, Any]) -> Connection:
    return Connection(
        name=_require_str(payload, "name"),
        feature=DeviceFeature.parse(_require_str(payload, "feature")),
    )


def _encode_quantity(value: Quantity) -> dict[str, Any]:
    return {"value": value.value, "unit": value.unit.symbol}


def _decode_quantity(payload: dict[str, Any]) -> Quantity:
    raw = _require(payload, "value")
    if not isinstance(raw, (int, float)) or isinstance(raw, bool):
        raise MalformedPayload("field 'value' must be a number")
    return Quantity(value=float(raw), unit=SymbolUnit(_require_str(payload, "unit")))


def _encode_device_state(value: DeviceState) -> dict[str, Any]:
    return {
        "connection": _encode_connection(value.connection),
        "quantity": _encode_quantity(value.quantity),
    }


def _decode_device_state(payload: dict[str, Any]) -> DeviceState:
    connection = _require(payload, "connection")
    quantity = _require(payload, "quantity")
    if not isinstance(connection, dict) or not isinstance(quantity, dict):
        raise MalformedPayload("fields 'connection' and 'quantity' must be objects")
    return DeviceState(
        connection=_decode_connection(connection),
        quantity=_decode_quantity(quantity),
    )


def _encode_device_states(value: DeviceStates) -> dict[str, Any]:
    return {"states": [_encode_device_state(state) for state in value.states]}


def _decode_device_states(payload: dict[str, Any]) -> DeviceStates:
    states = _require(payload, "states")
    if not isinstance(states, list):
        raise MalformedPayload("field 'states' must be an array")
    decoded = []
    for item in states:
        if not isinstance(item, dict):
            raise MalformedPayload("elements of 'states' must be objects")
        decoded.append(_decode_device_state(item))
    return DeviceStates(decoded)


_REGISTRY: dict[str, tuple[type, Callable[[Any], dict], Callable[[dict], Any]]] = {
    "DeviceFeature": (DeviceFeature, _encode_feature, _decode_feature),
    "SymbolUnit": (SymbolUnit, _encode_unit, _decode_unit),
    "Connection": (Connection, _encode_connection, _decode_connection),
    "Quantity": (Quantity, _encode_quantity, _decode_quantity),
    "DeviceState": (DeviceState, _encode_device_state, _decode_device_state),
    "DeviceStates": (DeviceStates, _encode_device_states, _decode_device_states),
}

_TAG_BY_TYPE = {cls: tag for tag, (cls, _enc, _dec) in _REGISTRY.items()}


def serialize(value: Any) -> SerializedSong:
    """Serialize a core value into its tagged canonical document."""
    tag = _TAG_BY_TYPE.get(type(value))
    if tag is None:
        raise UnknownTypeTag(f"no serializer registered for {type(value).__name__}")
    _cls, encode, _decode = _REGISTRY[tag]
    document = encode(value)
    document["type"] = tag
    return SerializedSong(type_tag=tag, payload=_canonical(document))


def to_json_string(value: Any) -> str:
    """Serialize a core value directly to its canonical JSON text."""
    return serialize(value).payload


def deserialize(song: SerializedSong) -> Any:
    """Reconstruct the value a SerializedSong denotes."""
    return from_json_string(song.payload)


def from_json_string(text: str | bytes) -> Any:
    """Parse a canonical document back into its core value.

    Raises UnknownTypeTag for an unregistered type tag, MalformedPayload for
    invalid JSON or a wrongly shaped document, and InvariantViolation when the
    payload parses but describes an invalid value.
    """
    try:
        document = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedPayload(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise MalformedPayload("document must be a JSON object")
    if "type" not in document:
        raise MalformedPayload("document is missing the top-level 'type' field")
    tag = document["type"]
    if not isinstance(tag, str):
        raise MalformedPayload("'type' field must be a string")
    entry = _REGISTRY.get(tag)
    if entry is None:
        raise UnknownTypeTag(f"unknown type tag: {tag!r}")
    _cls, _encode, decode = entry
    payload = {key: val for key, val in document.items() if key != "type"}
    try:
        return decode(payload)
    except InvariantViolation:
        raise
    except MalformedPayload:
        raise
    except (TypeError, KeyError) as exc:
        raise MalformedPayload(f"malformed {tag} payload: {exc}") from exc
