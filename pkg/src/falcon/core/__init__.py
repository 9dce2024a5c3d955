from falcon.core.types import (
    Connection,
    DeviceFeature,
    DeviceState,
    DeviceStates,
    InvariantViolation,
    Quantity,
    SymbolUnit,
)
from falcon.core.serialize import (
    MalformedPayload,
    SerializationError,
    SerializedSong,
    UnknownTypeTag,
    deserialize,
    from_json_string,
    serialize,
    to_json_string,
)

__all__ = [
    "Connection",
    "DeviceFeature",
    "DeviceState",
    "DeviceStates",
    "InvariantViolation",
    "MalformedPayload",
    "Quantity",
    "SerializationError",
    "SerializedSong",
    "SymbolUnit",
    "UnknownTypeTag",
    "deserialize",
    "from_json_string",
    "serialize",
    "to_json_string",
]
