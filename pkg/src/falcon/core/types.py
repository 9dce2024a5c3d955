"""Canonical domain types shared by every layer of the stack.

All values here are immutable and safe to share across threads. Constructors
validate their invariants eagerly and raise :class:`InvariantViolation` on
bad input, so a value that exists is always well formed.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from enum import Enum


class InvariantViolation(ValueError):
    """A value would violate one of the domain invariants."""


class DeviceFeature(Enum):
    """Functional role of a physical device contact.

    The set is closed: there is no escape hatch for unknown features.
    """

    BARRIER_GATE = "BarrierGate"
    PLUNGER_GATE = "PlungerGate"
    SCREENING_GATE = "ScreeningGate"
    RESERVOIR_GATE = "ReservoirGate"
    SENSOR_GATE = "SensorGate"
    OHMIC = "Ohmic"

    @classmethod
    def parse(cls, text: str) -> "DeviceFeature":
        for member in cls:
            if member.value == text:
                return member
        raise InvariantViolation(f"unknown device feature: {text!r}")

    @property
    def is_gate(self) -> bool:
        return self.value.endswith("Gate")


#: Unit symbols accepted anywhere in the stack.
UNIT_WHITELIST = ("V", "mV", "A", "nA", "Hz", "s", "dimensionless")

_VOLTAGE_SYMBOLS = frozenset({"V", "mV"})


@dataclass(frozen=True)
class SymbolUnit:
    """A physical unit restricted to the whitelisted symbol set."""

    symbol: str

    def __post_init__(self) -> None:
        if self.symbol not in UNIT_WHITELIST:
            raise InvariantViolation(f"unit symbol not in whitelist: {self.symbol!r}")

    @property
    def is_voltage(self) -> bool:
        return self.symbol in _VOLTAGE_SYMBOLS


def _float_bits(value: float) -> bytes:
    return struct.pack("<d", value)


@dataclass(frozen=True, eq=False)
class Quantity:
    """A finite scalar with a unit.

    Equality is exact and bitwise on the value (0.0 and -0.0 differ), plus
    unit equality; there is no tolerance anywhere in this type.
    """

    value: float
    unit: SymbolUnit

    def __post_init__(self) -> None:
        if not isinstance(self.value, (int, float)) or isinstance(self.value, bool):
            raise InvariantViolation(f"quantity value must be a number: {self.value!r}")
        object.__setattr__(self, "value", float(self.value))
        if not math.isfinite(self.value):
            raise InvariantViolation(f"quantity value must be finite: {self.value!r}")
        if not isinstance(self.unit, SymbolUnit):
            raise InvariantViolation("quantity unit must be a SymbolUnit")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Quantity):
            return NotImplemented
        return self.unit == other.unit and _float_bits(self.value) == _float_bits(other.value)

    def __hash__(self) -> int:
        return hash((_float_bits(self.value), self.unit))


@dataclass(frozen=True)
class Connection:
    """A named device contact with its functional feature."""

    name: str
    feature: DeviceFeature

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not self.name:
            raise InvariantViolation("connection name must be a nonempty string")
        if not isinstance(self.feature, DeviceFeature):
            raise InvariantViolation("connection feature must be a DeviceFeature")

    @classmethod
    def barrier_gate(cls, name: str) -> "Connection":
        return cls(name, DeviceFeature.BARRIER_GATE)

    @classmethod
    def plunger_gate(cls, name: str) -> "Connection":
        return cls(name, DeviceFeature.PLUNGER_GATE)

    @classmethod
    def screening_gate(cls, name: str) -> "Connection":
        return cls(name, DeviceFeature.SCREENING_GATE)

    @classmethod
    def reservoir_gate(cls, name: str) -> "Connection":
        return cls(name, DeviceFeature.RESERVOIR_GATE)

    @classmethod
    def sensor_gate(cls, name: str) -> "Connection":
        return cls(name, DeviceFeature.SENSOR_GATE)

    @classmethod
    def ohmic(cls, name: str) -> "Connection":
        return cls(name, DeviceFeature.OHMIC)

    @property
    def is_barrier_gate(self) -> bool:
        return self.feature is DeviceFeature.BARRIER_GATE

    @property
    def is_plunger_gate(self) -> bool:
        return self.feature is DeviceFeature.PLUNGER_GATE

    @property
    def is_screening_gate(self) -> bool:
        return self.feature is DeviceFeature.SCREENING_GATE

    @property
    def is_reservoir_gate(self) -> bool:
        return self.feature is DeviceFeature.RESERVOIR_GATE

    @property
    def is_sensor_gate(self) -> bool:
        return self.feature is DeviceFeature.SENSOR_GATE

    @property
    def is_ohmic(self) -> bool:
        return self.feature is DeviceFeature.OHMIC


@dataclass(frozen=True)
class DeviceState:
    """One connection paired with its present setpoint.

    Gate-type connections carry voltage units only.
    """

    connection: Connection
    quantity: Quantity

    def __post_init__(self) -> None:
        if not isinstance(self.connection, Connection):
            raise InvariantViolation("device state requires a Connection")
        if not isinstance(self.quantity, Quantity):
            raise InvariantViolation("device state requires a Quantity")
        if self.connection.feature.is_gate and not self.quantity.unit.is_voltage:
            raise InvariantViolation(
                f"gate connection {self.connection.name!r} requires a voltage unit, "
                f"got {self.quantity.unit.symbol!r}"
            )


@dataclass(frozen=True)
class DeviceStates:
    """An ordered snapshot of device states with unique connection names."""

    states: tuple[DeviceState, ...]

    def __init__(self, states) -> None:
        states = tuple(states)
        seen: set[str] = set()
        for state in states:
            if not isinstance(state, DeviceState):
                raise InvariantViolation("DeviceStates elements must be DeviceState values")
            if state.connection.name in seen:
                raise InvariantViolation(
                    f"duplicate connection name in device states: {state.connection.name!r}"
                )
            seen.add(state.connection.name)
        object.__setattr__(self, "states", states)

    def lookup(self, name: str) -> DeviceState | None:
        """Return the state for connection `name`, or None if absent."""
        for state in self.states:
            if state.connection.name == name:
                return state
        return None

    def __iter__(self):
        return iter(self.states)

    def __len__(self) -> int:
        return len(self.states)
