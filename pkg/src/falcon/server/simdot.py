"""Simulated double quantum dot.

A constant-interaction toy model: each dot's occupancy is a threshold function
of its effective gate voltage, and the sensor current is a baseline plus a
comb of Gaussian peaks centered on the charge transition lines. Occupancy and
current are pure functions of the setpoints, which is what makes the device
usable as an oracle.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Mapping, Optional

from falcon.core.types import InvariantViolation


@dataclass(frozen=True)
class SimDoubleDotParams:
    """Model parameters; defaults describe the reference device."""

    v_off: float = 0.100
    v_period: float = 0.050
    cross_coupling: float = 0.0
    peak_width: float = 0.002
    baseline: float = 0.100
    amplitude: float = 1.000
    noise_sigma: float = 0.0
    initial_p1: float = 0.075
    initial_p2: float = 0.075

    def __post_init__(self) -> None:
        if not self.v_period > 0:
            raise InvariantViolation("v_period must be positive")
        if not self.peak_width > 0:
            raise InvariantViolation("peak_width must be positive")
        if not self.peak_width < self.v_period / 4:
            raise InvariantViolation("peak_width must be below v_period/4")
        if not 0 <= self.cross_coupling < 0.5:
            raise InvariantViolation("cross_coupling must lie in [0, 0.5)")
        if self.noise_sigma < 0:
            raise InvariantViolation("noise_sigma cannot be negative")

    @classmethod
    def from_jsonable(cls, document: Optional[Mapping[str, object]]) -> "SimDoubleDotParams":
        if document is None:
            return cls()
        if not isinstance(document, Mapping):
            raise InvariantViolation("sim parameters must be a JSON object")
        known = {
            "v_off",
            "v_period",
            "cross_coupling",
            "peak_width",
            "baseline",
            "amplitude",
            "noise_sigma",
            "initial_p1",
            "initial_p2",
        }
        unknown = sorted(set(document) - known)
        if unknown:
            raise InvariantViolation(
                "unknown sim parameter(s): " + ", ".join(unknown)
            )
        values = {}
        for key in known & set(document):
            raw = document[key]
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise InvariantViolation(f"sim parameter {key!r} must be a number")
            values[key] = float(raw)
        return cls(**values)


@dataclass(frozen=True)
class SimDeviceState:
    """Plunger setpoints of the simulated device."""

    v_p1: float
    v_p2: float

    def effective_coordinates(self, params: SimDoubleDotParams) -> tuple[float, float]:
        """Cross-coupled voltages actually felt by each dot."""
        u1 = self.v_p1 + params.cross_coupling * self.v_p2
        u2 = self.v_p2 + params.cross_coupling * self.v_p1
        return u1, u2


def _axis_occupancy(u: float, params: SimDoubleDotParams) -> int:
    if u <= params.v_off:
        return 0
    return math.floor((u - params.v_off) / params.v_period) + 1


def sim_occupancy(
    state: SimDeviceState, params: SimDoubleDotParams
) -> tuple[int, int]:
    """Electron count on each dot.

    An effective voltage exactly at the first transition line counts as not
    yet crossed.
    """
    u1, u2 = state.effective_coordinates(params)
    return _axis_occupancy(u1, params), _axis_occupancy(u2, params)


def sim_current(state: SimDeviceState, params: SimDoubleDotParams) -> float:
    """Sensor current: baseline plus Gaussian peaks on every transition line.

    The comb covers one full period beyond the largest effective voltage, so
    truncation error is bounded by far Gaussian tails.
    """
    u1, u2 = state.effective_coordinates(params)
    top = max(u1, u2) + params.v_period
    count = max(1, math.ceil((top - params.v_off) / params.v_period))
    total = 0.0
    for u in (u1, u2):
        for k in range(count + 1):
            line = params.v_off + k * params.v_period
            distance = (u - line) / params.peak_width
            total += math.exp(-distance * distance)
    return params.baseline + params.amplitude * total


class DriverError(RuntimeError):
    """An instrument driver rejected an operation."""


@dataclass(frozen=True)
class ParameterSpec:
    """Driver-declared channel metadata used for registration and snapshots."""

    name: str
    unit: str
    settable: bool
    gettable: bool
    feature: Optional[str] = None

    def to_registration(self) -> dict[str, object]:
        return {
            "name": self.name,
            "unit": self.unit,
            "settable": self.settable,
            "gettable": self.gettable,
        }


class SimDoubleDotHandle:
    """Mutable driver-side state for one simulated device instance."""

    def __init__(self, params: SimDoubleDotParams) -> None:
        self.params = params
        self.setpoints = {"P1": params.initial_p1, "P2": params.initial_p2}
        self.torn_down = False
        self.rng = random.Random(0xD07) if params.noise_sigma > 0 else None

    def state(self) -> SimDeviceState:
        return SimDeviceState(v_p1=self.setpoints["P1"], v_p2=self.setpoints["P2"])


_SIM_PARAMETERS = (
    ParameterSpec("P1", "V", settable=True, gettable=True, feature="PlungerGate"),
    ParameterSpec("P2", "V", settable=True, gettable=True, feature="PlungerGate"),
    ParameterSpec("SENSOR", "nA", settable=False, gettable=True),
)


class SimDoubleDotDriver:
    """Reference driver exposing the simulated device as an instrument."""

    kind = "sim-device"

    def init(self, config: Optional[Mapping[str, object]]) -> SimDoubleDotHandle:
        return SimDoubleDotHandle(SimDoubleDotParams.from_jsonable(config))

    def parameters(self, handle: SimDoubleDotHandle) -> tuple[ParameterSpec, ...]:
        return _SIM_PARAMETERS

    def set_param(
        self, handle: SimDoubleDotHandle, name: str, value: float, unit: str
    ) -> None:
        self._check_live(handle)
        spec = self._spec(name)
        if not spec.settable:
            raise DriverError(f"parameter {name!r} is not settable")
        if unit != spec.unit:
            raise DriverError(
                f"unit mismatch: parameter {name!r} takes {spec.unit}, got {unit}"
            )
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DriverError(f"parameter {name!r} needs a numeric value")
        if not math.isfinite(value):
            raise DriverError(f"parameter {name!r} needs a finite value")
        handle.setpoints[name] = float(value)

    def get_param(
        self, handle: SimDoubleDotHandle, name: str
    ) -> tuple[float, str]:
        self._check_live(handle)
        spec = self._spec(name)
        if not spec.gettable:
            raise DriverError(f"parameter {name!r} is not gettable")
        if name == "SENSOR":
            value = sim_current(handle.state(), handle.params)
            if handle.rng is not None:
                value += handle.rng.gauss(0.0, handle.params.noise_sigma)
            return value, spec.unit
        return handle.setpoints[name], spec.unit

    def teardown(self, handle: SimDoubleDotHandle) -> None:
        handle.torn_down = True

    def _spec(self, name: str) -> ParameterSpec:
        for spec in _SIM_PARAMETERS:
            if spec.name == name:
                return spec
        raise DriverError(f"unknown parameter {name!r}")

    def _check_live(self, handle: SimDoubleDotHandle) -> None:
        if handle.torn_down:
            raise DriverError("device is torn down")
