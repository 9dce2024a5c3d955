"""Session-bound tuning libraries: hub access and the charge-state stepper.

Unlike the standard library, these routines need a live hub connection, so
the component that owns the bus session registers them on top of the
standard registry. ``hub::CollectCurrentDeviceState`` snapshots present
setpoints; ``stateStepper::BlipStateStepper`` is a host-implemented library
autotuner that advances one dot by exactly one charge state.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping

from falcon.bus import BusError
from falcon.core import InvariantViolation
from falcon.dsl import ast
from falcon.hub import HubClient, HubError
from falcon.runtime.config import RunConfig
from falcon.runtime.engine import ChildTrace, TransitionRecord
from falcon.runtime.registry import HostRoutine, LibraryRegistry
from falcon.runtime.stdlib import device_states_value, standard_registry
from falcon.runtime.values import TextVal


def _require_positive(value: object, what: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
        raise InvariantViolation(f"{what} must be a positive number")
    return float(value)


@dataclass(frozen=True)
class StepperSettings:
    """How the stepper sweeps: direction-to-gate mapping, step size, the
    sensor to watch, and the blip threshold and cell period.

    ``from_config`` reads the ``stepper`` section of a run configuration and
    derives the threshold and period from the ``sim`` section when they are
    not given explicitly: threshold sits halfway up a sensor peak, and the
    period is the simulated device's charge-cell width.
    """

    directions: Mapping[str, str] = field(
        default_factory=lambda: {"up": "P2", "right": "P1"}
    )
    step: float = 0.0005
    sensor: str = "SENSOR"
    sample_rate: float = 1000.0
    num_points: int = 1
    threshold: float = 0.6
    period: float = 0.05
    ceiling_periods: float = 2.0

    def __post_init__(self) -> None:
        if not self.directions:
            raise InvariantViolation("stepper directions must not be empty")
        for direction, gate in self.directions.items():
            if not isinstance(direction, str) or not direction:
                raise InvariantViolation("stepper directions must be named by strings")
            if not isinstance(gate, str) or not gate:
                raise InvariantViolation(
                    f"stepper direction {direction!r} must map to a gate name"
                )
        _require_positive(self.step, "stepper step")
        _require_positive(self.period, "stepper period")
        _require_positive(self.sample_rate, "stepper sample rate")
        _require_positive(self.ceiling_periods, "stepper ceiling")
        if self.num_points < 1:
            raise InvariantViolation("stepper num_points must be at least 1")

    @classmethod
    def from_config(cls, config: RunConfig) -> "StepperSettings":
        stepper = config.section("stepper")
        sim = config.section("sim")
        defaults = cls()
        directions = stepper.get("directions", dict(defaults.directions))
        if not isinstance(directions, dict):
            raise InvariantViolation("stepper directions must be an object")
        if config.plunger_gates:
            plungers = {gate.name for gate in config.plunger_gates}
            for direction, gate in directions.items():
                if gate not in plungers:
                    raise InvariantViolation(
                        f"stepper direction {direction!r} sweeps {gate!r},"
                        " which is not a configured plunger gate"
                    )
        threshold = stepper.get("threshold")
        if threshold is None:
            baseline = sim.get("I0", 0.1)
            amplitude = sim.get("A", 1.0)
            threshold = baseline + amplitude / 2
        period = stepper.get("period")
        if period is None:
            period = sim.get("V_period", defaults.period)
        return cls(
            directions=dict(directions),
            step=stepper.get("step", defaults.step),
            sensor=stepper.get("sensor", defaults.sensor),
            sample_rate=stepper.get("sample_rate", defaults.sample_rate),
            num_points=int(stepper.get("num_points", defaults.num_points)),
            threshold=float(threshold),
            period=float(period),
            ceiling_periods=stepper.get("ceiling_periods", defaults.ceiling_periods),
        )


def _now_ms() -> int:
    return time.time_ns() // 1_000_000


def _collect_states(context, hub_client: HubClient):
    try:
        return hub_client.collect_device_state()
    except (BusError, HubError, TimeoutError) as exc:
        raise context.fault(f"device state request failed: {exc}")


def _measure_once(
    context, hub_client: HubClient, settings: StepperSettings, gate: str, voltage: float
) -> float:
    """Set the gate, read the sensor once, and return the sensor value."""
    document = {
        "setVoltages": {gate: voltage},
        "sampleRate": settings.sample_rate,
        "numPoints": settings.num_points,
        "getters": [settings.sensor],
        "setters": [gate],
    }
    try:
        outcome = hub_client.run_job("Measure_Get_Set", document)
    except (BusError, HubError, TimeoutError) as exc:
        raise context.fault(f"measurement request failed: {exc}")
    if not outcome.finished:
        raise context.fault(f"measurement failed: {outcome.reason}")
    return outcome.responses[0].value


def _stepper_impl(hub_client: HubClient, settings: StepperSettings):
    def impl(context, direction_value):
        if not isinstance(direction_value, TextVal):
            raise context.fault("BlipStateStepper requires a string direction")
        direction = direction_value.value
        gate = settings.directions.get(direction)
        if gate is None:
            known = ", ".join(sorted(settings.directions))
            raise context.fault(
                f"invalid direction {direction!r}: expected one of {known}"
            )

        states = _collect_states(context, hub_client)
        state = states.lookup(gate)
        if state is None:
            raise context.fault(f"device state has no entry for gate {gate!r}")
        start = state.quantity.value
        entered = TransitionRecord("start", "sweep", _now_ms(), (direction, gate))

        # Walk upward until the first contiguous run of samples above the
        # threshold has been seen in full; the blip center is the argmax of
        # that run, ties resolved toward lower voltage by the scan order.
        ceiling = start + settings.ceiling_periods * settings.period
        in_run = False
        best_voltage = 0.0
        best_current = float("-inf")
        index = 0
        while True:
            voltage = start + index * settings.step
            if voltage > ceiling:
                raise context.fault(
                    f"no blip detected on gate {gate!r} between"
                    f" {start:.6g} V and {ceiling:.6g} V"
                )
            current = _measure_once(context, hub_client, settings, gate, voltage)
            if current > settings.threshold:
                if not in_run or current > best_current:
                    best_voltage = voltage
                    best_current = current
                in_run = True
            elif in_run:
                break
            index += 1

        target = best_voltage + settings.period / 2
        _measure_once(context, hub_client, settings, gate, target)
        placed = TransitionRecord("sweep", "place", _now_ms(), (best_voltage,))
        done = TransitionRecord("place", "exit", _now_ms(), (target,))
        context.emit_child_trace(
            ChildTrace("BlipStateStepper", (entered, placed, done), {})
        )
        context.log(
            "info",
            f"BlipStateStepper {direction}: {gate} {start:.6g} V to {target:.6g} V",
        )
        return None

    return impl


def _collect_impl(hub_client: HubClient):
    def impl(context):
        return device_states_value(_collect_states(context, hub_client))

    return impl


def register_tuning_libraries(
    registry: LibraryRegistry, hub_client: HubClient, settings: StepperSettings
) -> LibraryRegistry:
    """Add hub and stateStepper routines bound to a live hub client."""
    registry.register_routine(
        "hub",
        HostRoutine(
            name="CollectCurrentDeviceState",
            params=(),
            returns=(ast.LibType("deviceStates", "DeviceStates"),),
            impl=_collect_impl(hub_client),
        ),
    )
    registry.register_routine(
        "stateStepper",
        HostRoutine(
            name="BlipStateStepper",
            params=(ast.StringType(),),
            returns=(),
            impl=_stepper_impl(hub_client, settings),
            kind="autotuner",
        ),
    )
    return registry


def tuning_registry(hub_client: HubClient, settings: StepperSettings) -> LibraryRegistry:
    """The standard registry plus the session-bound tuning libraries."""
    return register_tuning_libraries(standard_registry(), hub_client, settings)
