"""Standard library implementations: io, log, config, deviceStates.

The tuning libraries (hub, stateStepper) are session-bound and registered
separately by the component that owns the bus connection.
"""

from __future__ import annotations

from falcon.core import DeviceStates
from falcon.dsl import ast
from falcon.runtime.config import RunConfig
from falcon.runtime.registry import HostMethod, HostRoutine, LibraryRegistry
from falcon.runtime.values import ArrayVal, NIL_VALUE, OpaqueVal, TextVal


def _lib(library: str, name: str) -> ast.LibType:
    return ast.LibType(library, name)


def _println(context, text):
    if not isinstance(text, TextVal):
        raise context.fault("io::println requires a string")
    context.println(text.value)


def _log_impl(level: str):
    def impl(context, text):
        if not isinstance(text, TextVal):
            raise context.fault(f"log::{level} requires a string")
        context.log(level, text.value)

    return impl


def _config_get_plunger_gates(context, base):
    config = base.payload
    elements = tuple(
        OpaqueVal("config", "Connection", conn) for conn in config.plunger_gates
    )
    return ArrayVal(elements, _lib("config", "Connection"))


def _connection_name(context, base):
    return TextVal(base.payload.name)


def _device_states_lookup(context, base, name):
    if not isinstance(name, TextVal):
        raise context.fault("Lookup requires a string")
    states: DeviceStates = base.payload
    state = states.lookup(name.value)
    if state is None:
        return NIL_VALUE
    return OpaqueVal("deviceStates", "DeviceState", state)


def config_value(config: RunConfig) -> OpaqueVal:
    """Wrap a run configuration for program use."""
    return OpaqueVal("config", "Config", config)


def device_states_value(states: DeviceStates) -> OpaqueVal:
    """Wrap core device states for program use."""
    return OpaqueVal("deviceStates", "DeviceStates", states)


def standard_registry() -> LibraryRegistry:
    """Registry with io/log routines and the config/deviceStates types."""
    registry = LibraryRegistry()
    registry.register_routine(
        "io", HostRoutine("println", (ast.StringType(),), (), _println)
    )
    registry.register_routine(
        "log", HostRoutine("info", (ast.StringType(),), (), _log_impl("info"))
    )
    registry.register_routine(
        "log", HostRoutine("warn", (ast.StringType(),), (), _log_impl("warn"))
    )
    registry.register_method(
        "config",
        "Config",
        HostMethod(
            "GetPlungerGates",
            (),
            ast.GenericType(_lib("array", "Array"), _lib("config", "Connection")),
            _config_get_plunger_gates,
        ),
    )
    registry.register_method(
        "config",
        "Connection",
        HostMethod("Name", (), ast.StringType(), _connection_name),
    )
    registry.register_method(
        "deviceStates",
        "DeviceStates",
        HostMethod(
            "Lookup",
            (ast.StringType(),),
            _lib("deviceStates", "DeviceState"),
            _device_states_lookup,
        ),
    )
    registry.register_type("deviceStates", "DeviceState")
    return registry
