"""Static signatures of the importable libraries.

The checker validates programs against this surface; the runtime registry
supplies implementations that match it. ``ANY`` marks a parameter that accepts
every value type (equality-based membership checks need it).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from falcon.dsl import ast


class _AnyType:
    """Sentinel type that matches any argument type."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return "ANY"


ANY = _AnyType()


@dataclass(frozen=True)
class RoutineSig:
    """Signature of a free library routine (or library autotuner)."""

    params: tuple
    returns: tuple
    kind: str = "routine"  # "routine" | "autotuner"


@dataclass(frozen=True)
class MethodSig:
    """Signature of a method on an opaque library type."""

    params: tuple
    ret: object | None  # TypeExpr, or None for no return value


@dataclass
class LibrarySurface:
    """Everything the checker needs to know about importable libraries."""

    libraries: set[str] = field(default_factory=set)
    routines: dict[tuple[str, str], RoutineSig] = field(default_factory=dict)
    types: dict[tuple[str, str], dict[str, MethodSig]] = field(default_factory=dict)

    def copy(self) -> "LibrarySurface":
        return LibrarySurface(
            libraries=set(self.libraries),
            routines=dict(self.routines),
            types={key: dict(val) for key, val in self.types.items()},
        )

    def add_library(self, name: str) -> None:
        self.libraries.add(name)

    def add_routine(self, library: str, name: str, sig: RoutineSig) -> None:
        self.libraries.add(library)
        self.routines[(library, name)] = sig

    def add_type(self, library: str, name: str, methods: dict[str, MethodSig]) -> None:
        self.libraries.add(library)
        self.types[(library, name)] = methods


def _lib(library: str, name: str) -> ast.LibType:
    return ast.LibType(library, name)


def standard_surface() -> LibrarySurface:
    """The surface of the built-in libraries."""
    surface = LibrarySurface()

    surface.add_routine("io", "println", RoutineSig((ast.StringType(),), ()))
    surface.add_routine("log", "info", RoutineSig((ast.StringType(),), ()))
    surface.add_routine("log", "warn", RoutineSig((ast.StringType(),), ()))

    # array::Array<T> is generic; Size/Contains/indexing are handled
    # structurally by the checker, but the library must exist for imports.
    surface.add_library("array")
    surface.add_type("array", "Array", {})

    surface.add_type(
        "config",
        "Config",
        {
            "GetPlungerGates": MethodSig(
                (), ast.GenericType(_lib("array", "Array"), _lib("config", "Connection"))
            ),
        },
    )
    surface.add_type("config", "Connection", {"Name": MethodSig((), ast.StringType())})

    surface.add_type(
        "deviceStates",
        "DeviceStates",
        {"Lookup": MethodSig((ast.StringType(),), _lib("deviceStates", "DeviceState"))},
    )
    surface.add_type("deviceStates", "DeviceState", {})

    surface.add_routine(
        "stateStepper",
        "BlipStateStepper",
        RoutineSig((ast.StringType(),), (), kind="autotuner"),
    )
    surface.add_routine(
        "hub",
        "CollectCurrentDeviceState",
        RoutineSig((), (_lib("deviceStates", "DeviceStates"),)),
    )

    return surface


STANDARD_SURFACE = standard_surface()
