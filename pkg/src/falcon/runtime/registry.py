"""Library registry: host-implemented routines callable from programs.

A routine is registered under ``library::name`` with declared parameter and
return types; the checker surface is derived from the same registrations so
static signatures and runtime behavior cannot drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from falcon.dsl.libraries import LibrarySurface, MethodSig, RoutineSig


class RegistryError(ValueError):
    """Duplicate or late registration."""


@dataclass(frozen=True)
class HostRoutine:
    """A host implementation bound to a DSL-visible signature.

    ``impl`` receives a call context and the evaluated argument values and
    returns a tuple of values matching ``returns`` (or a single value, or
    None when there are no returns). ``kind`` distinguishes plain routines
    from library autotuners, whose calls nest a child trace.
    """

    name: str
    params: tuple
    returns: tuple
    impl: Callable
    kind: str = "routine"


@dataclass(frozen=True)
class HostMethod:
    """A host method on an opaque library type."""

    name: str
    params: tuple
    ret: object
    impl: Callable


class LibraryRegistry:
    def __init__(self) -> None:
        self._routines: dict[tuple[str, str], HostRoutine] = {}
        self._methods: dict[tuple[str, str, str], HostMethod] = {}
        self._types: set[tuple[str, str]] = set()
        self._libraries: set[str] = set()
        self._frozen = False

    def _ensure_mutable(self) -> None:
        if self._frozen:
            raise RegistryError("registry is frozen once execution has started")

    def register_library(self, name: str, routines: Iterable[HostRoutine] = ()) -> None:
        self._ensure_mutable()
        if name in self._libraries:
            raise RegistryError(f"library {name!r} is already registered")
        self._libraries.add(name)
        for routine in routines:
            self.register_routine(name, routine)

    def register_routine(self, library: str, routine: HostRoutine) -> None:
        self._ensure_mutable()
        self._libraries.add(library)
        key = (library, routine.name)
        if key in self._routines:
            raise RegistryError(
                f"routine {routine.name!r} is already registered in {library!r}"
            )
        self._routines[key] = routine

    def register_type(self, library: str, type_name: str) -> None:
        """Declare an opaque library type, with or without methods."""
        self._ensure_mutable()
        self._libraries.add(library)
        self._types.add((library, type_name))

    def register_method(self, library: str, type_name: str, method: HostMethod) -> None:
        self._ensure_mutable()
        self._libraries.add(library)
        self._types.add((library, type_name))
        key = (library, type_name, method.name)
        if key in self._methods:
            raise RegistryError(
                f"method {method.name!r} is already registered on {library}::{type_name}"
            )
        self._methods[key] = method

    def freeze(self) -> None:
        self._frozen = True

    @property
    def libraries(self) -> frozenset[str]:
        return frozenset(self._libraries)

    def routine(self, library: str, name: str) -> Optional[HostRoutine]:
        return self._routines.get((library, name))

    def method(self, library: str, type_name: str, name: str) -> Optional[HostMethod]:
        return self._methods.get((library, type_name, name))

    def surface(self) -> LibrarySurface:
        """A checker surface matching exactly what is registered."""
        surface = LibrarySurface()
        for name in self._libraries:
            surface.add_library(name)
        for (library, name), routine in self._routines.items():
            surface.add_routine(
                library,
                name,
                RoutineSig(
                    params=tuple(routine.params),
                    returns=tuple(routine.returns),
                    kind=routine.kind,
                ),
            )
        type_methods: dict[tuple[str, str], dict[str, MethodSig]] = {
            key: {} for key in self._types
        }
        for (library, type_name, name), method in self._methods.items():
            type_methods.setdefault((library, type_name), {})[name] = MethodSig(
                params=tuple(method.params), ret=method.ret
            )
        for (lib, tname), methods in sorted(type_methods.items()):
            surface.add_type(lib, tname, methods)
        # Array is structural: the library must exist for imports even though
        # its operations are built into the evaluator.
        surface.add_library("array")
        surface.add_type("array", "Array", {})
        return surface
