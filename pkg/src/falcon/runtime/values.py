"""Runtime value model.

Values are the data the engine computes with: 64-bit ints, booleans, text,
nil, error values, typed arrays, struct instances, and opaque library handles
wrapping host objects (connections, device states, configuration).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from falcon.dsl import ast

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


class Value:
    """Base class for runtime values."""

    __slots__ = ()


class IntOverflow(Exception):
    """Raised when a 64-bit integer result leaves the representable range."""


@dataclass(frozen=True)
class IntVal(Value):
    value: int

    def __post_init__(self) -> None:
        if not (INT_MIN <= self.value <= INT_MAX):
            raise IntOverflow(f"integer {self.value} exceeds 64-bit range")


@dataclass(frozen=True)
class BoolVal(Value):
    value: bool


@dataclass(frozen=True)
class TextVal(Value):
    value: str


@dataclass(frozen=True)
class NilVal(Value):
    pass


NIL_VALUE = NilVal()


@dataclass(frozen=True)
class ErrorVal(Value):
    message: str


@dataclass(frozen=True)
class ArrayVal(Value):
    elements: tuple[Value, ...]
    elem_type: ast.TypeExpr = field(compare=False, default=None)

    def size(self) -> int:
        return len(self.elements)


@dataclass
class StructVal(Value):
    """Mutable struct instance; passed by reference."""

    decl: ast.StructDecl
    fields: dict[str, Value]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StructVal):
            return NotImplemented
        return self.decl.name == other.decl.name and self.fields == other.fields

    __hash__ = None


@dataclass(frozen=True)
class OpaqueVal(Value):
    """Handle to a host object, typed as a library type for method dispatch."""

    library: str
    type_name: str
    payload: object = field(compare=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OpaqueVal):
            return NotImplemented
        return (
            self.library == other.library
            and self.type_name == other.type_name
            and self.payload == other.payload
        )

    __hash__ = None


def _connection_struct_bridge(opaque: OpaqueVal, struct: StructVal) -> bool:
    """An opaque connection equals a struct carrying the same connection name.

    The struct side qualifies when it has a text field named ``name`` or
    ``name_``; the comparison is by connection name.
    """
    if (opaque.library, opaque.type_name) != ("config", "Connection"):
        return False
    payload = opaque.payload
    name = getattr(payload, "name", None)
    if name is None:
        return False
    for field_name in ("name", "name_"):
        candidate = struct.fields.get(field_name)
        if isinstance(candidate, TextVal):
            return candidate.value == name
    return False


def values_equal(left: Value, right: Value) -> bool:
    """Structural equality over runtime values.

    Same-kind values compare naturally; an opaque connection handle also
    equals a struct instance naming the same connection, in either order.
    """
    if isinstance(left, OpaqueVal) and isinstance(right, StructVal):
        return _connection_struct_bridge(left, right)
    if isinstance(right, OpaqueVal) and isinstance(left, StructVal):
        return _connection_struct_bridge(right, left)
    if isinstance(left, ArrayVal) and isinstance(right, ArrayVal):
        if len(left.elements) != len(right.elements):
            return False
        return all(
            values_equal(a, b) for a, b in zip(left.elements, right.elements)
        )
    if type(left) is not type(right):
        return False
    if isinstance(left, StructVal):
        if left.decl.name != right.decl.name:
            return False
        if left.fields.keys() != right.fields.keys():
            return False
        return all(values_equal(left.fields[k], right.fields[k]) for k in left.fields)
    return left == right


def zero_value(type_expr: ast.TypeExpr, structs: dict[str, ast.StructDecl]) -> Value:
    """The default value for a declared-but-unassigned binding."""
    if isinstance(type_expr, ast.IntType):
        return IntVal(0)
    if isinstance(type_expr, ast.StringType):
        return TextVal("")
    if isinstance(type_expr, ast.BoolType):
        return BoolVal(False)
    if isinstance(type_expr, ast.ErrorType):
        return NIL_VALUE
    if isinstance(type_expr, ast.GenericType):
        return ArrayVal((), type_expr.arg)
    if isinstance(type_expr, ast.StructType):
        decl = structs.get(type_expr.name)
        if decl is None:
            return NIL_VALUE
        return StructVal(
            decl, {f.name: zero_value(f.type, structs) for f in decl.fields}
        )
    return NIL_VALUE


def conforms(value: Value, type_expr: ast.TypeExpr) -> bool:
    """Loose runtime conformance of a value to a declared type."""
    if isinstance(type_expr, ast.IntType):
        return isinstance(value, IntVal)
    if isinstance(type_expr, ast.StringType):
        return isinstance(value, TextVal)
    if isinstance(type_expr, ast.BoolType):
        return isinstance(value, BoolVal)
    if isinstance(type_expr, ast.ErrorType):
        return isinstance(value, (ErrorVal, NilVal))
    if isinstance(type_expr, ast.StructType):
        return isinstance(value, StructVal) and value.decl.name == type_expr.name
    if isinstance(type_expr, ast.GenericType):
        return isinstance(value, ArrayVal) and all(
            conforms(e, type_expr.arg) for e in value.elements
        )
    if isinstance(type_expr, ast.LibType):
        return isinstance(value, NilVal) or (
            isinstance(value, OpaqueVal)
            and (value.library, value.type_name)
            == (type_expr.library, type_expr.name)
        )
    return True


def describe_value(value: Value) -> str:
    if isinstance(value, IntVal):
        return "int"
    if isinstance(value, BoolVal):
        return "bool"
    if isinstance(value, TextVal):
        return "string"
    if isinstance(value, NilVal):
        return "nil"
    if isinstance(value, ErrorVal):
        return "Error"
    if isinstance(value, ArrayVal):
        return "array"
    if isinstance(value, StructVal):
        return value.decl.name
    if isinstance(value, OpaqueVal):
        return f"{value.library}::{value.type_name}"
    return type(value).__name__


def value_to_jsonable(value: Value) -> object:
    """A JSON-ready rendering of a value, used for traces and outputs."""
    if isinstance(value, IntVal):
        return value.value
    if isinstance(value, BoolVal):
        return value.value
    if isinstance(value, TextVal):
        return value.value
    if isinstance(value, NilVal):
        return None
    if isinstance(value, ErrorVal):
        return {"error": value.message}
    if isinstance(value, ArrayVal):
        return [value_to_jsonable(e) for e in value.elements]
    if isinstance(value, StructVal):
        return {
            "struct": value.decl.name,
            "fields": {k: value_to_jsonable(v) for k, v in value.fields.items()},
        }
    if isinstance(value, OpaqueVal):
        payload = value.payload
        rendered: object
        try:
            from falcon.core.serialize import to_json_string

            rendered = json.loads(to_json_string(payload))
        except Exception:
            name = getattr(payload, "name", None)
            rendered = name if isinstance(name, str) else repr(payload)
        return {"handle": f"{value.library}::{value.type_name}", "value": rendered}
    return repr(value)
