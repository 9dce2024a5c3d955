"""Runtime value model: equality, defaults, conformance, JSON rendering."""

from types import SimpleNamespace

import pytest

from falcon.dsl import ast
from falcon.runtime.values import (
    INT_MAX,
    INT_MIN,
    NIL_VALUE,
    ArrayVal,
    BoolVal,
    ErrorVal,
    IntOverflow,
    IntVal,
    NilVal,
    OpaqueVal,
    StructVal,
    TextVal,
    conforms,
    describe_value,
    value_to_jsonable,
    values_equal,
    zero_value,
)

def array_of(elem_type):
    return ast.GenericType(ast.LibType("array", "Array"), elem_type)


def struct_decl(name, field_types):
    fields = tuple(ast.FieldDecl(type=t, name=n) for n, t in field_types.items())
    return ast.StructDecl(name=name, fields=fields, routines=())


CONN_DECL = struct_decl("DeviceConnection", {"name_": ast.StringType()})


def connection(name):
    return OpaqueVal("config", "Connection", SimpleNamespace(name=name))


def test_int_range_is_64_bit():
    assert IntVal(INT_MAX).value == 2**63 - 1
    assert IntVal(INT_MIN).value == -(2**63)
    with pytest.raises(IntOverflow):
        IntVal(INT_MAX + 1)
    with pytest.raises(IntOverflow):
        IntVal(INT_MIN - 1)


def test_values_equal_same_kind():
    assert values_equal(IntVal(3), IntVal(3))
    assert not values_equal(IntVal(3), IntVal(4))
    assert values_equal(TextVal("a"), TextVal("a"))
    assert values_equal(BoolVal(True), BoolVal(True))
    assert values_equal(NIL_VALUE, NilVal())
    assert values_equal(ErrorVal("boom"), ErrorVal("boom"))
    assert not values_equal(ErrorVal("boom"), ErrorVal("bust"))


def test_values_equal_rejects_kind_mismatch():
    assert not values_equal(IntVal(1), TextVal("1"))
    assert not values_equal(BoolVal(False), NIL_VALUE)
    assert not values_equal(ErrorVal("x"), TextVal("x"))


def test_values_equal_arrays_elementwise():
    a = ArrayVal((IntVal(1), IntVal(2)), ast.IntType())
    b = ArrayVal((IntVal(1), IntVal(2)), ast.IntType())
    c = ArrayVal((IntVal(1), IntVal(3)), ast.IntType())
    short = ArrayVal((IntVal(1),), ast.IntType())
    assert values_equal(a, b)
    assert not values_equal(a, c)
    assert not values_equal(a, short)


def test_values_equal_structs_recursive():
    left = StructVal(CONN_DECL, {"name_": TextVal("P1")})
    right = StructVal(CONN_DECL, {"name_": TextVal("P1")})
    other = StructVal(CONN_DECL, {"name_": TextVal("P2")})
    assert values_equal(left, right)
    assert not values_equal(left, other)


def test_values_equal_structs_require_same_declaration_name():
    other_decl = struct_decl("Widget", {"name_": ast.StringType()})
    assert not values_equal(
        StructVal(CONN_DECL, {"name_": TextVal("P1")}),
        StructVal(other_decl, {"name_": TextVal("P1")}),
    )


def test_connection_handle_equals_struct_with_matching_name():
    struct = StructVal(CONN_DECL, {"name_": TextVal("P1")})
    assert values_equal(connection("P1"), struct)
    assert values_equal(struct, connection("P1"))
    assert not values_equal(connection("P2"), struct)


def test_connection_bridge_accepts_plain_name_field():
    decl = struct_decl("Conn", {"name": ast.StringType()})
    struct = StructVal(decl, {"name": TextVal("B2")})
    assert values_equal(connection("B2"), struct)


def test_bridge_only_applies_to_connection_handles():
    struct = StructVal(CONN_DECL, {"name_": TextVal("P1")})
    other_handle = OpaqueVal("deviceStates", "DeviceState", SimpleNamespace(name="P1"))
    assert not values_equal(other_handle, struct)


def test_bridge_requires_named_payload():
    struct = StructVal(CONN_DECL, {"name_": TextVal("P1")})
    nameless = OpaqueVal("config", "Connection", object())
    assert not values_equal(nameless, struct)


def test_opaque_equality_includes_payload():
    a = connection("P1")
    b = connection("P1")
    c = connection("P2")
    assert values_equal(a, b)
    assert not values_equal(a, c)


def test_array_contains_uses_bridge_equality():
    struct = StructVal(CONN_DECL, {"name_": TextVal("P2")})
    gates = ArrayVal((connection("P1"), connection("P2")), None)
    assert any(values_equal(e, struct) for e in gates.elements)


def test_zero_values():
    structs = {"DeviceConnection": CONN_DECL}
    assert zero_value(ast.IntType(), structs) == IntVal(0)
    assert zero_value(ast.StringType(), structs) == TextVal("")
    assert zero_value(ast.BoolType(), structs) == BoolVal(False)
    assert zero_value(ast.ErrorType(), structs) == NIL_VALUE
    array = zero_value(array_of(ast.IntType()), structs)
    assert isinstance(array, ArrayVal) and array.size() == 0
    assert zero_value(ast.LibType("config", "Config"), structs) == NIL_VALUE


def test_zero_value_struct_recursive():
    outer = struct_decl(
        "Outer",
        {"label": ast.StringType(), "inner": ast.StructType("DeviceConnection")},
    )
    structs = {"DeviceConnection": CONN_DECL, "Outer": outer}
    value = zero_value(ast.StructType("Outer"), structs)
    assert isinstance(value, StructVal)
    assert value.fields["label"] == TextVal("")
    inner = value.fields["inner"]
    assert isinstance(inner, StructVal)
    assert inner.fields["name_"] == TextVal("")


def test_conforms_primitives():
    assert conforms(IntVal(1), ast.IntType())
    assert not conforms(TextVal("1"), ast.IntType())
    assert conforms(TextVal("x"), ast.StringType())
    assert conforms(BoolVal(True), ast.BoolType())


def test_conforms_error_accepts_nil():
    assert conforms(ErrorVal("e"), ast.ErrorType())
    assert conforms(NIL_VALUE, ast.ErrorType())
    assert not conforms(IntVal(0), ast.ErrorType())


def test_conforms_lib_type_accepts_nil_or_matching_handle():
    lib = ast.LibType("config", "Config")
    assert conforms(NIL_VALUE, lib)
    assert conforms(OpaqueVal("config", "Config", object()), lib)
    assert not conforms(OpaqueVal("config", "Connection", object()), lib)
    assert not conforms(IntVal(0), lib)


def test_conforms_array_checks_elements():
    arr_type = array_of(ast.IntType())
    assert conforms(ArrayVal((IntVal(1),), ast.IntType()), arr_type)
    assert not conforms(ArrayVal((TextVal("x"),), ast.StringType()), arr_type)
    assert not conforms(IntVal(1), arr_type)


def test_conforms_struct_matches_by_name():
    assert conforms(
        StructVal(CONN_DECL, {"name_": TextVal("P1")}),
        ast.StructType("DeviceConnection"),
    )
    assert not conforms(
        StructVal(CONN_DECL, {"name_": TextVal("P1")}), ast.StructType("Widget")
    )


def test_describe_value():
    assert describe_value(IntVal(1)) == "int"
    assert describe_value(TextVal("x")) == "string"
    assert describe_value(BoolVal(True)) == "bool"
    assert describe_value(NIL_VALUE) == "nil"
    assert describe_value(ErrorVal("e")) == "Error"
    assert describe_value(ArrayVal((), None)) == "array"
    assert describe_value(StructVal(CONN_DECL, {})) == "DeviceConnection"
    assert describe_value(connection("P1")) == "config::Connection"


def test_value_to_jsonable():
    assert value_to_jsonable(IntVal(7)) == 7
    assert value_to_jsonable(BoolVal(True)) is True
    assert value_to_jsonable(TextVal("hi")) == "hi"
    assert value_to_jsonable(NIL_VALUE) is None
    assert value_to_jsonable(ErrorVal("bad")) == {"error": "bad"}
    assert value_to_jsonable(ArrayVal((IntVal(1), TextVal("a")), None)) == [1, "a"]
    struct = StructVal(CONN_DECL, {"name_": TextVal("P1")})
    assert value_to_jsonable(struct) == {
        "struct": "DeviceConnection",
        "fields": {"name_": "P1"},
    }


def test_value_to_jsonable_handles():
    named = value_to_jsonable(connection("P1"))
    assert named == {"handle": "config::Connection", "value": "P1"}
    anonymous = value_to_jsonable(OpaqueVal("config", "Config", 123))
    assert anonymous["handle"] == "config::Config"
    assert isinstance(anonymous["value"], str)
