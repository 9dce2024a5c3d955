"""Parser tests: listing coverage, AST shape, and error reporting."""

import pytest

from falcon.dsl import ast, parse
from falcon.programs import charge_configuration_tuner_source, check_plunger_gates_source


def parse_ok(source):
    result = parse(source)
    assert result.ok, [f"{d.span} {d.message}" for d in result.diagnostics]
    return result.program


def first_error(source):
    result = parse(source)
    assert not result.ok
    return result.diagnostics[0]


def test_connection_review_program_parses():
    program = parse_ok(check_plunger_gates_source())
    assert program.imports == ("log", "io", "config", "array")
    assert [s.name for s in program.structs] == ["DeviceConnection"]
    tuner = program.autotuner("CheckPlungerGates")
    assert tuner is not None
    assert [s.name for s in tuner.states] == ["loop", "missing_plunger_gate", "exit"]
    assert tuner.start.target == "loop"
    # The start transition passes its argument explicitly.
    assert tuner.start.args is not None
    assert len(tuner.start.args) == 1
    # The transition into missing_plunger_gate omits its argument list.
    loop = tuner.state("loop")
    chain = loop.body[1]
    assert isinstance(chain, ast.IfChain)
    jump = chain.blocks[0][-1]
    assert isinstance(jump, ast.Transition)
    assert jump.target == "missing_plunger_gate"
    assert jump.args is None


def test_charge_tuner_program_parses():
    program = parse_ok(charge_configuration_tuner_source())
    assert program.imports == ("stateStepper", "deviceStates", "hub")
    tuner = program.autotuner("ChargeConfigurationTuner")
    assert tuner is not None
    assert [s.name for s in tuner.states] == ["tuning"]
    assert [p.name for p in tuner.params] == ["n", "m"]
    assert [p.name for p in tuner.returns] == ["dstates"]
    assert len(tuner.initializers) == 3


def test_transition_without_parens_keeps_args_unset():
    program = parse_ok(
        """
        autotuner A () -> () {
            int x = 0;
            start -> s;
            state s (int x) {
                -> t;
            }
            state t (int x) {
                terminal;
            }
        }
        """
    )
    tuner = program.autotuners[0]
    assert tuner.start.args is None
    transition = tuner.states[0].body[0]
    assert isinstance(transition, ast.Transition)
    assert transition.args is None


def test_transition_with_empty_parens_is_distinct_from_omitted():
    program = parse_ok(
        """
        autotuner A () -> () {
            start -> s();
            state s {
                -> t();
            }
            state t {
                terminal;
            }
        }
        """
    )
    tuner = program.autotuners[0]
    assert tuner.start.args == ()
    transition = tuner.states[0].body[0]
    assert transition.args == ()


def test_struct_routine_bodies_parse():
    program = parse_ok(
        """
        struct Pair {
            int left;
            int right;

            routine Sum() -> (int total) {
                total = this.left + right;
            }
        }

        autotuner A () -> () {
            start -> s;
            state s { terminal; }
        }
        """
    )
    routine = program.structs[0].routines[0]
    assert routine.returns[0].name == "total"
    assign = routine.body[0]
    assert isinstance(assign, ast.Assign)
    assert isinstance(assign.value, ast.BinaryOp)
    assert isinstance(assign.value.left, ast.FieldAccess)
    assert isinstance(assign.value.left.base, ast.ThisExpr)


def test_operator_precedence():
    program = parse_ok(
        """
        autotuner A () -> () {
            bool b = 1 + 2 < 3 + 4 == 5 < 6;
            start -> s;
            state s { terminal; }
        }
        """
    )
    decl = program.autotuners[0].initializers[0]
    top = decl.init
    assert isinstance(top, ast.BinaryOp) and top.op == "=="
    assert isinstance(top.left, ast.BinaryOp) and top.left.op == "<"
    assert isinstance(top.left.left, ast.BinaryOp) and top.left.left.op == "+"
    assert isinstance(top.right, ast.BinaryOp) and top.right.op == "<"


def test_unary_binds_tighter_than_binary():
    program = parse_ok(
        """
        autotuner A (bool flag, bool other) -> () {
            bool b = !flag == !other;
            start -> s;
            state s { terminal; }
        }
        """
    )
    top = program.autotuners[0].initializers[0].init
    assert isinstance(top, ast.BinaryOp) and top.op == "=="
    assert isinstance(top.left, ast.UnaryOp)
    assert isinstance(top.right, ast.UnaryOp)


def test_postfix_chains():
    program = parse_ok(
        """
        autotuner A (config::Config conf) -> () {
            int n = conf.GetPlungerGates()[0].Name().Size();
            start -> s;
            state s { terminal; }
        }
        """
    )
    init = program.autotuners[0].initializers[0].init
    assert isinstance(init, ast.MethodCall) and init.method == "Size"
    base = init.base
    assert isinstance(base, ast.MethodCall) and base.method == "Name"
    assert isinstance(base.base, ast.IndexExpr)


def test_generic_array_type():
    program = parse_ok(
        """
        autotuner A (array::Array<array::Array<int>> rows) -> () {
            start -> s;
            state s { terminal; }
        }
        """
    )
    param_type = program.autotuners[0].params[0].type
    assert isinstance(param_type, ast.GenericType)
    assert isinstance(param_type.arg, ast.GenericType)
    assert param_type.arg.arg == ast.IntType()


def test_nil_and_error_literals():
    program = parse_ok(
        """
        autotuner A () -> (Error err) {
            err = nil;
            start -> s;
            state s {
                err = Error("boom " + "bang");
                terminal;
            }
        }
        """
    )
    body = program.autotuners[0].states[0].body
    assign = body[0]
    assert isinstance(assign, ast.Assign)
    assert isinstance(assign.value, ast.ErrorCtor)
    init = program.autotuners[0].initializers[0]
    assert isinstance(init, ast.Assign)
    assert isinstance(init.value, ast.NilLit)


def test_missing_semicolon_reports_expected_hint():
    diagnostic = first_error(
        """
        autotuner A () -> () {
            int x = 1
            start -> s;
            state s { terminal; }
        }
        """
    )
    assert diagnostic.code == "syntax"
    assert "expected ';'" in diagnostic.message
    assert "found 'start'" in diagnostic.message
    assert diagnostic.span.line == 4


def test_keyword_as_identifier_is_rejected():
    diagnostic = first_error("struct if { int x; }")
    assert diagnostic.code == "syntax"
    assert "identifier" in diagnostic.message
    assert diagnostic.span.line == 1
    assert diagnostic.span.column == 8


def test_unqualified_call_is_rejected_with_hint():
    diagnostic = first_error(
        """
        autotuner A () -> () {
            start -> s;
            state s {
                println("hello");
                terminal;
            }
        }
        """
    )
    assert diagnostic.code == "syntax"
    assert "unqualified call" in diagnostic.message
    assert "lib::routine" in diagnostic.message


def test_unterminated_string_surfaces_through_parse():
    result = parse(
        'autotuner A () -> () { start -> s; state s { io::println("oops); terminal; } }'
    )
    assert not result.ok
    assert result.diagnostics[0].code == "unterminated-string"


def test_declaration_requires_initializer():
    diagnostic = first_error(
        """
        autotuner A () -> () {
            int x;
            start -> s;
            state s { terminal; }
        }
        """
    )
    assert diagnostic.code == "syntax"
    assert "initializer is required" in diagnostic.message


def test_autotuner_header_requires_parameter_lists():
    diagnostic = first_error("autotuner A { start -> s; state s { terminal; } }")
    assert diagnostic.code == "syntax"
    assert "'('" in diagnostic.message


def test_stray_token_at_top_level():
    diagnostic = first_error("widget A {}")
    assert diagnostic.code == "syntax"
    assert "expected" in diagnostic.message
    assert "'widget'" in diagnostic.message


@pytest.mark.parametrize("source", ["", "   \n  // just a comment\n"])
def test_empty_source_parses_to_empty_program(source):
    program = parse_ok(source)
    assert program.imports == ()
    assert program.structs == ()
    assert program.autotuners == ()
