"""Semantic checker for parsed programs.

The checker is total: it never raises on malformed programs, it collects every
diagnostic it can find in one pass over the program. Codes are stable:

- ``unknown-import``   import of (or reference to) an unknown library
- ``unknown-state``    transition to a state that does not exist
- ``arity``            argument count / implicit-binding failure
- ``type``             type mismatch
- ``undeclared``       unknown identifier, field, routine, or type name
- ``duplicate``        duplicate declaration
- ``no-terminal``      no reachable state can terminate
- ``incomplete-state`` a control path may fall off the end of a state body
- ``invalid-statement``statement not allowed in this context
- ``unreachable-state``(warning) state unreachable from the start transition
"""

from __future__ import annotations

from typing import Optional

from falcon.dsl import ast
from falcon.dsl.diagnostics import Diagnostic, Severity, SourceSpan
from falcon.dsl.libraries import ANY, LibrarySurface, MethodSig, STANDARD_SURFACE


class _Nil:
    """Type of the nil literal."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance


class _Void:
    """Pseudo-type of calls that return nothing."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance


NIL = _Nil()
VOID = _Void()

_ARRAY = ("array", "Array")


def _is_array(type_expr) -> bool:
    return (
        isinstance(type_expr, ast.GenericType)
        and (type_expr.base.library, type_expr.base.name) == _ARRAY
    )


def _nilable(type_expr) -> bool:
    """nil is assignable to Error and to library reference types."""
    return isinstance(type_expr, (ast.ErrorType, ast.LibType, ast.GenericType))


def _describe(type_expr) -> str:
    if type_expr is NIL:
        return "nil"
    if type_expr is VOID:
        return "no value"
    if type_expr is ANY:
        return "any"
    from falcon.dsl.formatter import format_type

    return format_type(type_expr)


class _Scope:
    def __init__(self, parent: Optional["_Scope"] = None) -> None:
        self.parent = parent
        self.names: dict[str, object] = {}

    def declare(self, name: str) -> bool:
        if name in self.names:
            return False
        return True

    def define(self, name: str, type_expr) -> None:
        self.names[name] = type_expr

    def lookup(self, name: str):
        scope: Optional[_Scope] = self
        while scope is not None:
            if name in scope.names:
                return scope.names[name]
            scope = scope.parent
        return None

    def defined_here(self, name: str) -> bool:
        return name in self.names


class _Checker:
    def __init__(self, program: ast.Program, surface: LibrarySurface) -> None:
        self.program = program
        self.surface = surface
        self.diagnostics: list[Diagnostic] = []
        self.imported: set[str] = set(program.imports)
        self.structs: dict[str, ast.StructDecl] = {}
        self.current_struct: Optional[ast.StructDecl] = None

    # -- reporting ----------------------------------------------------------

    def error(self, code: str, message: str, span: SourceSpan) -> None:
        self.diagnostics.append(Diagnostic(code, message, span))

    def warn(self, code: str, message: str, span: SourceSpan) -> None:
        self.diagnostics.append(Diagnostic(code, message, span, Severity.WARNING))

    # -- entry --------------------------------------------------------------

    def run(self) -> list[Diagnostic]:
        spans = self.program.import_spans
        for index, name in enumerate(self.program.imports):
            span = spans[index] if index < len(spans) else self.program.span
            if name not in self.surface.libraries:
                self.error("unknown-import", f"import of unknown library {name!r}", span)

        for struct in self.program.structs:
            if struct.name in self.structs:
                self.error(
                    "duplicate", f"duplicate struct declaration {struct.name!r}", struct.span
                )
            else:
                self.structs[struct.name] = struct

        for struct in self.structs.values():
            self.check_struct(struct)

        seen_autotuners: set[str] = set()
        for autotuner in self.program.autotuners:
            if autotuner.name in seen_autotuners:
                self.error(
                    "duplicate",
                    f"duplicate autotuner declaration {autotuner.name!r}",
                    autotuner.span,
                )
            seen_autotuners.add(autotuner.name)
            self.check_autotuner(autotuner)

        return self.diagnostics

    # -- types --------------------------------------------------------------

    def check_type(self, type_expr) -> None:
        if isinstance(type_expr, ast.StructType):
            if type_expr.name not in self.structs:
                self.error(
                    "undeclared", f"unknown type name {type_expr.name!r}", type_expr.span
                )
        elif isinstance(type_expr, ast.LibType):
            self.check_lib_type(type_expr)
        elif isinstance(type_expr, ast.GenericType):
            self.check_lib_type(type_expr.base)
            self.check_type(type_expr.arg)

    def check_lib_type(self, lib_type: ast.LibType) -> None:
        if lib_type.library not in self.surface.libraries:
            self.error(
                "unknown-import",
                f"reference to unknown library {lib_type.library!r}",
                lib_type.span,
            )
            return
        if lib_type.library not in self.imported:
            self.error(
                "unknown-import",
                f"library {lib_type.library!r} is used but not imported",
                lib_type.span,
            )
        if (lib_type.library, lib_type.name) not in self.surface.types:
            self.error(
                "undeclared",
                f"library {lib_type.library!r} has no type {lib_type.name!r}",
                lib_type.span,
            )

    def types_equal(self, left, right) -> bool:
        if left is ANY or right is ANY:
            return True
        return left == right

    def assignable(self, target, value) -> bool:
        if value is ANY or target is ANY:
            return True
        if value is NIL:
            return _nilable(target)
        return target == value

    # -- structs ------------------------------------------------------------

    def check_struct(self, struct: ast.StructDecl) -> None:
        seen_fields: set[str] = set()
        for field_decl in struct.fields:
            if field_decl.name in seen_fields:
                self.error(
                    "duplicate",
                    f"duplicate field {field_decl.name!r} in struct {struct.name!r}",
                    field_decl.span,
                )
            seen_fields.add(field_decl.name)
            self.check_type(field_decl.type)

        seen_routines: set[str] = set()
        for routine in struct.routines:
            if routine.name in seen_routines:
                self.error(
                    "duplicate",
                    f"duplicate routine {routine.name!r} in struct {struct.name!r}",
                    routine.span,
                )
            seen_routines.add(routine.name)
            self.check_routine(struct, routine)

    def check_routine(self, struct: ast.StructDecl, routine: ast.RoutineDecl) -> None:
        self.current_struct = struct
        scope = _Scope()
        for field_decl in struct.fields:
            scope.define(field_decl.name, field_decl.type)
        inner = _Scope(scope)
        for param in list(routine.params) + list(routine.returns):
            self.check_type(param.type)
            if inner.defined_here(param.name):
                self.error(
                    "duplicate",
                    f"duplicate parameter {param.name!r} in routine {routine.name!r}",
                    param.span,
                )
            inner.define(param.name, param.type)
        self.check_stmts(routine.body, inner, allow_control=False)
        self.current_struct = None

    # -- autotuners ---------------------------------------------------------

    def check_autotuner(self, autotuner: ast.AutotunerDecl) -> None:
        scope = _Scope()
        for param in list(autotuner.params) + list(autotuner.returns):
            self.check_type(param.type)
            if scope.defined_here(param.name):
                self.error(
                    "duplicate",
                    f"duplicate parameter {param.name!r} in autotuner {autotuner.name!r}",
                    param.span,
                )
            scope.define(param.name, param.type)

        states = {state.name: state for state in autotuner.states}
        for state in autotuner.states:
            if states[state.name] is not state:
                self.error("duplicate", f"duplicate state {state.name!r}", state.span)

        self.check_stmts(autotuner.initializers, scope, allow_control=False)

        # The start transition.
        self.check_transition_target(
            autotuner.start.target,
            autotuner.start.args,
            autotuner.start.span,
            states,
            scope,
        )

        for state in autotuner.states:
            state_scope = _Scope(scope)
            for param in state.params:
                self.check_type(param.type)
                if state_scope.defined_here(param.name):
                    self.error(
                        "duplicate",
                        f"duplicate parameter {param.name!r} in state {state.name!r}",
                        param.span,
                    )
                state_scope.define(param.name, param.type)
            self.check_stmts(state.body, state_scope, allow_control=True, states=states)
            if not self.block_terminates(state.body):
                self.error(
                    "incomplete-state",
                    f"state {state.name!r} has a control path that ends without a"
                    " transition or terminal",
                    state.span,
                )

        self.check_state_graph(autotuner, states)

    def check_transition_target(
        self,
        target: str,
        args: Optional[tuple[ast.Expr, ...]],
        span: SourceSpan,
        states: dict[str, ast.StateDecl],
        scope: _Scope,
    ) -> None:
        state = states.get(target)
        if state is None:
            self.error("unknown-state", f"transition to unknown state {target!r}", span)
            if args is not None:
                for arg in args:
                    self.infer(arg, scope)
            return
        if args is None:
            # Implicit binding: every parameter must resolve by name in scope.
            for param in state.params:
                bound = scope.lookup(param.name)
                if bound is None:
                    self.error(
                        "arity",
                        f"transition to {target!r} omits arguments and parameter"
                        f" {param.name!r} is not in scope",
                        span,
                    )
                elif not self.assignable(param.type, bound):
                    self.error(
                        "type",
                        f"implicitly bound parameter {param.name!r} of state"
                        f" {target!r} expects {_describe(param.type)},"
                        f" found {_describe(bound)}",
                        span,
                    )
            return
        if len(args) != len(state.params):
            self.error(
                "arity",
                f"transition to {target!r} passes {len(args)} argument(s) but the"
                f" state declares {len(state.params)}",
                span,
            )
        for arg, param in zip(args, state.params):
            arg_type = self.infer(arg, scope)
            if not self.assignable(param.type, arg_type):
                self.error(
                    "type",
                    f"argument for parameter {param.name!r} of state {target!r}"
                    f" expects {_describe(param.type)}, found {_describe(arg_type)}",
                    arg.span,
                )
        for arg in args[len(state.params) :]:
            self.infer(arg, scope)

    def check_state_graph(
        self, autotuner: ast.AutotunerDecl, states: dict[str, ast.StateDecl]
    ) -> None:
        edges: dict[str, set[str]] = {name: set() for name in states}
        has_terminal: dict[str, bool] = {name: False for name in states}

        def walk(state_name: str, stmts) -> None:
            for stmt in stmts:
                if isinstance(stmt, ast.Transition):
                    if stmt.target in states:
                        edges[state_name].add(stmt.target)
                elif isinstance(stmt, ast.Terminal):
                    has_terminal[state_name] = True
                elif isinstance(stmt, ast.IfChain):
                    for block in stmt.blocks:
                        walk(state_name, block)
                    if stmt.else_block is not None:
                        walk(state_name, stmt.else_block)

        for state in autotuner.states:
            walk(state.name, state.body)

        reachable: set[str] = set()
        frontier = [autotuner.start.target] if autotuner.start.target in states else []
        while frontier:
            name = frontier.pop()
            if name in reachable:
                continue
            reachable.add(name)
            frontier.extend(edges[name] - reachable)

        for state in autotuner.states:
            if state.name not in reachable:
                self.warn(
                    "unreachable-state",
                    f"state {state.name!r} is unreachable from the start transition",
                    state.span,
                )

        if states and not any(has_terminal[name] for name in reachable):
            self.error(
                "no-terminal",
                f"autotuner {autotuner.name!r} has no reachable terminal",
                autotuner.span,
            )

    # -- statements ---------------------------------------------------------

    def check_stmts(
        self,
        stmts,
        scope: _Scope,
        allow_control: bool,
        states: Optional[dict[str, ast.StateDecl]] = None,
    ) -> None:
        for stmt in stmts:
            self.check_stmt(stmt, scope, allow_control, states)

    def check_stmt(
        self,
        stmt: ast.Stmt,
        scope: _Scope,
        allow_control: bool,
        states: Optional[dict[str, ast.StateDecl]],
    ) -> None:
        if isinstance(stmt, ast.VarDecl):
            self.check_type(stmt.type)
            init_type = self.infer(stmt.init, scope)
            if not self.assignable(stmt.type, init_type):
                self.error(
                    "type",
                    f"cannot initialize {stmt.name!r} of type"
                    f" {_describe(stmt.type)} with {_describe(init_type)}",
                    stmt.span,
                )
            if scope.defined_here(stmt.name):
                self.error("duplicate", f"duplicate declaration of {stmt.name!r}", stmt.span)
            scope.define(stmt.name, stmt.type)
        elif isinstance(stmt, ast.Assign):
            target_type = self.infer_lvalue(stmt.target, scope)
            value_type = self.infer(stmt.value, scope)
            if target_type is not None and not self.assignable(target_type, value_type):
                self.error(
                    "type",
                    f"cannot assign {_describe(value_type)} to a target of type"
                    f" {_describe(target_type)}",
                    stmt.span,
                )
        elif isinstance(stmt, ast.ExprStmt):
            self.infer(stmt.expr, scope, statement=True)
        elif isinstance(stmt, ast.Transition):
            if not allow_control or states is None:
                self.error(
                    "invalid-statement", "transition is only allowed inside a state", stmt.span
                )
                return
            self.check_transition_target(stmt.target, stmt.args, stmt.span, states, scope)
        elif isinstance(stmt, ast.Terminal):
            if not allow_control:
                self.error(
                    "invalid-statement", "terminal is only allowed inside a state", stmt.span
                )
        elif isinstance(stmt, ast.IfChain):
            for condition in stmt.conditions:
                cond_type = self.infer(condition, scope)
                if not self.types_equal(cond_type, ast.BoolType()) and cond_type is not ANY:
                    self.error(
                        "type",
                        f"condition must be bool, found {_describe(cond_type)}",
                        condition.span,
                    )
            for block in stmt.blocks:
                self.check_stmts(block, scope, allow_control, states)
            if stmt.else_block is not None:
                self.check_stmts(stmt.else_block, scope, allow_control, states)
        else:  # pragma: no cover - parser produces no other nodes
            raise TypeError(f"unknown statement node: {stmt!r}")

    def block_terminates(self, stmts) -> bool:
        """True when every control path through stmts ends in Transition/Terminal."""
        for stmt in stmts:
            if isinstance(stmt, (ast.Transition, ast.Terminal)):
                return True
            if isinstance(stmt, ast.IfChain) and stmt.else_block is not None:
                branches = list(stmt.blocks) + [stmt.else_block]
                if all(self.block_terminates(branch) for branch in branches):
                    return True
        return False

    # -- expressions --------------------------------------------------------

    def infer_lvalue(self, expr: ast.Expr, scope: _Scope):
        if isinstance(expr, ast.Ident):
            bound = scope.lookup(expr.name)
            if bound is None:
                self.error("undeclared", f"assignment to undeclared name {expr.name!r}", expr.span)
                return None
            return bound
        if isinstance(expr, ast.FieldAccess):
            return self.infer(expr, scope)
        self.error("invalid-statement", "assignment target must be a name or field", expr.span)
        return None

    def infer(self, expr: ast.Expr, scope: _Scope, statement: bool = False):
        result = self._infer(expr, scope)
        if result is VOID and not statement:
            self.error("type", "call returns no value but one is required", expr.span)
            return ANY
        return result

    def _infer(self, expr: ast.Expr, scope: _Scope):
        if isinstance(expr, ast.IntLit):
            return ast.IntType()
        if isinstance(expr, ast.StringLit):
            return ast.StringType()
        if isinstance(expr, ast.NilLit):
            return NIL
        if isinstance(expr, ast.Ident):
            bound = scope.lookup(expr.name)
            if bound is None:
                self.error("undeclared", f"use of undeclared name {expr.name!r}", expr.span)
                return ANY
            return bound
        if isinstance(expr, ast.ThisExpr):
            if self.current_struct is None:
                self.error(
                    "undeclared", "'this' is only available inside struct routines", expr.span
                )
                return ANY
            return ast.StructType(self.current_struct.name)
        if isinstance(expr, ast.FieldAccess):
            base = self.infer(expr.base, scope)
            if base is ANY:
                return ANY
            if isinstance(base, ast.StructType):
                struct = self.structs.get(base.name)
                if struct is None:
                    return ANY
                for field_decl in struct.fields:
                    if field_decl.name == expr.field_name:
                        return field_decl.type
                self.error(
                    "undeclared",
                    f"struct {base.name!r} has no field {expr.field_name!r}",
                    expr.span,
                )
                return ANY
            self.error(
                "type",
                f"field access requires a struct value, found {_describe(base)}",
                expr.span,
            )
            return ANY
        if isinstance(expr, ast.IndexExpr):
            base = self.infer(expr.base, scope)
            index_type = self.infer(expr.index, scope)
            if not self.types_equal(index_type, ast.IntType()):
                self.error(
                    "type", f"index must be int, found {_describe(index_type)}", expr.index.span
                )
            if base is ANY:
                return ANY
            if _is_array(base):
                return base.arg
            self.error(
                "type", f"indexing requires an array, found {_describe(base)}", expr.span
            )
            return ANY
        if isinstance(expr, ast.QualifiedCall):
            return self.infer_qualified_call(expr, scope)
        if isinstance(expr, ast.MethodCall):
            return self.infer_method_call(expr, scope)
        if isinstance(expr, ast.ErrorCtor):
            message_type = self.infer(expr.message, scope)
            if not self.types_equal(message_type, ast.StringType()):
                self.error(
                    "type",
                    f"Error message must be string, found {_describe(message_type)}",
                    expr.message.span,
                )
            return ast.ErrorType()
        if isinstance(expr, ast.BinaryOp):
            return self.infer_binary(expr, scope)
        if isinstance(expr, ast.UnaryOp):
            operand = self.infer(expr.operand, scope)
            if not self.types_equal(operand, ast.BoolType()):
                self.error(
                    "type", f"'!' requires bool, found {_describe(operand)}", expr.span
                )
            return ast.BoolType()
        raise TypeError(f"unknown expression node: {expr!r}")  # pragma: no cover

    def infer_qualified_call(self, expr: ast.QualifiedCall, scope: _Scope):
        if expr.library not in self.surface.libraries:
            self.error(
                "unknown-import", f"call into unknown library {expr.library!r}", expr.span
            )
            for arg in expr.args:
                self.infer(arg, scope)
            return ANY
        if expr.library not in self.imported:
            self.error(
                "unknown-import",
                f"library {expr.library!r} is used but not imported",
                expr.span,
            )
        sig = self.surface.routines.get((expr.library, expr.routine))
        if sig is None:
            self.error(
                "undeclared",
                f"library {expr.library!r} has no routine {expr.routine!r}",
                expr.span,
            )
            for arg in expr.args:
                self.infer(arg, scope)
            return ANY
        self.check_args(
            f"{expr.library}::{expr.routine}", sig.params, expr.args, expr.span, scope
        )
        if len(sig.returns) == 0:
            return VOID
        if len(sig.returns) == 1:
            return sig.returns[0]
        return VOID

    def infer_method_call(self, expr: ast.MethodCall, scope: _Scope):
        base = self.infer(expr.base, scope)
        if base is ANY:
            for arg in expr.args:
                self.infer(arg, scope)
            return ANY
        if isinstance(base, ast.StructType):
            struct = self.structs.get(base.name)
            routine = None
            if struct is not None:
                for candidate in struct.routines:
                    if candidate.name == expr.method:
                        routine = candidate
                        break
            if routine is None:
                self.error(
                    "undeclared",
                    f"struct {base.name!r} has no routine {expr.method!r}",
                    expr.span,
                )
                for arg in expr.args:
                    self.infer(arg, scope)
                return ANY
            self.check_args(
                f"{base.name}.{expr.method}",
                tuple(param.type for param in routine.params),
                expr.args,
                expr.span,
                scope,
            )
            if len(routine.returns) == 0:
                return VOID
            if len(routine.returns) == 1:
                return routine.returns[0].type
            return VOID
        if _is_array(base):
            if expr.method == "Size":
                self.check_args("Array.Size", (), expr.args, expr.span, scope)
                return ast.IntType()
            if expr.method == "Contains":
                self.check_args("Array.Contains", (ANY,), expr.args, expr.span, scope)
                return ast.BoolType()
            self.error(
                "undeclared", f"arrays have no method {expr.method!r}", expr.span
            )
            for arg in expr.args:
                self.infer(arg, scope)
            return ANY
        if isinstance(base, ast.LibType):
            methods = self.surface.types.get((base.library, base.name), {})
            sig = methods.get(expr.method)
            if sig is None:
                self.error(
                    "undeclared",
                    f"type {base.library}::{base.name} has no method {expr.method!r}",
                    expr.span,
                )
                for arg in expr.args:
                    self.infer(arg, scope)
                return ANY
            self.check_args(
                f"{base.library}::{base.name}.{expr.method}",
                sig.params,
                expr.args,
                expr.span,
                scope,
            )
            return sig.ret if sig.ret is not None else VOID
        self.error(
            "type",
            f"method call requires a struct or library value, found {_describe(base)}",
            expr.span,
        )
        for arg in expr.args:
            self.infer(arg, scope)
        return ANY

    def check_args(self, name: str, params, args, span: SourceSpan, scope: _Scope) -> None:
        arg_types = [self.infer(arg, scope) for arg in args]
        if len(args) != len(params):
            self.error(
                "arity",
                f"{name} expects {len(params)} argument(s), found {len(args)}",
                span,
            )
            return
        for arg, arg_type, param in zip(args, arg_types, params):
            if not self.assignable(param, arg_type):
                self.error(
                    "type",
                    f"{name} expects {_describe(param)}, found {_describe(arg_type)}",
                    arg.span,
                )

    def infer_binary(self, expr: ast.BinaryOp, scope: _Scope):
        left = self.infer(expr.left, scope)
        right = self.infer(expr.right, scope)
        if expr.op == "+":
            if self.types_equal(left, ast.IntType()) and self.types_equal(right, ast.IntType()):
                return ast.IntType() if left is not ANY else right
            if self.types_equal(left, ast.StringType()) and self.types_equal(
                right, ast.StringType()
            ):
                return ast.StringType()
            self.error(
                "type",
                f"'+' requires two ints or two strings, found {_describe(left)}"
                f" and {_describe(right)}",
                expr.span,
            )
            return ANY
        if expr.op in ("<", ">"):
            if not (
                self.types_equal(left, ast.IntType()) and self.types_equal(right, ast.IntType())
            ):
                self.error(
                    "type",
                    f"{expr.op!r} requires ints, found {_describe(left)}"
                    f" and {_describe(right)}",
                    expr.span,
                )
            return ast.BoolType()
        if expr.op in ("==", "!="):
            comparable = (
                left is ANY
                or right is ANY
                or left == right
                or (left is NIL and (_nilable(right) or right is NIL))
                or (right is NIL and _nilable(left))
            )
            if not comparable:
                self.error(
                    "type",
                    f"cannot compare {_describe(left)} with {_describe(right)}",
                    expr.span,
                )
            return ast.BoolType()
        raise TypeError(f"unknown operator {expr.op!r}")  # pragma: no cover


def check(
    program: ast.Program, surface: LibrarySurface | None = None
) -> list[Diagnostic]:
    """Check a parsed program against a library surface (standard by default)."""
    return _Checker(program, surface or STANDARD_SURFACE).run()
