"""Execution engine for checked programs.

An Execution interprets one autotuner as a state machine: instantiation runs
the scope initializers and takes the start transition; each step runs exactly
one state body to its transition or terminal, appending one TransitionRecord.
Strict left-to-right evaluation; 64-bit integer overflow, out-of-range
indexing of empty arrays, and method calls on nil are runtime faults that
fail the execution at the faulting span.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from falcon.dsl import ast
from falcon.dsl.diagnostics import SourceSpan
from falcon.runtime.registry import HostRoutine, LibraryRegistry
from falcon.runtime.values import (
    ArrayVal,
    BoolVal,
    ErrorVal,
    IntOverflow,
    IntVal,
    NIL_VALUE,
    NilVal,
    OpaqueVal,
    StructVal,
    TextVal,
    Value,
    conforms,
    describe_value,
    value_to_jsonable,
    values_equal,
    zero_value,
)

DEFAULT_STEP_BUDGET = 100000

TERMINAL = "terminal"


class EngineError(ValueError):
    """Instantiation-time contract violation (bad name, arity, or types)."""


class RuntimeFault(Exception):
    def __init__(self, message: str, span: Optional[SourceSpan] = None) -> None:
        super().__init__(message)
        self.message = message
        self.span = span


@dataclass(frozen=True)
class ChildTrace:
    """Trace of a nested autotuner call, attached to the enclosing record."""

    autotuner: str
    records: tuple["TransitionRecord", ...]
    outputs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TransitionRecord:
    from_state: str
    to_state: str
    timestamp_ms: int
    args: tuple = ()
    children: tuple[ChildTrace, ...] = ()

    def to_jsonable(self) -> dict:
        record: dict = {
            "kind": "transition",
            "from": self.from_state,
            "to": self.to_state,
            "timestamp_ms": self.timestamp_ms,
            "args": list(self.args),
        }
        if self.children:
            record["children"] = [
                {
                    "autotuner": child.autotuner,
                    "records": [r.to_jsonable() for r in child.records],
                    "outputs": child.outputs,
                }
                for child in self.children
            ]
        return record


@dataclass(frozen=True)
class LogEntry:
    level: str
    message: str
    timestamp_ms: int

    def to_jsonable(self) -> dict:
        return {
            "kind": "log",
            "level": self.level,
            "message": self.message,
            "timestamp_ms": self.timestamp_ms,
        }


class _Running:
    def __repr__(self) -> str:
        return "Running"


RUNNING = _Running()


@dataclass(frozen=True)
class Finished:
    outputs: dict


@dataclass(frozen=True)
class Failed:
    message: str
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class StepBudgetExceeded:
    steps: int


class _TransitionSignal(Exception):
    def __init__(self, target: str, args: Optional[tuple], span: SourceSpan) -> None:
        self.target = target
        self.call_args = args
        self.span = span


class _TerminalSignal(Exception):
    def __init__(self, span: SourceSpan) -> None:
        self.span = span


class _Scope:
    """Chained mutable scopes; assignment writes to the defining scope."""

    def __init__(self, parent: Optional["_Scope"] = None) -> None:
        self.parent = parent
        self.bindings: dict[str, Value] = {}

    def define(self, name: str, value: Value) -> None:
        self.bindings[name] = value

    def lookup(self, name: str) -> Value:
        scope: Optional[_Scope] = self
        while scope is not None:
            if name in scope.bindings:
                return scope.bindings[name]
            scope = scope.parent
        raise RuntimeFault(f"undefined name {name!r}")

    def has(self, name: str) -> bool:
        scope: Optional[_Scope] = self
        while scope is not None:
            if name in scope.bindings:
                return True
            scope = scope.parent
        return False

    def assign(self, name: str, value: Value) -> None:
        scope: Optional[_Scope] = self
        while scope is not None:
            if name in scope.bindings:
                scope.bindings[name] = value
                return
            scope = scope.parent
        raise RuntimeFault(f"assignment to undefined name {name!r}")


class CallContext:
    """Handed to host routines: the execution plus session services."""

    def __init__(self, execution: "Execution", span: SourceSpan) -> None:
        self.execution = execution
        self.span = span

    @property
    def services(self) -> dict:
        return self.execution.services

    def println(self, text: str) -> None:
        self.execution.output.append(text)

    def log(self, level: str, message: str) -> None:
        self.execution._log(level, message)

    def fault(self, message: str) -> "RuntimeFault":
        return RuntimeFault(message, self.span)

    def emit_child_trace(self, trace: ChildTrace) -> None:
        self.execution._pending_children.append(trace)

    def run_child(
        self,
        program: ast.Program,
        autotuner: str,
        args: list[Value],
        budget: int = DEFAULT_STEP_BUDGET,
    ) -> dict:
        """Run a nested autotuner to terminal and attach its trace."""
        child = instantiate(
            program,
            autotuner,
            args,
            self.execution.registry,
            services=self.execution.services,
        )
        outcome = child.run_to_terminal(budget)
        jsonable_outputs: dict = {}
        if isinstance(outcome, Finished):
            jsonable_outputs = {
                k: value_to_jsonable(v) for k, v in outcome.outputs.items()
            }
        self.emit_child_trace(
            ChildTrace(autotuner, tuple(child.trace), jsonable_outputs)
        )
        for line in child.output:
            self.execution.output.append(line)
        if isinstance(outcome, Failed):
            raise RuntimeFault(f"child autotuner {autotuner!r} failed: {outcome.message}", self.span)
        if isinstance(outcome, StepBudgetExceeded):
            raise RuntimeFault(
                f"child autotuner {autotuner!r} exceeded its step budget", self.span
            )
        return outcome.outputs


class Execution:
    """One autotuner being interpreted as a state machine."""

    def __init__(
        self,
        program: ast.Program,
        autotuner: ast.AutotunerDecl,
        registry: LibraryRegistry,
        services: Optional[dict] = None,
    ) -> None:
        self.program = program
        self.autotuner = autotuner
        self.registry = registry
        self.services = services if services is not None else {}
        self.structs = {s.name: s for s in program.structs}
        self.scope = _Scope()
        self.current_state: str = "start"
        self.pending_args: list[Value] = []
        self.trace: list[TransitionRecord] = []
        self.events: list = []
        self.output: list[str] = []
        self.status = RUNNING
        self.steps_taken = 0
        self._pending_children: list[ChildTrace] = []
        self._current_struct: Optional[StructVal] = None

    # -- clock ---------------------------------------------------------------

    def _now_ms(self) -> int:
        return time.time_ns() // 1_000_000

    def _log(self, level: str, message: str) -> None:
        self.events.append(LogEntry(level, message, self._now_ms()))

    # -- stepping ------------------------------------------------------------

    def step(self):
        """Run one state body to its transition or terminal; absorbing when done."""
        if self.status is not RUNNING:
            return self.status
        state = self.autotuner.state(self.current_state)
        if state is None:
            self.status = Failed(f"unknown state {self.current_state!r}")
            return self.status

        state_scope = _Scope(self.scope)
        if len(self.pending_args) != len(state.params):
            self.status = Failed(
                f"state {state.name!r} expected {len(state.params)} argument(s),"
                f" got {len(self.pending_args)}",
                state.span,
            )
            return self.status
        for param, value in zip(state.params, self.pending_args):
            state_scope.define(param.name, value)

        self._pending_children = []
        try:
            self._exec_block(state.body, state_scope)
        except _TransitionSignal as signal:
            try:
                args = self._bind_transition_args(signal, state_scope)
            except RuntimeFault as fault:
                self.status = Failed(fault.message, fault.span or signal.span)
                return self.status
            self._append_record(state.name, signal.target, args)
            self.current_state = signal.target
            self.steps_taken += 1
            return self.status
        except _TerminalSignal:
            self._append_record(state.name, TERMINAL, [])
            self.steps_taken += 1
            outputs = {
                ret.name: self.scope.lookup(ret.name) for ret in self.autotuner.returns
            }
            self.status = Finished(outputs)
            return self.status
        except RuntimeFault as fault:
            self.status = Failed(fault.message, fault.span)
            return self.status

        self.status = Failed(
            f"state {state.name!r} completed without a transition or terminal",
            state.span,
        )
        return self.status

    def run_to_terminal(self, max_steps: int = DEFAULT_STEP_BUDGET):
        """Step until the execution leaves Running or the budget runs out."""
        steps = 0
        while self.status is RUNNING:
            if steps >= max_steps:
                return StepBudgetExceeded(steps)
            self.step()
            steps += 1
        return self.status

    def _bind_transition_args(
        self, signal: _TransitionSignal, scope: _Scope
    ) -> list[Value]:
        target = self.autotuner.state(signal.target)
        if target is None:
            raise RuntimeFault(f"transition to unknown state {signal.target!r}", signal.span)
        if signal.call_args is None:
            bound = []
            for param in target.params:
                if not scope.has(param.name):
                    raise RuntimeFault(
                        f"cannot bind parameter {param.name!r} of state"
                        f" {signal.target!r}: name not in scope",
                        signal.span,
                    )
                bound.append(scope.lookup(param.name))
            return bound
        return list(signal.call_args)

    def _append_record(self, from_state: str, to_state: str, args: list[Value]) -> None:
        record = TransitionRecord(
            from_state=from_state,
            to_state=to_state,
            timestamp_ms=self._now_ms(),
            args=tuple(value_to_jsonable(v) for v in args),
            children=tuple(self._pending_children),
        )
        self._pending_children = []
        self.pending_args = args
        self.trace.append(record)
        self.events.append(record)

    # -- statements ----------------------------------------------------------

    def _exec_block(self, stmts, scope: _Scope) -> None:
        for stmt in stmts:
            self._exec_stmt(stmt, scope)

    def _exec_stmt(self, stmt: ast.Stmt, scope: _Scope) -> None:
        if isinstance(stmt, ast.VarDecl):
            scope.define(stmt.name, self._eval(stmt.init, scope))
        elif isinstance(stmt, ast.Assign):
            value = self._eval(stmt.value, scope)
            self._assign(stmt.target, value, scope)
        elif isinstance(stmt, ast.ExprStmt):
            self._eval(stmt.expr, scope, allow_void=True)
        elif isinstance(stmt, ast.Transition):
            args = None
            if stmt.args is not None:
                args = tuple(self._eval(arg, scope) for arg in stmt.args)
            raise _TransitionSignal(stmt.target, args, stmt.span)
        elif isinstance(stmt, ast.Terminal):
            raise _TerminalSignal(stmt.span)
        elif isinstance(stmt, ast.IfChain):
            for condition, block in zip(stmt.conditions, stmt.blocks):
                test = self._eval(condition, scope)
                if not isinstance(test, BoolVal):
                    raise RuntimeFault(
                        f"condition evaluated to {describe_value(test)}, not bool",
                        condition.span,
                    )
                if test.value:
                    self._exec_block(block, scope)
                    return
            if stmt.else_block is not None:
                self._exec_block(stmt.else_block, scope)
        else:  # pragma: no cover - parser produces no other nodes
            raise RuntimeFault(f"unknown statement {stmt!r}", stmt.span)

    def _assign(self, target: ast.Expr, value: Value, scope: _Scope) -> None:
        if isinstance(target, ast.Ident):
            if scope.has(target.name):
                scope.assign(target.name, value)
            elif (
                self._current_struct is not None
                and target.name in self._current_struct.fields
            ):
                self._current_struct.fields[target.name] = value
            else:
                raise RuntimeFault(
                    f"assignment to undefined name {target.name!r}", target.span
                )
            return
        if isinstance(target, ast.FieldAccess):
            base = self._eval(target.base, scope)
            if isinstance(base, NilVal):
                raise RuntimeFault("field assignment on nil", target.span)
            if not isinstance(base, StructVal):
                raise RuntimeFault(
                    f"field assignment requires a struct, found {describe_value(base)}",
                    target.span,
                )
            if target.field_name not in base.fields:
                raise RuntimeFault(
                    f"struct {base.decl.name!r} has no field {target.field_name!r}",
                    target.span,
                )
            base.fields[target.field_name] = value
            return
        raise RuntimeFault("invalid assignment target", target.span)

    # -- expressions ---------------------------------------------------------

    def _eval(self, expr: ast.Expr, scope: _Scope, allow_void: bool = False) -> Value:
        result = self._eval_inner(expr, scope)
        if result is None:
            if allow_void:
                return NIL_VALUE
            raise RuntimeFault("call produced no value", expr.span)
        return result

    def _eval_inner(self, expr: ast.Expr, scope: _Scope) -> Optional[Value]:
        if isinstance(expr, ast.IntLit):
            try:
                return IntVal(expr.value)
            except IntOverflow as exc:
                raise RuntimeFault(str(exc), expr.span)
        if isinstance(expr, ast.StringLit):
            return TextVal(expr.value)
        if isinstance(expr, ast.NilLit):
            return NIL_VALUE
        if isinstance(expr, ast.Ident):
            if scope.has(expr.name):
                return scope.lookup(expr.name)
            if (
                self._current_struct is not None
                and expr.name in self._current_struct.fields
            ):
                return self._current_struct.fields[expr.name]
            raise RuntimeFault(f"undefined name {expr.name!r}", expr.span)
        if isinstance(expr, ast.ThisExpr):
            if self._current_struct is None:
                raise RuntimeFault("'this' outside a struct routine", expr.span)
            return self._current_struct
        if isinstance(expr, ast.FieldAccess):
            base = self._eval(expr.base, scope)
            if isinstance(base, NilVal):
                raise RuntimeFault("field access on nil", expr.span)
            if not isinstance(base, StructVal):
                raise RuntimeFault(
                    f"field access requires a struct, found {describe_value(base)}",
                    expr.span,
                )
            if expr.field_name not in base.fields:
                raise RuntimeFault(
                    f"struct {base.decl.name!r} has no field {expr.field_name!r}",
                    expr.span,
                )
            return base.fields[expr.field_name]
        if isinstance(expr, ast.IndexExpr):
            return self._eval_index(expr, scope)
        if isinstance(expr, ast.MethodCall):
            return self._eval_method(expr, scope)
        if isinstance(expr, ast.QualifiedCall):
            return self._eval_qualified(expr, scope)
        if isinstance(expr, ast.ErrorCtor):
            message = self._eval(expr.message, scope)
            if not isinstance(message, TextVal):
                raise RuntimeFault(
                    f"Error message must be string, found {describe_value(message)}",
                    expr.span,
                )
            return ErrorVal(message.value)
        if isinstance(expr, ast.BinaryOp):
            return self._eval_binary(expr, scope)
        if isinstance(expr, ast.UnaryOp):
            operand = self._eval(expr.operand, scope)
            if not isinstance(operand, BoolVal):
                raise RuntimeFault(
                    f"'!' requires bool, found {describe_value(operand)}", expr.span
                )
            return BoolVal(not operand.value)
        raise RuntimeFault(f"unknown expression {expr!r}", expr.span)

    def _eval_index(self, expr: ast.IndexExpr, scope: _Scope) -> Value:
        base = self._eval(expr.base, scope)
        index = self._eval(expr.index, scope)
        if not isinstance(base, ArrayVal):
            raise RuntimeFault(
                f"indexing requires an array, found {describe_value(base)}", expr.span
            )
        if not isinstance(index, IntVal):
            raise RuntimeFault(
                f"index must be int, found {describe_value(index)}", expr.span
            )
        size = base.size()
        if size == 0:
            raise RuntimeFault("index out of range: array is empty", expr.span)
        # Out-of-range indexes clamp to the nearest valid element.
        clamped = min(max(index.value, 0), size - 1)
        return base.elements[clamped]

    def _eval_method(self, expr: ast.MethodCall, scope: _Scope) -> Optional[Value]:
        base = self._eval(expr.base, scope)
        if isinstance(base, NilVal):
            raise RuntimeFault(f"method call {expr.method!r} on nil", expr.span)
        args = [self._eval(arg, scope) for arg in expr.args]

        if isinstance(base, ArrayVal):
            if expr.method == "Size":
                if args:
                    raise RuntimeFault("Size takes no arguments", expr.span)
                return IntVal(base.size())
            if expr.method == "Contains":
                if len(args) != 1:
                    raise RuntimeFault("Contains takes one argument", expr.span)
                return BoolVal(
                    any(values_equal(element, args[0]) for element in base.elements)
                )
            raise RuntimeFault(f"arrays have no method {expr.method!r}", expr.span)

        if isinstance(base, StructVal):
            routine = None
            for candidate in base.decl.routines:
                if candidate.name == expr.method:
                    routine = candidate
                    break
            if routine is None:
                raise RuntimeFault(
                    f"struct {base.decl.name!r} has no routine {expr.method!r}",
                    expr.span,
                )
            return self._call_struct_routine(base, routine, args, expr.span)

        if isinstance(base, OpaqueVal):
            method = self.registry.method(base.library, base.type_name, expr.method)
            if method is None:
                raise RuntimeFault(
                    f"{base.library}::{base.type_name} has no method {expr.method!r}",
                    expr.span,
                )
            context = CallContext(self, expr.span)
            result = method.impl(context, base, *args)
            return result

        raise RuntimeFault(
            f"method call on {describe_value(base)} value", expr.span
        )

    def _call_struct_routine(
        self,
        instance: StructVal,
        routine: ast.RoutineDecl,
        args: list[Value],
        span: SourceSpan,
    ) -> Optional[Value]:
        if len(args) != len(routine.params):
            raise RuntimeFault(
                f"routine {routine.name!r} expects {len(routine.params)}"
                f" argument(s), got {len(args)}",
                span,
            )
        routine_scope = _Scope()
        for param, value in zip(routine.params, args):
            routine_scope.define(param.name, value)
        for ret in routine.returns:
            routine_scope.define(ret.name, zero_value(ret.type, self.structs))
        previous = self._current_struct
        self._current_struct = instance
        try:
            self._exec_block(routine.body, routine_scope)
        finally:
            self._current_struct = previous
        if len(routine.returns) == 1:
            return routine_scope.lookup(routine.returns[0].name)
        if len(routine.returns) == 0:
            return None
        return None

    def _eval_qualified(self, expr: ast.QualifiedCall, scope: _Scope) -> Optional[Value]:
        routine = self.registry.routine(expr.library, expr.routine)
        if routine is None:
            raise RuntimeFault(
                f"no routine {expr.library}::{expr.routine} is registered", expr.span
            )
        args = [self._eval(arg, scope) for arg in expr.args]
        if len(args) != len(routine.params):
            raise RuntimeFault(
                f"{expr.library}::{expr.routine} expects {len(routine.params)}"
                f" argument(s), got {len(args)}",
                expr.span,
            )
        context = CallContext(self, expr.span)
        result = routine.impl(context, *args)
        if result is None:
            return None
        if isinstance(result, tuple):
            if len(result) == 0:
                return None
            if len(result) == 1:
                return result[0]
            raise RuntimeFault(
                f"{expr.library}::{expr.routine} returned multiple values in an"
                " expression context",
                expr.span,
            )
        return result

    def _eval_binary(self, expr: ast.BinaryOp, scope: _Scope) -> Value:
        left = self._eval(expr.left, scope)
        right = self._eval(expr.right, scope)
        op = expr.op
        if op == "+":
            if isinstance(left, IntVal) and isinstance(right, IntVal):
                try:
                    return IntVal(left.value + right.value)
                except IntOverflow:
                    raise RuntimeFault("integer overflow in '+'", expr.span)
            if isinstance(left, TextVal) and isinstance(right, TextVal):
                return TextVal(left.value + right.value)
            raise RuntimeFault(
                f"'+' requires two ints or two strings, found"
                f" {describe_value(left)} and {describe_value(right)}",
                expr.span,
            )
        if op in ("<", ">"):
            if not (isinstance(left, IntVal) and isinstance(right, IntVal)):
                raise RuntimeFault(
                    f"{op!r} requires ints, found {describe_value(left)}"
                    f" and {describe_value(right)}",
                    expr.span,
                )
            if op == "<":
                return BoolVal(left.value < right.value)
            return BoolVal(left.value > right.value)
        if op == "==":
            return BoolVal(values_equal(left, right))
        if op == "!=":
            return BoolVal(not values_equal(left, right))
        raise RuntimeFault(f"unknown operator {op!r}", expr.span)

    # -- trace persistence ---------------------------------------------------

    def trace_jsonable(self) -> list[dict]:
        """The ordered event stream (transitions and log entries) as dicts."""
        return [event.to_jsonable() for event in self.events]


def instantiate(
    program: ast.Program,
    autotuner: str,
    args: list[Value],
    registry: LibraryRegistry,
    services: Optional[dict] = None,
) -> Execution:
    """Create an execution: bind arguments, run initializers, take start.

    Raises EngineError for an unknown autotuner or an argument list that does
    not match the declared parameters; initializer runtime faults mark the
    execution Failed instead of raising.
    """
    decl = program.autotuner(autotuner)
    if decl is None:
        raise EngineError(f"program has no autotuner {autotuner!r}")
    if len(args) != len(decl.params):
        raise EngineError(
            f"autotuner {autotuner!r} expects {len(decl.params)} argument(s),"
            f" got {len(args)}"
        )
    execution = Execution(program, decl, registry, services)
    for param, value in zip(decl.params, args):
        if not conforms(value, param.type):
            raise EngineError(
                f"argument {param.name!r} of {autotuner!r} expects"
                f" a different type, got {describe_value(value)}"
            )
        execution.scope.define(param.name, value)
    for ret in decl.returns:
        execution.scope.define(ret.name, zero_value(ret.type, execution.structs))

    registry.freeze()

    execution.current_state = decl.start.target
    try:
        execution._exec_block(decl.initializers, execution.scope)
        if decl.start.args is None:
            signal = _TransitionSignal(decl.start.target, None, decl.start.span)
            execution.pending_args = execution._bind_transition_args(
                signal, execution.scope
            )
        else:
            execution.pending_args = [
                execution._eval(arg, execution.scope) for arg in decl.start.args
            ]
    except RuntimeFault as fault:
        execution.status = Failed(fault.message, fault.span)
    return execution


def register_program_autotuners(
    registry: LibraryRegistry, program: ast.Program, library: str
) -> None:
    """Expose a program's autotuners as callable library autotuners.

    Each autotuner in ``program`` becomes ``library::Name(...)``; calling one
    runs it synchronously to terminal and nests its trace in the caller's
    current transition record.
    """

    def make_impl(name: str) -> Callable:
        def impl(context: CallContext, *call_args: Value):
            outputs = context.run_child(program, name, list(call_args))
            decl = program.autotuner(name)
            if len(decl.returns) == 1:
                return outputs[decl.returns[0].name]
            if len(decl.returns) == 0:
                return None
            return tuple(outputs[ret.name] for ret in decl.returns)

        return impl

    for decl in program.autotuners:
        registry.register_routine(
            library,
            HostRoutine(
                name=decl.name,
                params=tuple(p.type for p in decl.params),
                returns=tuple(r.type for r in decl.returns),
                impl=make_impl(decl.name),
                kind="autotuner",
            ),
        )
