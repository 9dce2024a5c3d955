"""Typed AST for the autotuner language.

Spans never participate in equality, so two parses of structurally identical
source compare equal regardless of layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from falcon.dsl.diagnostics import SourceSpan

_NOSPAN = SourceSpan.point(0, 0)


def _span_field():
    return field(default=_NOSPAN, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class IntType:
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class StringType:
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class BoolType:
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class ErrorType:
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class StructType:
    """Reference to a struct declared in the same program."""

    name: str
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class LibType:
    """Qualified library type such as config::Config."""

    library: str
    name: str
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class GenericType:
    """Generic library type application such as array::Array<T>."""

    base: LibType
    arg: "TypeExpr"
    span: SourceSpan = _span_field()


TypeExpr = Union[IntType, StringType, BoolType, ErrorType, StructType, LibType, GenericType]


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class IntLit:
    value: int
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class StringLit:
    value: str
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class NilLit:
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class Ident:
    name: str
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class ThisExpr:
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class FieldAccess:
    base: "Expr"
    field_name: str
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class IndexExpr:
    base: "Expr"
    index: "Expr"
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class QualifiedCall:
    """Call into an imported library: lib::routine(args)."""

    library: str
    routine: str
    args: tuple["Expr", ...]
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class MethodCall:
    base: "Expr"
    method: str
    args: tuple["Expr", ...]
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class ErrorCtor:
    message: "Expr"
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class BinaryOp:
    op: str  # one of + == != <
    left: "Expr"
    right: "Expr"
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class UnaryOp:
    op: str  # !
    operand: "Expr"
    span: SourceSpan = _span_field()


Expr = Union[
    IntLit,
    StringLit,
    NilLit,
    Ident,
    ThisExpr,
    FieldAccess,
    IndexExpr,
    QualifiedCall,
    MethodCall,
    ErrorCtor,
    BinaryOp,
    UnaryOp,
]


# ---------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class VarDecl:
    type: TypeExpr
    name: str
    init: Expr
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class Assign:
    target: Expr  # Ident or FieldAccess
    value: Expr
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class Transition:
    """Transfer of control to another state.

    ``args`` is None when the source omitted parentheses entirely; the target
    state's parameters are then bound by name from the surrounding scope. An
    explicit empty ``()`` is the empty tuple.
    """

    target: str
    args: Optional[tuple[Expr, ...]]
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class Terminal:
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class IfChain:
    """if/elif/else with parallel condition and block lists."""

    conditions: tuple[Expr, ...]
    blocks: tuple[tuple["Stmt", ...], ...]
    else_block: Optional[tuple["Stmt", ...]]
    span: SourceSpan = _span_field()


Stmt = Union[VarDecl, Assign, ExprStmt, Transition, Terminal, IfChain]


# ---------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class Param:
    type: TypeExpr
    name: str
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class FieldDecl:
    type: TypeExpr
    name: str
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class RoutineDecl:
    name: str
    params: tuple[Param, ...]
    returns: tuple[Param, ...]
    body: tuple[Stmt, ...]
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class StructDecl:
    name: str
    fields: tuple[FieldDecl, ...]
    routines: tuple[RoutineDecl, ...]
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class StartDecl:
    """The unique start transition of an autotuner."""

    target: str
    args: Optional[tuple[Expr, ...]]
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class StateDecl:
    name: str
    params: tuple[Param, ...]
    body: tuple[Stmt, ...]
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class AutotunerDecl:
    name: str
    params: tuple[Param, ...]
    returns: tuple[Param, ...]
    initializers: tuple[Stmt, ...]
    start: StartDecl
    states: tuple[StateDecl, ...]
    span: SourceSpan = _span_field()

    def state(self, name: str) -> Optional[StateDecl]:
        for state in self.states:
            if state.name == name:
                return state
        return None


@dataclass(frozen=True)
class Program:
    imports: tuple[str, ...]
    structs: tuple[StructDecl, ...]
    autotuners: tuple[AutotunerDecl, ...]
    span: SourceSpan = _span_field()
    #: Spans of the import names, parallel to ``imports`` when produced by the
    #: parser; purely diagnostic and excluded from equality.
    import_spans: tuple[SourceSpan, ...] = field(default=(), compare=False, repr=False)

    def struct(self, name: str) -> Optional[StructDecl]:
        for struct in self.structs:
            if struct.name == name:
                return struct
        return None

    def autotuner(self, name: str) -> Optional[AutotunerDecl]:
        for autotuner in self.autotuners:
            if autotuner.name == name:
                return autotuner
        return None
