"""Canonical source renderer for the autotuner language.

One statement per line, four-space indentation, minimal parentheses. The
renderer is a structural inverse of the parser: reparsing formatted output
yields an equal AST, and formatting is idempotent.
"""

from __future__ import annotations

from falcon.dsl import ast

_INDENT = "    "

# Binding strength, loosest first. Higher binds tighter.
_PREC_EQUALITY = 1
_PREC_RELATIONAL = 2
_PREC_ADDITIVE = 3
_PREC_UNARY = 4
_PREC_POSTFIX = 5

_BINARY_PREC = {
    "==": _PREC_EQUALITY,
    "!=": _PREC_EQUALITY,
    "<": _PREC_RELATIONAL,
    ">": _PREC_RELATIONAL,
    "+": _PREC_ADDITIVE,
}

_STRING_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def _quote(text: str) -> str:
    return '"' + "".join(_STRING_ESCAPES.get(ch, ch) for ch in text) + '"'


def format_type(type_expr: ast.TypeExpr) -> str:
    if isinstance(type_expr, ast.IntType):
        return "int"
    if isinstance(type_expr, ast.StringType):
        return "string"
    if isinstance(type_expr, ast.BoolType):
        return "bool"
    if isinstance(type_expr, ast.ErrorType):
        return "Error"
    if isinstance(type_expr, ast.StructType):
        return type_expr.name
    if isinstance(type_expr, ast.LibType):
        return f"{type_expr.library}::{type_expr.name}"
    if isinstance(type_expr, ast.GenericType):
        return f"{format_type(type_expr.base)}<{format_type(type_expr.arg)}>"
    raise TypeError(f"unknown type node: {type_expr!r}")


def format_expr(expr: ast.Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, ast.IntLit):
        return str(expr.value)
    if isinstance(expr, ast.StringLit):
        return _quote(expr.value)
    if isinstance(expr, ast.NilLit):
        return "nil"
    if isinstance(expr, ast.Ident):
        return expr.name
    if isinstance(expr, ast.ThisExpr):
        return "this"
    if isinstance(expr, ast.FieldAccess):
        return f"{format_expr(expr.base, _PREC_POSTFIX)}.{expr.field_name}"
    if isinstance(expr, ast.IndexExpr):
        return f"{format_expr(expr.base, _PREC_POSTFIX)}[{format_expr(expr.index)}]"
    if isinstance(expr, ast.MethodCall):
        args = ", ".join(format_expr(arg) for arg in expr.args)
        return f"{format_expr(expr.base, _PREC_POSTFIX)}.{expr.method}({args})"
    if isinstance(expr, ast.QualifiedCall):
        args = ", ".join(format_expr(arg) for arg in expr.args)
        return f"{expr.library}::{expr.routine}({args})"
    if isinstance(expr, ast.ErrorCtor):
        return f"Error({format_expr(expr.message)})"
    if isinstance(expr, ast.UnaryOp):
        rendered = f"!{format_expr(expr.operand, _PREC_UNARY)}"
        return f"({rendered})" if parent_prec > _PREC_UNARY else rendered
    if isinstance(expr, ast.BinaryOp):
        prec = _BINARY_PREC[expr.op]
        left = format_expr(expr.left, prec)
        right = format_expr(expr.right, prec + 1)
        rendered = f"{left} {expr.op} {right}"
        return f"({rendered})" if parent_prec > prec else rendered
    raise TypeError(f"unknown expression node: {expr!r}")


def _format_args(args: tuple[ast.Expr, ...] | None) -> str:
    if args is None:
        return ""
    return "(" + ", ".join(format_expr(arg) for arg in args) + ")"


def _format_params(params: tuple[ast.Param, ...]) -> str:
    return ", ".join(f"{format_type(p.type)} {p.name}" for p in params)


def _format_stmt(stmt: ast.Stmt, depth: int, out: list[str]) -> None:
    pad = _INDENT * depth
    if isinstance(stmt, ast.VarDecl):
        out.append(f"{pad}{format_type(stmt.type)} {stmt.name} = {format_expr(stmt.init)};")
    elif isinstance(stmt, ast.Assign):
        out.append(f"{pad}{format_expr(stmt.target)} = {format_expr(stmt.value)};")
    elif isinstance(stmt, ast.ExprStmt):
        out.append(f"{pad}{format_expr(stmt.expr)};")
    elif isinstance(stmt, ast.Transition):
        out.append(f"{pad}-> {stmt.target}{_format_args(stmt.args)};")
    elif isinstance(stmt, ast.Terminal):
        out.append(f"{pad}terminal;")
    elif isinstance(stmt, ast.IfChain):
        for i, (condition, block) in enumerate(zip(stmt.conditions, stmt.blocks)):
            head = "if" if i == 0 else "} elif"
            out.append(f"{pad}{head} ({format_expr(condition)}) {{")
            for inner in block:
                _format_stmt(inner, depth + 1, out)
        if stmt.else_block is not None:
            out.append(f"{pad}}} else {{")
            for inner in stmt.else_block:
                _format_stmt(inner, depth + 1, out)
        out.append(f"{pad}}}")
    else:
        raise TypeError(f"unknown statement node: {stmt!r}")


def _format_block(stmts: tuple[ast.Stmt, ...], depth: int, out: list[str]) -> None:
    for stmt in stmts:
        _format_stmt(stmt, depth, out)


def format_program(program: ast.Program) -> str:
    """Render a Program in canonical style; the empty program renders empty."""
    sections: list[str] = []

    if program.imports:
        quoted = " ".join(_quote(name) for name in program.imports)
        sections.append(f"import ({quoted})")

    for struct in program.structs:
        lines = [f"struct {struct.name} {{"]
        for field_decl in struct.fields:
            lines.append(f"{_INDENT}{format_type(field_decl.type)} {field_decl.name};")
        for routine in struct.routines:
            lines.append(
                f"{_INDENT}routine {routine.name}({_format_params(routine.params)})"
                f" -> ({_format_params(routine.returns)}) {{"
            )
            _format_block(routine.body, 2, lines)
            lines.append(f"{_INDENT}}}")
        lines.append("}")
        sections.append("\n".join(lines))

    for autotuner in program.autotuners:
        lines = [
            f"autotuner {autotuner.name} ({_format_params(autotuner.params)})"
            f" -> ({_format_params(autotuner.returns)}) {{"
        ]
        _format_block(autotuner.initializers, 1, lines)
        start_args = _format_args(autotuner.start.args)
        if start_args:
            start_args = " " + start_args
        lines.append(f"{_INDENT}start -> {autotuner.start.target}{start_args};")
        for state in autotuner.states:
            params = f" ({_format_params(state.params)})" if state.params else ""
            lines.append(f"{_INDENT}state {state.name}{params} {{")
            _format_block(state.body, 2, lines)
            lines.append(f"{_INDENT}}}")
        lines.append("}")
        sections.append("\n".join(lines))

    if not sections:
        return ""
    return "\n\n".join(sections) + "\n"
