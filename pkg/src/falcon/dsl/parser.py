"""Recursive-descent parser producing the typed AST.

The parser stops at the first syntax error and reports it with a span and an
expected-token hint; lexical errors surface the same way without attempting a
parse on a broken token stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from falcon.dsl import ast
from falcon.dsl.diagnostics import Diagnostic, SourceSpan
from falcon.dsl.tokens import Token, TokenKind, tokenize


@dataclass(frozen=True)
class ParseResult:
    program: Optional[ast.Program]
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.program is not None and not any(d.is_error for d in self.diagnostics)


class _ParseError(Exception):
    def __init__(self, diagnostic: Diagnostic) -> None:
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing -----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind is not TokenKind.EOF:
            self.pos += 1
        return token

    def at(self, lexeme: str) -> bool:
        token = self.peek()
        return token.kind is not TokenKind.EOF and token.lexeme == lexeme

    def error(self, message: str, token: Token | None = None) -> _ParseError:
        token = token or self.peek()
        found = repr(token.lexeme) if token.kind is not TokenKind.EOF else "end of input"
        return _ParseError(
            Diagnostic("syntax", f"{message}, found {found}", token.span)
        )

    def expect(self, lexeme: str, context: str) -> Token:
        if not self.at(lexeme):
            raise self.error(f"expected {lexeme!r} {context}")
        return self.advance()

    def expect_ident(self, context: str) -> Token:
        token = self.peek()
        if token.kind is not TokenKind.IDENT:
            raise self.error(f"expected identifier {context}")
        return self.advance()

    # -- program ------------------------------------------------------------

    def parse_program(self) -> ast.Program:
        imports: list[str] = []
        import_spans: list[SourceSpan] = []
        structs: list[ast.StructDecl] = []
        autotuners: list[ast.AutotunerDecl] = []
        first = self.peek().span
        while self.peek().kind is not TokenKind.EOF:
            token = self.peek()
            if token.lexeme == "import":
                for name, span in self.parse_import_block():
                    imports.append(name)
                    import_spans.append(span)
            elif token.lexeme == "struct":
                structs.append(self.parse_struct())
            elif token.lexeme == "autotuner":
                autotuners.append(self.parse_autotuner())
            else:
                raise self.error("expected 'import', 'struct', or 'autotuner'")
        return ast.Program(
            imports=tuple(imports),
            structs=tuple(structs),
            autotuners=tuple(autotuners),
            span=first,
            import_spans=tuple(import_spans),
        )

    def parse_import_block(self) -> list[tuple[str, SourceSpan]]:
        self.expect("import", "to open an import block")
        self.expect("(", "after 'import'")
        names: list[tuple[str, SourceSpan]] = []
        while not self.at(")"):
            token = self.peek()
            if token.kind is not TokenKind.STRING:
                raise self.error("expected a quoted library name in import block")
            names.append((token.text, token.span))
            self.advance()
        self.expect(")", "to close the import block")
        return names

    # -- declarations -------------------------------------------------------

    def parse_struct(self) -> ast.StructDecl:
        keyword = self.expect("struct", "to open a struct")
        name = self.expect_ident("after 'struct'")
        self.expect("{", "to open the struct body")
        fields: list[ast.FieldDecl] = []
        routines: list[ast.RoutineDecl] = []
        while not self.at("}"):
            if self.at("routine"):
                routines.append(self.parse_routine())
            else:
                field_type = self.parse_type()
                field_name = self.expect_ident("after field type")
                self.expect(";", "after field declaration")
                fields.append(
                    ast.FieldDecl(field_type, field_name.lexeme, span=field_name.span)
                )
        self.expect("}", "to close the struct body")
        return ast.StructDecl(
            name=name.lexeme,
            fields=tuple(fields),
            routines=tuple(routines),
            span=keyword.span,
        )

    def parse_routine(self) -> ast.RoutineDecl:
        keyword = self.expect("routine", "to open a routine")
        name = self.expect_ident("after 'routine'")
        params = self.parse_param_list("routine parameters")
        self.expect("->", "between routine parameters and returns")
        returns = self.parse_param_list("routine returns")
        body = self.parse_block()
        return ast.RoutineDecl(
            name=name.lexeme,
            params=params,
            returns=returns,
            body=body,
            span=keyword.span,
        )

    def parse_autotuner(self) -> ast.AutotunerDecl:
        keyword = self.expect("autotuner", "to open an autotuner")
        name = self.expect_ident("after 'autotuner'")
        params = self.parse_param_list("autotuner parameters")
        self.expect("->", "between autotuner parameters and returns")
        returns = self.parse_param_list("autotuner returns")
        self.expect("{", "to open the autotuner body")
        initializers: list[ast.Stmt] = []
        while not self.at("start"):
            if self.at("}") or self.peek().kind is TokenKind.EOF:
                raise self.error("expected a 'start' transition in the autotuner body")
            initializers.append(self.parse_stmt())
        start = self.parse_start()
        states: list[ast.StateDecl] = []
        while self.at("state"):
            states.append(self.parse_state())
        self.expect("}", "to close the autotuner body")
        return ast.AutotunerDecl(
            name=name.lexeme,
            params=params,
            returns=returns,
            initializers=tuple(initializers),
            start=start,
            states=tuple(states),
            span=keyword.span,
        )

    def parse_start(self) -> ast.StartDecl:
        keyword = self.expect("start", "to open the start transition")
        self.expect("->", "after 'start'")
        target = self.expect_ident("as the start target")
        args = self.parse_optional_args()
        self.expect(";", "after the start transition")
        return ast.StartDecl(target=target.lexeme, args=args, span=keyword.span)

    def parse_state(self) -> ast.StateDecl:
        keyword = self.expect("state", "to open a state")
        name = self.expect_ident("after 'state'")
        params: tuple[ast.Param, ...] = ()
        if self.at("("):
            params = self.parse_param_list("state parameters")
        body = self.parse_block()
        return ast.StateDecl(name=name.lexeme, params=params, body=body, span=keyword.span)

    def parse_param_list(self, context: str) -> tuple[ast.Param, ...]:
        self.expect("(", f"to open {context}")
        params: list[ast.Param] = []
        if not self.at(")"):
            while True:
                param_type = self.parse_type()
                param_name = self.expect_ident("after parameter type")
                params.append(
                    ast.Param(param_type, param_name.lexeme, span=param_name.span)
                )
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(")", f"to close {context}")
        return tuple(params)

    # -- types --------------------------------------------------------------

    def parse_type(self) -> ast.TypeExpr:
        token = self.peek()
        if token.lexeme == "int":
            self.advance()
            return ast.IntType(span=token.span)
        if token.lexeme == "string":
            self.advance()
            return ast.StringType(span=token.span)
        if token.lexeme == "bool":
            self.advance()
            return ast.BoolType(span=token.span)
        if token.lexeme == "Error":
            self.advance()
            return ast.ErrorType(span=token.span)
        if token.kind is TokenKind.IDENT:
            first = self.advance()
            if self.at("::"):
                self.advance()
                second = self.expect_ident("after '::' in a type")
                base = ast.LibType(first.lexeme, second.lexeme, span=first.span)
                if self.at("<"):
                    self.advance()
                    arg = self.parse_type()
                    self.expect(">", "to close the generic type argument")
                    return ast.GenericType(base=base, arg=arg, span=first.span)
                return base
            return ast.StructType(first.lexeme, span=first.span)
        raise self.error("expected a type")

    # -- statements ---------------------------------------------------------

    def parse_block(self) -> tuple[ast.Stmt, ...]:
        self.expect("{", "to open a block")
        stmts: list[ast.Stmt] = []
        while not self.at("}"):
            if self.peek().kind is TokenKind.EOF:
                raise self.error("expected '}' to close a block")
            stmts.append(self.parse_stmt())
        self.expect("}", "to close a block")
        return tuple(stmts)

    def parse_stmt(self) -> ast.Stmt:
        token = self.peek()

        if token.lexeme == "->":
            return self.parse_transition()
        if token.lexeme == "terminal":
            self.advance()
            self.expect(";", "after 'terminal'")
            return ast.Terminal(span=token.span)
        if token.lexeme == "if":
            return self.parse_if_chain()
        if self.looks_like_var_decl():
            return self.parse_var_decl()

        expr = self.parse_expr()
        if self.at("="):
            if not isinstance(expr, (ast.Ident, ast.FieldAccess)):
                raise self.error("assignment target must be a name or field")
            self.advance()
            value = self.parse_expr()
            self.expect(";", "after assignment")
            return ast.Assign(target=expr, value=value, span=token.span)
        self.expect(";", "after expression statement")
        return ast.ExprStmt(expr=expr, span=token.span)

    def looks_like_var_decl(self) -> bool:
        token = self.peek()
        if token.lexeme in ("int", "string", "bool"):
            return True
        if token.lexeme == "Error":
            # `Error name = ...` declares; `Error(...)` constructs.
            return self.peek(1).kind is TokenKind.IDENT
        if token.kind is TokenKind.IDENT:
            after = self.peek(1)
            if after.kind is TokenKind.IDENT:
                return True  # StructName local = ...
            if after.lexeme == "::":
                # lib::Type name / lib::Type<T> name vs lib::routine(...)
                third = self.peek(2)
                if third.kind is TokenKind.IDENT:
                    fourth = self.peek(3)
                    return fourth.kind is TokenKind.IDENT or fourth.lexeme == "<"
        return False

    def parse_var_decl(self) -> ast.VarDecl:
        start = self.peek()
        decl_type = self.parse_type()
        name = self.expect_ident("after type in declaration")
        self.expect("=", "after declared name (initializer is required)")
        init = self.parse_expr()
        self.expect(";", "after declaration")
        return ast.VarDecl(type=decl_type, name=name.lexeme, init=init, span=start.span)

    def parse_transition(self) -> ast.Transition:
        arrow = self.expect("->", "to open a transition")
        target = self.expect_ident("as the transition target")
        args = self.parse_optional_args()
        self.expect(";", "after transition")
        return ast.Transition(target=target.lexeme, args=args, span=arrow.span)

    def parse_optional_args(self) -> Optional[tuple[ast.Expr, ...]]:
        if not self.at("("):
            return None
        self.advance()
        args: list[ast.Expr] = []
        if not self.at(")"):
            while True:
                args.append(self.parse_expr())
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(")", "to close the argument list")
        return tuple(args)

    def parse_if_chain(self) -> ast.IfChain:
        keyword = self.expect("if", "to open an if chain")
        conditions: list[ast.Expr] = []
        blocks: list[tuple[ast.Stmt, ...]] = []
        self.expect("(", "after 'if'")
        conditions.append(self.parse_expr())
        self.expect(")", "to close the if condition")
        blocks.append(self.parse_block())
        while self.at("elif"):
            self.advance()
            self.expect("(", "after 'elif'")
            conditions.append(self.parse_expr())
            self.expect(")", "to close the elif condition")
            blocks.append(self.parse_block())
        else_block: Optional[tuple[ast.Stmt, ...]] = None
        if self.at("else"):
            self.advance()
            else_block = self.parse_block()
        return ast.IfChain(
            conditions=tuple(conditions),
            blocks=tuple(blocks),
            else_block=else_block,
            span=keyword.span,
        )

    # -- expressions --------------------------------------------------------

    def parse_expr(self) -> ast.Expr:
        return self.parse_equality()

    def parse_equality(self) -> ast.Expr:
        left = self.parse_relational()
        while self.at("==") or self.at("!="):
            op = self.advance()
            right = self.parse_relational()
            left = ast.BinaryOp(op=op.lexeme, left=left, right=right, span=op.span)
        return left

    def parse_relational(self) -> ast.Expr:
        left = self.parse_additive()
        while self.at("<") or self.at(">"):
            op = self.advance()
            right = self.parse_additive()
            left = ast.BinaryOp(op=op.lexeme, left=left, right=right, span=op.span)
        return left

    def parse_additive(self) -> ast.Expr:
        left = self.parse_unary()
        while self.at("+"):
            op = self.advance()
            right = self.parse_unary()
            left = ast.BinaryOp(op=op.lexeme, left=left, right=right, span=op.span)
        return left

    def parse_unary(self) -> ast.Expr:
        if self.at("!"):
            op = self.advance()
            operand = self.parse_unary()
            return ast.UnaryOp(op="!", operand=operand, span=op.span)
        return self.parse_postfix()

    def parse_postfix(self) -> ast.Expr:
        expr = self.parse_primary()
        while True:
            if self.at("."):
                self.advance()
                member = self.expect_ident("after '.'")
                if self.at("("):
                    args = self.parse_optional_args() or ()
                    expr = ast.MethodCall(
                        base=expr, method=member.lexeme, args=args, span=member.span
                    )
                else:
                    expr = ast.FieldAccess(
                        base=expr, field_name=member.lexeme, span=member.span
                    )
                continue
            if self.at("["):
                bracket = self.advance()
                index = self.parse_expr()
                self.expect("]", "to close the index")
                expr = ast.IndexExpr(base=expr, index=index, span=bracket.span)
                continue
            break
        return expr

    def parse_primary(self) -> ast.Expr:
        token = self.peek()
        if token.kind is TokenKind.INT:
            self.advance()
            return ast.IntLit(int(token.lexeme), span=token.span)
        if token.kind is TokenKind.STRING:
            self.advance()
            return ast.StringLit(token.text, span=token.span)
        if token.lexeme == "nil":
            self.advance()
            return ast.NilLit(span=token.span)
        if token.lexeme == "this":
            self.advance()
            return ast.ThisExpr(span=token.span)
        if token.lexeme == "Error":
            self.advance()
            self.expect("(", "after 'Error'")
            message = self.parse_expr()
            self.expect(")", "to close the Error constructor")
            return ast.ErrorCtor(message=message, span=token.span)
        if token.lexeme == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect(")", "to close the parenthesized expression")
            return inner
        if token.kind is TokenKind.IDENT:
            self.advance()
            if self.at("::"):
                self.advance()
                routine = self.expect_ident("after '::'")
                if not self.at("("):
                    raise self.error("expected '(' to call a library routine")
                args = self.parse_optional_args() or ()
                return ast.QualifiedCall(
                    library=token.lexeme, routine=routine.lexeme, args=args, span=token.span
                )
            if self.at("("):
                raise self.error(
                    f"unqualified call to {token.lexeme!r} is not supported"
                    " (calls use lib::routine or value.Method)",
                    token,
                )
            return ast.Ident(token.lexeme, span=token.span)
        raise self.error("expected an expression")


def parse(source: str) -> ParseResult:
    """Parse source text into a Program, or report diagnostics."""
    tokens, lex_diagnostics = tokenize(source)
    if any(d.is_error for d in lex_diagnostics):
        return ParseResult(program=None, diagnostics=list(lex_diagnostics))
    parser = _Parser(tokens)
    try:
        program = parser.parse_program()
    except _ParseError as exc:
        return ParseResult(program=None, diagnostics=list(lex_diagnostics) + [exc.diagnostic])
    return ParseResult(program=program, diagnostics=list(lex_diagnostics))
