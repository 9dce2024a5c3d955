"""Seeded random program generator for language round-trip tests.

Builds syntactically valid ASTs directly, so tests can assert that
``parse(format_program(ast)) == ast`` and that formatting is idempotent.
Generated programs are not guaranteed to be semantically valid.
"""

from __future__ import annotations

import random
import string as _string

from falcon.dsl import ast

_LIBS = ("io", "log", "config", "array", "hub", "deviceStates", "stateStepper")
_LIB_TYPES = (("config", "Config"), ("config", "Connection"), ("deviceStates", "DeviceStates"))
_STRING_ALPHABET = _string.ascii_letters + _string.digits + ' .,:!?_-+=/<>()[]{}"\\\n\t'


class ProgramGen:
    def __init__(self, seed: int) -> None:
        self.rng = random.Random(seed)
        self._counter = 0

    # -- atoms --------------------------------------------------------------

    def ident(self, prefix: str = "v") -> str:
        self._counter += 1
        name = f"{prefix}{self._counter}"
        if self.rng.random() < 0.15:
            name += "_"
        return name

    def int_lit(self) -> ast.IntLit:
        if self.rng.random() < 0.7:
            value = self.rng.randrange(0, 100)
        else:
            value = self.rng.randrange(0, 2**63)
        return ast.IntLit(value)

    def string_lit(self) -> ast.StringLit:
        length = self.rng.randrange(0, 12)
        value = "".join(self.rng.choice(_STRING_ALPHABET) for _ in range(length))
        return ast.StringLit(value)

    # -- types --------------------------------------------------------------

    def type_expr(self, depth: int = 0):
        choices = ["int", "string", "bool", "error", "struct", "lib"]
        if depth < 2:
            choices.append("generic")
        pick = self.rng.choice(choices)
        if pick == "int":
            return ast.IntType()
        if pick == "string":
            return ast.StringType()
        if pick == "bool":
            return ast.BoolType()
        if pick == "error":
            return ast.ErrorType()
        if pick == "struct":
            return ast.StructType(self.ident("T"))
        if pick == "lib":
            library, name = self.rng.choice(_LIB_TYPES)
            return ast.LibType(library, name)
        return ast.GenericType(ast.LibType("array", "Array"), self.type_expr(depth + 1))

    # -- expressions --------------------------------------------------------

    def expr(self, depth: int = 0, allow_this: bool = False) -> ast.Expr:
        simple = ["int", "string", "nil", "ident"]
        if allow_this:
            simple.append("this")
        if depth >= 3:
            pick = self.rng.choice(simple)
        else:
            pick = self.rng.choice(
                simple
                + [
                    "field",
                    "index",
                    "qualified",
                    "method",
                    "error_ctor",
                    "binary",
                    "unary",
                ]
            )
        if pick == "int":
            return self.int_lit()
        if pick == "string":
            return self.string_lit()
        if pick == "nil":
            return ast.NilLit()
        if pick == "this":
            return ast.ThisExpr()
        if pick == "ident":
            return ast.Ident(self.ident())
        if pick == "field":
            return ast.FieldAccess(self.expr(depth + 1, allow_this), self.ident("f"))
        if pick == "index":
            return ast.IndexExpr(self.expr(depth + 1, allow_this), self.expr(depth + 1, allow_this))
        if pick == "qualified":
            library = self.rng.choice(_LIBS)
            args = tuple(self.expr(depth + 1, allow_this) for _ in range(self.rng.randrange(0, 3)))
            return ast.QualifiedCall(library, self.ident("r"), args)
        if pick == "method":
            args = tuple(self.expr(depth + 1, allow_this) for _ in range(self.rng.randrange(0, 3)))
            return ast.MethodCall(self.expr(depth + 1, allow_this), self.ident("M"), args)
        if pick == "error_ctor":
            return ast.ErrorCtor(self.expr(depth + 1, allow_this))
        if pick == "binary":
            op = self.rng.choice(("+", "==", "!=", "<", ">"))
            return ast.BinaryOp(op, self.expr(depth + 1, allow_this), self.expr(depth + 1, allow_this))
        return ast.UnaryOp("!", self.expr(depth + 1, allow_this))

    # -- statements ---------------------------------------------------------

    def plain_stmt(self, allow_this: bool = False, depth: int = 0) -> ast.Stmt:
        choices = ["decl", "assign", "expr"]
        if depth < 2:
            choices.append("if")
        pick = self.rng.choice(choices)
        if pick == "decl":
            return ast.VarDecl(self.type_expr(), self.ident(), self.expr(1, allow_this))
        if pick == "assign":
            if allow_this and self.rng.random() < 0.4:
                target: ast.Expr = ast.FieldAccess(ast.ThisExpr(), self.ident("f"))
            elif self.rng.random() < 0.3:
                target = ast.FieldAccess(ast.Ident(self.ident()), self.ident("f"))
            else:
                target = ast.Ident(self.ident())
            return ast.Assign(target, self.expr(1, allow_this))
        if pick == "expr":
            return ast.ExprStmt(self.expr(1, allow_this))
        return self.if_chain(allow_this, depth, control=False, state_names=())

    def if_chain(
        self, allow_this: bool, depth: int, control: bool, state_names: tuple[str, ...]
    ) -> ast.IfChain:
        n_branches = self.rng.randrange(1, 4)
        conditions = tuple(self.expr(1, allow_this) for _ in range(n_branches))
        blocks = tuple(
            self.block(allow_this, depth + 1, control, state_names) for _ in range(n_branches)
        )
        else_block = None
        if self.rng.random() < 0.6:
            else_block = self.block(allow_this, depth + 1, control, state_names)
        return ast.IfChain(conditions, blocks, else_block)

    def block(
        self,
        allow_this: bool,
        depth: int,
        control: bool,
        state_names: tuple[str, ...],
    ) -> tuple[ast.Stmt, ...]:
        stmts: list[ast.Stmt] = []
        for _ in range(self.rng.randrange(0, 3)):
            stmts.append(self.plain_stmt(allow_this, depth))
        if control and self.rng.random() < 0.8:
            stmts.append(self.control_stmt(state_names))
        return tuple(stmts)

    def control_stmt(self, state_names: tuple[str, ...]) -> ast.Stmt:
        if not state_names or self.rng.random() < 0.3:
            return ast.Terminal()
        target = self.rng.choice(state_names)
        roll = self.rng.random()
        if roll < 0.4:
            args = None
        elif roll < 0.6:
            args = ()
        else:
            args = tuple(self.expr(1) for _ in range(self.rng.randrange(1, 3)))
        return ast.Transition(target, args)

    # -- declarations -------------------------------------------------------

    def params(self, prefix: str, limit: int = 3) -> tuple[ast.Param, ...]:
        return tuple(
            ast.Param(self.type_expr(), self.ident(prefix))
            for _ in range(self.rng.randrange(0, limit))
        )

    def struct(self) -> ast.StructDecl:
        name = self.ident("S")
        fields = tuple(
            ast.FieldDecl(self.type_expr(), self.ident("f"))
            for _ in range(self.rng.randrange(0, 4))
        )
        routines = []
        for _ in range(self.rng.randrange(0, 3)):
            body = tuple(self.plain_stmt(allow_this=True) for _ in range(self.rng.randrange(1, 4)))
            routines.append(
                ast.RoutineDecl(self.ident("R"), self.params("p"), self.params("r"), body)
            )
        return ast.StructDecl(name, fields, tuple(routines))

    def autotuner(self) -> ast.AutotunerDecl:
        name = self.ident("A")
        state_names = tuple(self.ident("st") for _ in range(self.rng.randrange(1, 4)))
        initializers = tuple(self.plain_stmt() for _ in range(self.rng.randrange(0, 3)))
        roll = self.rng.random()
        if roll < 0.5:
            start_args = None
        elif roll < 0.7:
            start_args = ()
        else:
            start_args = tuple(self.expr(1) for _ in range(self.rng.randrange(1, 3)))
        start = ast.StartDecl(self.rng.choice(state_names), start_args)
        states = []
        for state_name in state_names:
            body = list(self.block(False, 0, control=True, state_names=state_names))
            if not body or not isinstance(body[-1], (ast.Transition, ast.Terminal)):
                body.append(self.control_stmt(state_names))
            states.append(ast.StateDecl(state_name, self.params("sp"), tuple(body)))
        return ast.AutotunerDecl(
            name, self.params("ap"), self.params("ar"), initializers, start, tuple(states)
        )

    def program(self) -> ast.Program:
        imports = tuple(
            self.rng.sample(_LIBS, self.rng.randrange(0, 4))
        )
        structs = tuple(self.struct() for _ in range(self.rng.randrange(0, 3)))
        autotuners = tuple(self.autotuner() for _ in range(self.rng.randrange(1, 3)))
        return ast.Program(imports, structs, autotuners)
