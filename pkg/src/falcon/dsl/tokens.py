"""Lexer for the autotuner language.

Tokens keep their exact source lexeme and span; whitespace and ``//`` comments
are skipped, so concatenating lexemes with the skipped stretches reconstructs
the input byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from falcon.dsl.diagnostics import Diagnostic, SourceSpan


class TokenKind(Enum):
    KEYWORD = "keyword"
    IDENT = "ident"
    INT = "int"
    STRING = "string"
    OPERATOR = "operator"
    PUNCT = "punct"
    EOF = "eof"


KEYWORDS = frozenset(
    {
        "import",
        "struct",
        "routine",
        "autotuner",
        "state",
        "start",
        "terminal",
        "if",
        "elif",
        "else",
        "int",
        "string",
        "bool",
        "nil",
        "this",
        "Error",
    }
)

# Multi-character operators first so maximal munch wins.
_OPERATORS = ("->", "::", "==", "!=", "+", "<", ">", "!", "=", ".")
_PUNCT = "(){}[];,"

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    span: SourceSpan

    @property
    def text(self) -> str:
        """Decoded value for string tokens; the lexeme otherwise."""
        if self.kind is not TokenKind.STRING:
            return self.lexeme
        body = self.lexeme[1:-1]
        out: list[str] = []
        i = 0
        while i < len(body):
            ch = body[i]
            if ch == "\\" and i + 1 < len(body):
                out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
                i += 2
            else:
                out.append(ch)
                i += 1
        return "".join(out)


class _Cursor:
    def __init__(self, source: str) -> None:
        self.source = source
        self.pos = 0
        self.line = 1
        self.column = 1

    def peek(self, offset: int = 0) -> str:
        index = self.pos + offset
        return self.source[index] if index < len(self.source) else ""

    def advance(self) -> str:
        ch = self.source[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.column = 1
        else:
            self.column += 1
        return ch

    @property
    def at_end(self) -> bool:
        return self.pos >= len(self.source)


def tokenize(source: str) -> tuple[list[Token], list[Diagnostic]]:
    """Lex `source` into tokens plus any lexical diagnostics.

    The token list always ends with an EOF token. Unterminated strings and
    illegal characters are reported with spans; lexing continues afterwards.
    """
    cursor = _Cursor(source)
    tokens: list[Token] = []
    diagnostics: list[Diagnostic] = []

    while not cursor.at_end:
        ch = cursor.peek()

        if ch in " \t\r\n":
            cursor.advance()
            continue

        if ch == "/" and cursor.peek(1) == "/":
            while not cursor.at_end and cursor.peek() != "\n":
                cursor.advance()
            continue

        start_line, start_col, start_pos = cursor.line, cursor.column, cursor.pos

        if ch.isalpha() or ch == "_":
            while not cursor.at_end and (cursor.peek().isalnum() or cursor.peek() == "_"):
                cursor.advance()
            lexeme = source[start_pos : cursor.pos]
            kind = TokenKind.KEYWORD if lexeme in KEYWORDS else TokenKind.IDENT
            tokens.append(
                Token(kind, lexeme, SourceSpan(start_line, start_col, cursor.line, cursor.column))
            )
            continue

        if ch.isdigit():
            while not cursor.at_end and cursor.peek().isdigit():
                cursor.advance()
            lexeme = source[start_pos : cursor.pos]
            tokens.append(
                Token(
                    TokenKind.INT,
                    lexeme,
                    SourceSpan(start_line, start_col, cursor.line, cursor.column),
                )
            )
            continue

        if ch == '"':
            cursor.advance()
            terminated = False
            while not cursor.at_end:
                nxt = cursor.peek()
                if nxt == "\n":
                    break
                cursor.advance()
                if nxt == "\\" and not cursor.at_end and cursor.peek() != "\n":
                    cursor.advance()
                    continue
                if nxt == '"':
                    terminated = True
                    break
            span = SourceSpan(start_line, start_col, cursor.line, cursor.column)
            lexeme = source[start_pos : cursor.pos]
            if not terminated:
                diagnostics.append(
                    Diagnostic("unterminated-string", "unterminated string literal", span)
                )
            else:
                tokens.append(Token(TokenKind.STRING, lexeme, span))
            continue

        matched = False
        for op in _OPERATORS:
            if source.startswith(op, cursor.pos):
                for _ in op:
                    cursor.advance()
                tokens.append(
                    Token(
                        TokenKind.OPERATOR,
                        op,
                        SourceSpan(start_line, start_col, cursor.line, cursor.column),
                    )
                )
                matched = True
                break
        if matched:
            continue

        if ch in _PUNCT:
            cursor.advance()
            tokens.append(
                Token(
                    TokenKind.PUNCT,
                    ch,
                    SourceSpan(start_line, start_col, cursor.line, cursor.column),
                )
            )
            continue

        cursor.advance()
        diagnostics.append(
            Diagnostic(
                "illegal-char",
                f"illegal character {ch!r}",
                SourceSpan(start_line, start_col, cursor.line, cursor.column),
            )
        )

    tokens.append(Token(TokenKind.EOF, "", SourceSpan.point(cursor.line, cursor.column)))
    return tokens, diagnostics
