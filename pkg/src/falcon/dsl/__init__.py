from falcon.dsl.diagnostics import Diagnostic, Severity, SourceSpan
from falcon.dsl.tokens import Token, TokenKind, tokenize
from falcon.dsl.parser import ParseResult, parse
from falcon.dsl.checker import check
from falcon.dsl.formatter import format_program

__all__ = [
    "Diagnostic",
    "ParseResult",
    "Severity",
    "SourceSpan",
    "Token",
    "TokenKind",
    "check",
    "format_program",
    "parse",
    "tokenize",
]
