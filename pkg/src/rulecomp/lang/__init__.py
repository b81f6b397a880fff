"""The rule-program language: extraction, lexing, parsing and printing."""

from .extract import extract_code_block, fenced_blocks
from .lexer import Token, lex
from .nodes import Diagnostic, Module, Span, to_json
from .parser import BUILTINS, METHODS, ParseOutcome, parse, parse_tokens
from .printer import unparse

__all__ = [
    "BUILTINS",
    "METHODS",
    "Diagnostic",
    "Module",
    "ParseOutcome",
    "Span",
    "Token",
    "extract_code_block",
    "fenced_blocks",
    "lex",
    "parse",
    "parse_tokens",
    "to_json",
    "unparse",
]
