"""Tokenizer for the rule-program language (an indentation-sensitive Python subset)."""

from __future__ import annotations

from dataclasses import dataclass

from .nodes import Diagnostic, Span

NAME = "NAME"
NUMBER = "NUMBER"
STRING = "STRING"
OP = "OP"
NEWLINE = "NEWLINE"
INDENT = "INDENT"
DEDENT = "DEDENT"
COMMENT = "COMMENT"
END = "END"

KEYWORDS = frozenset(
    """def if elif else for while in not and or is return pass break continue
    True False None""".split()
)
# recognised only so the parser can reject them with a clear message
UNSUPPORTED_KEYWORDS = frozenset(
    """class import from lambda try except finally with global nonlocal yield
    async await del assert raise""".split()
)

_OPERATORS = sorted(
    """( ) [ ] { } , : . ; = == != < > <= >= + - * / // % ** += -= *= -> @ & | ^ ~ << >>""".split(),
    key=len,
    reverse=True,
)
_BRACKETS = {"(": ")", "[": "]", "{": "}"}
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'", '"': '"', "0": "\0", "\n": ""}


@dataclass(frozen=True)
class Token:
    kind: str
    value: object
    span: Span

    def is_op(self, *ops: str) -> bool:
        return self.kind == OP and self.value in ops

    def is_kw(self, *words: str) -> bool:
        return self.kind == NAME and self.value in words


class _Lexer:
    def __init__(self, source: str) -> None:
        self.src = source.replace("\r\n", "\n").replace("\r", "\n")
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens: list[Token] = []
        self.diags: list[Diagnostic] = []
        self.indents = [0]
        self.indent_char: str | None = None
        self.depth: list[str] = []

    def error(self, msg: str, line: int | None = None, col: int | None = None) -> None:
        self.diags.append(Diagnostic(Span(line or self.line, col or self.col), msg))

    def peek(self, k: int = 0) -> str:
        i = self.pos + k
        return self.src[i] if i < len(self.src) else ""

    def advance(self, n: int = 1) -> str:
        text = self.src[self.pos : self.pos + n]
        for ch in text:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n
        return text

    def emit(self, kind: str, value: object, line: int, col: int) -> None:
        self.tokens.append(Token(kind, value, Span(line, col)))

    def run(self) -> tuple[list[Token], list[Diagnostic]]:
        at_line_start = True
        while self.pos < len(self.src):
            if at_line_start and not self.depth:
                at_line_start = False
                if self.handle_indent():
                    continue
            ch = self.peek()
            if ch == "\n":
                if not self.depth and self.last_kind() not in (None, NEWLINE, INDENT, DEDENT):
                    self.emit(NEWLINE, "\n", self.line, self.col)
                self.advance()
                at_line_start = True
            elif ch in " \t\f":
                self.advance()
            elif ch == "#":
                self.comment()
            elif ch == "\\" and self.peek(1) == "\n":
                self.advance(2)
            elif ch.isalpha() or ch == "_":
                self.name()
            elif ch.isdigit():
                self.number()
            elif ch in "'\"":
                self.string()
            else:
                self.operator()
        if self.depth:
            self.error(f"unclosed bracket {self.depth[-1]!r}")
        if self.last_kind() not in (None, NEWLINE, INDENT, DEDENT):
            self.emit(NEWLINE, "\n", self.line, self.col)
        while len(self.indents) > 1:
            self.indents.pop()
            self.emit(DEDENT, "", self.line, 1)
        self.emit(END, "", self.line, self.col)
        return self.tokens, self.diags

    def last_kind(self) -> str | None:
        for tok in reversed(self.tokens):
            if tok.kind != COMMENT:
                return tok.kind
        return None

    def handle_indent(self) -> bool:
        """Measure leading whitespace; returns True when the line is blank or comment-only."""
        start = self.pos
        while self.peek() in (" ", "\t", "\f"):
            self.advance()
        ws = self.src[start : self.pos]
        nxt = self.peek()
        if nxt in ("\n", "#", ""):
            return nxt != "#" and nxt != ""
        if ws:
            kinds = set(ws) - {"\f"}
            if len(kinds) > 1:
                self.error("indentation mixes tabs and spaces", col=1)
            elif kinds:
                kind = kinds.pop()
                if self.indent_char is None:
                    self.indent_char = kind
                elif kind != self.indent_char:
                    self.error("indentation mixes tabs and spaces", col=1)
        width = len(ws.replace("\f", ""))
        if width > self.indents[-1]:
            self.indents.append(width)
            self.emit(INDENT, width, self.line, 1)
        else:
            while width < self.indents[-1]:
                self.indents.pop()
                self.emit(DEDENT, "", self.line, 1)
            if width != self.indents[-1]:
                self.error("dedent does not match any outer indentation level", col=1)
        return False

    def comment(self) -> None:
        line, col = self.line, self.col
        start = self.pos
        while self.peek() not in ("\n", ""):
            self.advance()
        self.emit(COMMENT, self.src[start : self.pos], line, col)

    def name(self) -> None:
        line, col = self.line, self.col
        start = self.pos
        while self.peek().isalnum() or self.peek() == "_":
            self.advance()
        word = self.src[start : self.pos]
        if word.lower() in ("r", "b", "f", "u", "rb", "br", "fr", "rf") and self.peek() in "'\"" and self.peek():
            if word.lower() in ("r", "u"):
                self.string(raw=word.lower() == "r", line=line, col=col)
            else:
                self.error(f"string prefix {word!r} is not supported", line, col)
                self.string(line=line, col=col)
            return
        self.emit(NAME, word, line, col)

    def number(self) -> None:
        line, col = self.line, self.col
        start = self.pos
        while self.peek().isdigit() or self.peek() == "_":
            self.advance()
        text = self.src[start : self.pos]
        if self.peek() == "." and self.peek(1).isdigit() or self.peek() in ("e", "E", "j", "x", "o", "b"):
            while self.peek().isalnum() or self.peek() == ".":
                self.advance()
            self.error("only decimal integer literals are supported", line, col)
            self.emit(NUMBER, 0, line, col)
            return
        try:
            value = int(text)
        except ValueError:
            self.error(f"bad integer literal {text!r}", line, col)
            value = 0
        self.emit(NUMBER, value, line, col)

    def string(self, raw: bool = False, line: int | None = None, col: int | None = None) -> None:
        line = line or self.line
        col = col or self.col
        quote = self.peek()
        triple = self.peek(1) == quote and self.peek(2) == quote
        delim = quote * 3 if triple else quote
        self.advance(len(delim))
        out: list[str] = []
        while True:
            ch = self.peek()
            if ch == "":
                self.error("unterminated string literal", line, col)
                break
            if ch == "\n" and not triple:
                self.error("unterminated string literal", line, col)
                break
            if self.src.startswith(delim, self.pos):
                self.advance(len(delim))
                break
            if ch == "\\" and not raw:
                self.advance()
                out.append(self.escape())
                continue
            if ch == "\\" and raw:
                out.append(self.advance())
                if self.peek():
                    out.append(self.advance())
                continue
            out.append(self.advance())
        self.emit(STRING, "".join(out), line, col)

    def escape(self) -> str:
        ch = self.peek()
        if ch in _ESCAPES:
            self.advance()
            return _ESCAPES[ch]
        for prefix, width in (("x", 2), ("u", 4), ("U", 8)):
            if ch == prefix:
                digits = self.src[self.pos + 1 : self.pos + 1 + width]
                try:
                    value = chr(int(digits, 16)) if len(digits) == width else None
                except ValueError:
                    value = None
                if value is None:
                    self.error("bad escape sequence")
                    self.advance()
                    return ""
                self.advance(1 + width)
                return value
        return "\\"

    def operator(self) -> None:
        line, col = self.line, self.col
        for op in _OPERATORS:
            if self.src.startswith(op, self.pos):
                self.advance(len(op))
                if op in _BRACKETS:
                    self.depth.append(op)
                elif op in _BRACKETS.values():
                    if self.depth and _BRACKETS[self.depth[-1]] == op:
                        self.depth.pop()
                    else:
                        self.error(f"unmatched {op!r}", line, col)
                self.emit(OP, op, line, col)
                return
        self.error(f"unexpected character {self.peek()!r}", line, col)
        self.advance()


def lex(source: str) -> tuple[list[Token], list[Diagnostic]]:
    """Tokenize ``source``; comments come back as ``COMMENT`` trivia tokens."""
    return _Lexer(source).run()
