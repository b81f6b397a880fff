"""Recursive-descent parser for rule programs.

The accepted language is the Python subset documented in ``docs/grammar.md``.
Anything outside it yields a failed :class:`ParseOutcome` whose diagnostics
point at the offending token.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import lexer as lx
from .lexer import Token, lex
from .nodes import (
    Assign,
    Attribute,
    AugAssign,
    BinOp,
    BoolOp,
    Branch,
    Break,
    Call,
    Comment,
    Compare,
    Const,
    Continue,
    Diagnostic,
    DictExpr,
    Else,
    Expr,
    ExprStmt,
    For,
    FunctionDef,
    If,
    IfExp,
    ListComp,
    ListExpr,
    Module,
    Name,
    Param,
    Pass,
    Return,
    Slice,
    Span,
    Stmt,
    Subscript,
    TupleExpr,
    UnaryOp,
    While,
)

BUILTINS = frozenset(
    """range len list dict tuple str int bool print enumerate zip min max abs
    sum sorted reversed ord chr any all""".split()
)
METHODS = frozenset(
    """append extend insert pop copy join get items keys values index count
    upper lower split strip replace startswith endswith""".split()
)
MAX_DEPTH = 120
AUG_OPS = ("+=", "-=", "*=")
COMPARE_OPS = ("==", "!=", "<", ">", "<=", ">=")


@dataclass(frozen=True)
class ParseOutcome:
    result: Optional[Module]
    diagnostics: tuple[Diagnostic, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return self.result is not None


class ParseError(Exception):
    def __init__(self, span: Span, message: str) -> None:
        super().__init__(message)
        self.diagnostic = Diagnostic(span, message)


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.comments = [Comment(t.value, span=t.span) for t in tokens if t.kind == lx.COMMENT]
        self.toks = [t for t in tokens if t.kind != lx.COMMENT]
        self.i = 0
        self.depth = 0
        self.chain: list[Span] = []

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind != lx.END:
            self.i += 1
        return tok

    def fail(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(tok.span, message)

    def expect_op(self, op: str) -> Token:
        if not self.tok.is_op(op):
            raise self.fail(f"expected {op!r}, found {self.describe(self.tok)}")
        return self.next()

    def expect_kw(self, word: str) -> Token:
        if not self.tok.is_kw(word):
            raise self.fail(f"expected {word!r}, found {self.describe(self.tok)}")
        return self.next()

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            raise self.fail(f"expected {kind.lower()}, found {self.describe(self.tok)}")
        return self.next()

    @staticmethod
    def describe(tok: Token) -> str:
        if tok.kind in (lx.NAME, lx.OP):
            return repr(tok.value)
        return tok.kind.lower()

    def enter(self) -> None:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.fail("program nests too deeply")

    def leave(self) -> None:
        self.depth -= 1

    def check_name(self, tok: Token) -> None:
        if tok.value in lx.UNSUPPORTED_KEYWORDS:
            raise self.fail(f"{tok.value!r} is not supported in rule programs", tok)

    # -- statements ---------------------------------------------------------

    def module(self) -> Module:
        body: list[Stmt] = []
        while self.tok.kind != lx.END:
            if self.tok.kind == lx.NEWLINE:
                self.next()
                continue
            if self.tok.kind == lx.INDENT:
                raise self.fail("unexpected indent")
            body.extend(self.statement())
        return Module(tuple(body), tuple(self.comments), span=Span(1, 1))

    def statement(self) -> list[Stmt]:
        tok = self.tok
        if tok.kind == lx.NAME:
            self.check_name(tok)
            if tok.value == "def":
                return [self.funcdef()]
            if tok.value == "if":
                return [self.if_stmt()]
            if tok.value == "for":
                return [self.for_stmt()]
            if tok.value == "while":
                return [self.while_stmt()]
            if tok.value in ("elif", "else"):
                raise self.fail(f"{tok.value!r} without matching 'if'")
        return self.simple_line()

    def simple_line(self) -> list[Stmt]:
        stmts = [self.simple()]
        while self.tok.is_op(";"):
            self.next()
            if self.tok.kind in (lx.NEWLINE, lx.END):
                break
            stmts.append(self.simple())
        if self.tok.kind != lx.END:
            self.expect(lx.NEWLINE)
        return stmts

    def simple(self) -> Stmt:
        tok = self.tok
        if tok.kind == lx.NAME:
            self.check_name(tok)
            if tok.value == "return":
                self.next()
                if self.tok.kind in (lx.NEWLINE, lx.END) or self.tok.is_op(";"):
                    return Return(None, span=tok.span)
                return Return(self.expr_list(), span=tok.span)
            if tok.value == "pass":
                self.next()
                return Pass(span=tok.span)
            if tok.value == "break":
                self.next()
                return Break(span=tok.span)
            if tok.value == "continue":
                self.next()
                return Continue(span=tok.span)
        lhs = self.expr_list()
        if self.tok.is_op("="):
            self.next()
            value = self.expr_list()
            if self.tok.is_op("="):
                raise self.fail("chained assignment is not supported")
            return Assign(self.target(lhs, tok), value, span=tok.span)
        if self.tok.kind == lx.OP and self.tok.value in AUG_OPS:
            op = self.next().value[0]
            if not isinstance(lhs, (Name, Subscript)):
                raise self.fail("invalid augmented assignment target", tok)
            return AugAssign(lhs, op, self.expr(), span=tok.span)
        if self.tok.is_op(":") and isinstance(lhs, (Name, Subscript)):
            self.next()
            annotation = self.expr()
            value = None
            if self.tok.is_op("="):
                self.next()
                value = self.expr_list()
            return Assign(lhs, value, annotation, span=tok.span)
        return ExprStmt(lhs, span=tok.span)

    def target(self, node: Expr, tok: Token) -> Expr:
        if isinstance(node, (Name, Subscript)):
            if isinstance(node, Name) and node.id in lx.KEYWORDS:
                raise self.fail("cannot assign to keyword", tok)
            return node
        if isinstance(node, (TupleExpr, ListExpr)) and node.elts:
            return TupleExpr(tuple(self.target(e, tok) for e in node.elts), span=node.span)
        raise self.fail("invalid assignment target", tok)

    def suite(self) -> tuple[Stmt, ...]:
        self.expect_op(":")
        if self.tok.kind != lx.NEWLINE:
            return tuple(self.simple_line())
        self.next()
        while self.tok.kind == lx.NEWLINE:
            self.next()
        self.expect(lx.INDENT)
        body: list[Stmt] = []
        self.enter()
        while self.tok.kind not in (lx.DEDENT, lx.END):
            if self.tok.kind == lx.NEWLINE:
                self.next()
                continue
            if self.tok.kind == lx.INDENT:
                raise self.fail("unexpected indent")
            body.extend(self.statement())
        self.leave()
        if self.tok.kind == lx.DEDENT:
            self.next()
        if not body:
            raise self.fail("expected an indented block")
        return tuple(body)

    def funcdef(self) -> FunctionDef:
        start = self.expect_kw("def")
        name = self.expect(lx.NAME)
        if name.value in lx.KEYWORDS or name.value in lx.UNSUPPORTED_KEYWORDS:
            raise self.fail("invalid function name", name)
        self.expect_op("(")
        params: list[Param] = []
        while not self.tok.is_op(")"):
            ptok = self.expect(lx.NAME)
            if ptok.value in lx.KEYWORDS or ptok.value in lx.UNSUPPORTED_KEYWORDS:
                raise self.fail("invalid parameter name", ptok)
            annotation = default = None
            if self.tok.is_op(":"):
                self.next()
                annotation = self.expr()
            if self.tok.is_op("="):
                self.next()
                default = self.expr()
            params.append(Param(ptok.value, annotation, default, span=ptok.span))
            if not self.tok.is_op(")"):
                self.expect_op(",")
        self.next()
        returns = None
        if self.tok.is_op("->"):
            self.next()
            returns = self.expr()
        # a function body starts a fresh conditional chain
        saved, self.chain = self.chain, []
        body = self.suite()
        self.chain = saved
        return FunctionDef(name.value, tuple(params), body, returns, span=start.span)

    def if_stmt(self) -> If:
        start = self.tok
        branches: list[Branch] = []
        chain = tuple(self.chain)
        while True:
            kw = self.next()
            test = self.expr()
            self.chain.append(kw.span)
            body = self.suite()
            self.chain.pop()
            branches.append(Branch(test, body, chain=chain, span=kw.span))
            if not self.tok.is_kw("elif"):
                break
        orelse = None
        if self.tok.is_kw("else"):
            kw = self.next()
            self.chain.append(kw.span)
            body = self.suite()
            self.chain.pop()
            orelse = Else(body, chain=chain, span=kw.span)
        return If(tuple(branches), orelse, span=start.span)

    def for_stmt(self) -> For:
        start = self.expect_kw("for")
        target = self.target(self.target_list(), start)
        self.expect_kw("in")
        iterable = self.expr_list()
        body = self.suite()
        if self.tok.is_kw("else"):
            raise self.fail("'for ... else' is not supported")
        return For(target, iterable, body, span=start.span)

    def while_stmt(self) -> While:
        start = self.expect_kw("while")
        test = self.expr()
        body = self.suite()
        if self.tok.is_kw("else"):
            raise self.fail("'while ... else' is not supported")
        return While(test, body, span=start.span)

    def target_list(self) -> Expr:
        first = self.tok
        items = [self.postfix()]
        trailing = False
        while self.tok.is_op(","):
            self.next()
            if self.tok.is_kw("in"):
                trailing = True
                break
            items.append(self.postfix())
        if len(items) == 1 and not trailing:
            return items[0]
        return TupleExpr(tuple(items), span=first.span)

    # -- expressions --------------------------------------------------------

    def expr_list(self) -> Expr:
        first = self.tok
        item = self.expr()
        if not self.tok.is_op(","):
            return item
        items = [item]
        while self.tok.is_op(","):
            self.next()
            if self.tok.kind in (lx.NEWLINE, lx.END) or self.tok.is_op("=", ")", "]", "}", ";", ":"):
                break
            items.append(self.expr())
        return TupleExpr(tuple(items), span=first.span)

    def expr(self) -> Expr:
        self.enter()
        try:
            start = self.tok
            node = self.or_test()
            if self.tok.is_kw("if"):
                self.next()
                test = self.or_test()
                self.expect_kw("else")
                orelse = self.expr()
                node = IfExp(test, node, orelse, span=start.span)
            return node
        finally:
            self.leave()

    def or_test(self) -> Expr:
        start = self.tok
        values = [self.and_test()]
        while self.tok.is_kw("or"):
            self.next()
            values.append(self.and_test())
        return values[0] if len(values) == 1 else BoolOp("or", tuple(values), span=start.span)

    def and_test(self) -> Expr:
        start = self.tok
        values = [self.not_test()]
        while self.tok.is_kw("and"):
            self.next()
            values.append(self.not_test())
        return values[0] if len(values) == 1 else BoolOp("and", tuple(values), span=start.span)

    def not_test(self) -> Expr:
        if self.tok.is_kw("not"):
            start = self.next()
            self.enter()
            try:
                return UnaryOp("not", self.not_test(), span=start.span)
            finally:
                self.leave()
        return self.comparison()

    def comparison(self) -> Expr:
        start = self.tok
        left = self.arith()
        ops: list[str] = []
        rights: list[Expr] = []
        while True:
            tok = self.tok
            if tok.kind == lx.OP and tok.value in COMPARE_OPS:
                op = self.next().value
            elif tok.is_kw("in"):
                self.next()
                op = "in"
            elif tok.is_kw("not") and self.toks[self.i + 1].is_kw("in"):
                self.next()
                self.next()
                op = "not in"
            elif tok.is_kw("is"):
                self.next()
                op = "is"
                if self.tok.is_kw("not"):
                    self.next()
                    op = "is not"
            else:
                break
            ops.append(op)
            rights.append(self.arith())
        if not ops:
            return left
        return Compare(left, tuple(ops), tuple(rights), span=start.span)

    def arith(self) -> Expr:
        start = self.tok
        node = self.term()
        while self.tok.is_op("+", "-"):
            op = self.next().value
            node = BinOp(op, node, self.term(), span=start.span)
        return node

    def term(self) -> Expr:
        start = self.tok
        node = self.factor()
        while self.tok.is_op("*", "//", "%", "/", "@"):
            optok = self.next()
            if optok.value in ("/", "@"):
                raise self.fail(f"operator {optok.value!r} is not supported", optok)
            node = BinOp(optok.value, node, self.factor(), span=start.span)
        return node

    def factor(self) -> Expr:
        if self.tok.is_op("-", "+"):
            start = self.next()
            self.enter()
            try:
                return UnaryOp(start.value, self.factor(), span=start.span)
            finally:
                self.leave()
        if self.tok.kind == lx.OP and self.tok.value in ("~", "**", "&", "|", "^", "<<", ">>"):
            raise self.fail(f"operator {self.tok.value!r} is not supported")
        node = self.postfix()
        if self.tok.kind == lx.OP and self.tok.value in ("**", "&", "|", "^", "<<", ">>"):
            raise self.fail(f"operator {self.tok.value!r} is not supported")
        return node

    def postfix(self) -> Expr:
        start = self.tok
        node = self.atom()
        while True:
            if self.tok.is_op("("):
                self.next()
                args = self.call_args()
                node = Call(node, args, span=start.span)
            elif self.tok.is_op("["):
                self.next()
                index = self.subscript()
                self.expect_op("]")
                node = Subscript(node, index, span=start.span)
            elif self.tok.is_op("."):
                self.next()
                attr = self.expect(lx.NAME)
                if not self.tok.is_op("("):
                    raise self.fail("attribute access is only supported in method calls", attr)
                node = Attribute(node, attr.value, span=start.span)
            else:
                return node

    def call_args(self) -> tuple[Expr, ...]:
        args: list[Expr] = []
        while not self.tok.is_op(")"):
            if self.tok.is_op("*", "**"):
                raise self.fail("argument unpacking is not supported")
            if self.tok.kind == lx.NAME and self.toks[self.i + 1].is_op("="):
                raise self.fail("keyword arguments are not supported")
            arg = self.expr()
            if self.tok.is_kw("for"):
                arg = self.comprehension(arg, self.tok)
            args.append(arg)
            if not self.tok.is_op(")"):
                self.expect_op(",")
        self.next()
        return tuple(args)

    def subscript(self) -> Expr:
        start = self.tok
        lower = upper = step = None
        if not self.tok.is_op(":"):
            lower = self.expr_list()
            if not self.tok.is_op(":"):
                return lower
        self.expect_op(":")
        if not self.tok.is_op("]", ":"):
            upper = self.expr()
        if self.tok.is_op(":"):
            self.next()
            if not self.tok.is_op("]"):
                step = self.expr()
        return Slice(lower, upper, step, span=start.span)

    def comprehension(self, elt: Expr, start: Token) -> ListComp:
        self.expect_kw("for")
        target = self.target(self.target_list(), start)
        self.expect_kw("in")
        iterable = self.or_test()
        ifs: list[Expr] = []
        while self.tok.is_kw("if"):
            self.next()
            ifs.append(self.or_test())
        if self.tok.is_kw("for"):
            raise self.fail("comprehensions with more than one 'for' clause are not supported")
        return ListComp(elt, target, iterable, tuple(ifs), span=elt.span)

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == lx.NAME:
            self.check_name(tok)
            if tok.value in ("True", "False", "None"):
                self.next()
                return Const({"True": True, "False": False, "None": None}[tok.value], span=tok.span)
            if tok.value in lx.KEYWORDS:
                raise self.fail(f"unexpected keyword {tok.value!r}")
            self.next()
            return Name(tok.value, span=tok.span)
        if tok.kind == lx.NUMBER:
            self.next()
            return Const(tok.value, span=tok.span)
        if tok.kind == lx.STRING:
            parts = []
            while self.tok.kind == lx.STRING:
                parts.append(self.next().value)
            return Const("".join(parts), span=tok.span)
        if tok.is_op("("):
            self.next()
            self.enter()
            try:
                if self.tok.is_op(")"):
                    self.next()
                    return TupleExpr((), span=tok.span)
                first = self.expr()
                if self.tok.is_kw("for"):
                    raise self.fail("generator expressions are not supported")
                if self.tok.is_op(")"):
                    self.next()
                    return first
                items = [first]
                while self.tok.is_op(","):
                    self.next()
                    if self.tok.is_op(")"):
                        break
                    items.append(self.expr())
                self.expect_op(")")
                return TupleExpr(tuple(items), span=tok.span)
            finally:
                self.leave()
        if tok.is_op("["):
            self.next()
            self.enter()
            try:
                if self.tok.is_op("]"):
                    self.next()
                    return ListExpr((), span=tok.span)
                first = self.expr()
                if self.tok.is_kw("for"):
                    node = self.comprehension(first, tok)
                    self.expect_op("]")
                    return ListComp(node.elt, node.target, node.iter, node.ifs, span=tok.span)
                items = [first]
                while self.tok.is_op(","):
                    self.next()
                    if self.tok.is_op("]"):
                        break
                    items.append(self.expr())
                self.expect_op("]")
                return ListExpr(tuple(items), span=tok.span)
            finally:
                self.leave()
        if tok.is_op("{"):
            self.next()
            self.enter()
            try:
                keys: list[Expr] = []
                values: list[Expr] = []
                while not self.tok.is_op("}"):
                    keys.append(self.expr())
                    if not self.tok.is_op(":"):
                        raise self.fail("set literals and dict comprehensions are not supported")
                    self.next()
                    values.append(self.expr())
                    if self.tok.is_kw("for"):
                        raise self.fail("dict comprehensions are not supported")
                    if not self.tok.is_op("}"):
                        self.expect_op(",")
                self.next()
                return DictExpr(tuple(keys), tuple(values), span=tok.span)
            finally:
                self.leave()
        raise self.fail(f"unexpected {self.describe(tok)}")


def _check_calls(module: Module) -> list[Diagnostic]:
    local = set(module.functions())
    diags = []
    for node in module.walk():
        if not isinstance(node, Call):
            continue
        func = node.func
        if isinstance(func, Name):
            if func.id not in BUILTINS and func.id not in local:
                diags.append(Diagnostic(node.span, f"call to unsupported function {func.id!r}"))
        elif isinstance(func, Attribute):
            if func.attr not in METHODS:
                diags.append(Diagnostic(node.span, f"call to unsupported method {func.attr!r}"))
        else:
            diags.append(Diagnostic(node.span, "only named functions and methods can be called"))
    return diags


def parse_tokens(tokens: list[Token]) -> ParseOutcome:
    parser = _Parser(tokens)
    try:
        module = parser.module()
    except ParseError as exc:
        return ParseOutcome(None, (exc.diagnostic,))
    diags = _check_calls(module)
    if diags:
        return ParseOutcome(None, tuple(diags))
    return ParseOutcome(module)


def parse(source: str) -> ParseOutcome:
    """Lex and parse ``source``.  Never raises on malformed input."""
    tokens, diags = lex(source)
    if diags:
        return ParseOutcome(None, tuple(diags))
    return parse_tokens(tokens)
