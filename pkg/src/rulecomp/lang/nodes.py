"""AST node types for rule programs.

Nodes are frozen dataclasses.  Source spans and nesting chains are excluded
from equality, so ``==`` compares structure only.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Any, Iterator, Optional, Union


@dataclass(frozen=True, order=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOSPAN = Span(0, 0)


@dataclass(frozen=True)
class Diagnostic:
    span: Span
    message: str

    def __str__(self) -> str:
        return f"{self.span}: {self.message}"


def _span() -> Any:
    return field(default=NOSPAN, compare=False, kw_only=True, repr=False)


@dataclass(frozen=True)
class Node:
    span: Span = _span()

    def children(self) -> Iterator[Node]:
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Node):
                yield value
            elif isinstance(value, tuple):
                for item in value:
                    if isinstance(item, Node):
                        yield item

    def walk(self) -> Iterator[Node]:
        stack: list[Node] = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(list(node.children())))


# --- expressions -----------------------------------------------------------


@dataclass(frozen=True)
class Expr(Node):
    pass


@dataclass(frozen=True)
class Name(Expr):
    id: str


@dataclass(frozen=True)
class Const(Expr):
    value: Union[str, int, bool, None]

    def __eq__(self, other: object) -> bool:
        # keep True != 1 so structural comparison is type-aware
        return type(other) is Const and type(self.value) is type(other.value) and self.value == other.value

    def __hash__(self) -> int:
        return hash((Const, type(self.value), self.value))


@dataclass(frozen=True)
class ListExpr(Expr):
    elts: tuple[Expr, ...]


@dataclass(frozen=True)
class TupleExpr(Expr):
    elts: tuple[Expr, ...]


@dataclass(frozen=True)
class DictExpr(Expr):
    keys: tuple[Expr, ...]
    values: tuple[Expr, ...]


@dataclass(frozen=True)
class Slice(Expr):
    lower: Optional[Expr]
    upper: Optional[Expr]
    step: Optional[Expr]


@dataclass(frozen=True)
class Subscript(Expr):
    value: Expr
    index: Expr


@dataclass(frozen=True)
class Attribute(Expr):
    """Only valid as the callee of a method call."""

    value: Expr
    attr: str


@dataclass(frozen=True)
class Call(Expr):
    func: Expr
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class UnaryOp(Expr):
    op: str
    operand: Expr


@dataclass(frozen=True)
class BoolOp(Expr):
    op: str
    values: tuple[Expr, ...]


@dataclass(frozen=True)
class Compare(Expr):
    left: Expr
    ops: tuple[str, ...]
    comparators: tuple[Expr, ...]


@dataclass(frozen=True)
class IfExp(Expr):
    test: Expr
    body: Expr
    orelse: Expr


@dataclass(frozen=True)
class ListComp(Expr):
    elt: Expr
    target: Expr
    iter: Expr
    ifs: tuple[Expr, ...]


# --- statements ------------------------------------------------------------


@dataclass(frozen=True)
class Stmt(Node):
    pass


@dataclass(frozen=True)
class Param(Node):
    name: str
    annotation: Optional[Expr] = None
    default: Optional[Expr] = None


@dataclass(frozen=True)
class FunctionDef(Stmt):
    name: str
    params: tuple[Param, ...]
    body: tuple[Stmt, ...]
    returns: Optional[Expr] = None


@dataclass(frozen=True)
class Assign(Stmt):
    target: Expr
    value: Optional[Expr]
    annotation: Optional[Expr] = None


@dataclass(frozen=True)
class AugAssign(Stmt):
    target: Expr
    op: str
    value: Expr


@dataclass(frozen=True)
class ExprStmt(Stmt):
    value: Expr


@dataclass(frozen=True)
class Return(Stmt):
    value: Optional[Expr]


@dataclass(frozen=True)
class Branch(Node):
    """One ``if``/``elif`` arm.  ``chain`` lists the spans of the enclosing
    conditional arms, outermost first."""

    test: Expr
    body: tuple[Stmt, ...]
    chain: tuple[Span, ...] = field(default=(), compare=False, kw_only=True, repr=False)


@dataclass(frozen=True)
class Else(Node):
    body: tuple[Stmt, ...]
    chain: tuple[Span, ...] = field(default=(), compare=False, kw_only=True, repr=False)


@dataclass(frozen=True)
class If(Stmt):
    """An ``if``/``elif``/``else`` chain; the ``else`` arm is tied to every branch of it."""

    branches: tuple[Branch, ...]
    orelse: Optional[Else] = None


@dataclass(frozen=True)
class For(Stmt):
    target: Expr
    iter: Expr
    body: tuple[Stmt, ...]


@dataclass(frozen=True)
class While(Stmt):
    test: Expr
    body: tuple[Stmt, ...]


@dataclass(frozen=True)
class Break(Stmt):
    pass


@dataclass(frozen=True)
class Continue(Stmt):
    pass


@dataclass(frozen=True)
class Pass(Stmt):
    pass


@dataclass(frozen=True)
class Comment(Node):
    text: str


@dataclass(frozen=True)
class Module(Node):
    body: tuple[Stmt, ...]
    comments: tuple[Comment, ...] = field(default=(), compare=False)

    def functions(self) -> dict[str, FunctionDef]:
        return {n.name: n for n in self.walk() if isinstance(n, FunctionDef)}


def to_json(node: Any, spans: bool = True) -> Any:
    """Dump a node tree as ``{"kind", "span", fields...}`` dictionaries."""
    if isinstance(node, Node):
        out: dict[str, Any] = {"kind": type(node).__name__}
        if spans:
            out["span"] = [node.span.line, node.span.col]
        for f in fields(node):
            if f.name == "span" or (f.name == "chain" and not spans):
                continue
            if f.name == "comments" and not spans:
                continue
            out[f.name] = to_json(getattr(node, f.name), spans)
        return out
    if isinstance(node, Span):
        return [node.line, node.col]
    if isinstance(node, tuple):
        return [to_json(v, spans) for v in node]
    return node
