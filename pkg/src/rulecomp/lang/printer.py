"""Render an AST back to source text that parses to the same structure."""

from __future__ import annotations

from .nodes import (
    Assign,
    Attribute,
    AugAssign,
    BinOp,
    BoolOp,
    Break,
    Call,
    Compare,
    Const,
    Continue,
    DictExpr,
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
    Pass,
    Return,
    Slice,
    Stmt,
    Subscript,
    TupleExpr,
    UnaryOp,
    While,
)

INDENT = "    "
_SIMPLE = (Name, Const, ListExpr, DictExpr, Subscript, Call, ListComp)


def quote(text: str) -> str:
    out = ["'"]
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == "'":
            out.append("\\'")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif not ch.isprintable():
            code = ord(ch)
            out.append(f"\\x{code:02x}" if code < 0x100 else f"\\u{code:04x}" if code < 0x10000 else f"\\U{code:08x}")
        else:
            out.append(ch)
    out.append("'")
    return "".join(out)


def _wrap(node: Expr) -> str:
    text = expr(node)
    return text if isinstance(node, _SIMPLE) else f"({text})"


def expr(node: Expr) -> str:
    if isinstance(node, Name):
        return node.id
    if isinstance(node, Const):
        if isinstance(node.value, str):
            return quote(node.value)
        return repr(node.value)
    if isinstance(node, ListExpr):
        return "[" + ", ".join(expr(e) for e in node.elts) + "]"
    if isinstance(node, TupleExpr):
        if len(node.elts) == 1:
            return "(" + expr(node.elts[0]) + ",)"
        return "(" + ", ".join(expr(e) for e in node.elts) + ")"
    if isinstance(node, DictExpr):
        items = (f"{expr(k)}: {expr(v)}" for k, v in zip(node.keys, node.values))
        return "{" + ", ".join(items) + "}"
    if isinstance(node, Subscript):
        if isinstance(node.index, TupleExpr) and node.index.elts:
            index = ", ".join(expr(e) for e in node.index.elts)
            if len(node.index.elts) == 1:
                index += ","
        else:
            index = expr(node.index)
        return f"{_wrap(node.value)}[{index}]"
    if isinstance(node, Slice):
        parts = [expr(p) if p is not None else "" for p in (node.lower, node.upper)]
        text = ":".join(parts)
        if node.step is not None:
            text += ":" + expr(node.step)
        return text
    if isinstance(node, Attribute):
        return f"{_wrap(node.value)}.{node.attr}"
    if isinstance(node, Call):
        return f"{_wrap(node.func) if not isinstance(node.func, Attribute) else expr(node.func)}(" + ", ".join(
            expr(a) for a in node.args
        ) + ")"
    if isinstance(node, BinOp):
        return f"{_wrap(node.left)} {node.op} {_wrap(node.right)}"
    if isinstance(node, UnaryOp):
        sep = " " if node.op == "not" else ""
        return f"{node.op}{sep}{_wrap(node.operand)}"
    if isinstance(node, BoolOp):
        return f" {node.op} ".join(_wrap(v) for v in node.values)
    if isinstance(node, Compare):
        parts = [_wrap(node.left)]
        for op, right in zip(node.ops, node.comparators):
            parts.append(f"{op} {_wrap(right)}")
        return " ".join(parts)
    if isinstance(node, IfExp):
        return f"{_wrap(node.body)} if {_wrap(node.test)} else {_wrap(node.orelse)}"
    if isinstance(node, ListComp):
        text = f"[{expr(node.elt)} for {_target(node.target)} in {_wrap(node.iter)}"
        for cond in node.ifs:
            text += f" if {_wrap(cond)}"
        return text + "]"
    raise TypeError(f"cannot render {type(node).__name__}")


def _target(node: Expr) -> str:
    if isinstance(node, TupleExpr):
        inner = ", ".join(_target(e) for e in node.elts)
        return f"({inner},)" if len(node.elts) == 1 else f"({inner})"
    return expr(node)


def _block(body: tuple[Stmt, ...], level: int) -> list[str]:
    lines: list[str] = []
    for stmt in body:
        lines.extend(statement(stmt, level))
    return lines


def statement(node: Stmt, level: int = 0) -> list[str]:
    pad = INDENT * level
    if isinstance(node, FunctionDef):
        params = []
        for p in node.params:
            text = p.name
            if p.annotation is not None:
                text += f": {expr(p.annotation)}"
            if p.default is not None:
                text += f" = {expr(p.default)}" if p.annotation is not None else f"={expr(p.default)}"
            params.append(text)
        head = f"{pad}def {node.name}({', '.join(params)})"
        if node.returns is not None:
            head += f" -> {expr(node.returns)}"
        return [head + ":", *_block(node.body, level + 1)]
    if isinstance(node, If):
        lines = []
        for i, branch in enumerate(node.branches):
            kw = "if" if i == 0 else "elif"
            lines.append(f"{pad}{kw} {expr(branch.test)}:")
            lines.extend(_block(branch.body, level + 1))
        if node.orelse is not None:
            lines.append(f"{pad}else:")
            lines.extend(_block(node.orelse.body, level + 1))
        return lines
    if isinstance(node, For):
        return [f"{pad}for {_target(node.target)} in {expr(node.iter)}:", *_block(node.body, level + 1)]
    if isinstance(node, While):
        return [f"{pad}while {expr(node.test)}:", *_block(node.body, level + 1)]
    if isinstance(node, Assign):
        text = _target(node.target)
        if node.annotation is not None:
            text += f": {expr(node.annotation)}"
        if node.value is not None:
            text += f" = {expr(node.value)}"
        return [pad + text]
    if isinstance(node, AugAssign):
        return [f"{pad}{expr(node.target)} {node.op}= {expr(node.value)}"]
    if isinstance(node, ExprStmt):
        return [pad + expr(node.value)]
    if isinstance(node, Return):
        return [pad + ("return" if node.value is None else f"return {expr(node.value)}")]
    if isinstance(node, Break):
        return [pad + "break"]
    if isinstance(node, Continue):
        return [pad + "continue"]
    if isinstance(node, Pass):
        return [pad + "pass"]
    raise TypeError(f"cannot render {type(node).__name__}")


def unparse(module: Module) -> str:
    return "\n".join(_block(module.body, 0)) + "\n"
