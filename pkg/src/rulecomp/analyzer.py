"""Static conversion of a rule program into mapping-table accounting.

The mapping table size is ``sum_n + sum_m``:

* ``sum_n`` adds up the sizes of the distinct input-value combinations the
  program uses to decide outputs.  A combination comes from an entry of a
  letter-keyed dict, from letters sharing a source line with output values,
  or from the tests along one path of a tree of conditionals.  An ``else``
  arm stands for the other letter of every position its sibling tests name.
* ``sum_m`` counts output units lexically: each ``.``/``*`` inside a string
  literal, and each atomic unit on the right-hand side of a letter-keyed dict.

Input and output alphabets are disjoint, so every literal is attributable.
Comments are not part of the tree and never count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .core import INPUT_LETTERS, LETTER_BIT, SYMBOLS, complement
from .lang.nodes import (
    Assign,
    Attribute,
    AugAssign,
    Call,
    Const,
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
    Node,
    Return,
    Span,
    Stmt,
    Subscript,
    TupleExpr,
    UnaryOp,
    While,
)

_MUTATORS = frozenset({"append", "extend", "insert"})
_MAX_ROUNDS = 64


@dataclass(frozen=True)
class InputValueToken:
    """A literal letter, or a stand-in for an unnamed letter of ``bit`` (zero-based)."""

    bit: int
    letter: Optional[str] = None
    branch: str = ""

    @classmethod
    def literal(cls, letter: str) -> InputValueToken:
        return cls(LETTER_BIT[letter], letter)

    @property
    def hypothetical(self) -> bool:
        return self.letter is None

    def __str__(self) -> str:
        return self.letter if self.letter else f"~bit{self.bit + 1}[{self.branch}]"

    def __lt__(self, other: InputValueToken) -> bool:
        return (self.bit, self.letter or "", self.branch) < (other.bit, other.letter or "", other.branch)


Combination = frozenset  # frozenset[InputValueToken]


def one_per_bit(tokens: Iterable[InputValueToken]) -> frozenset:
    """Fold several tokens of one position (``s[0] in 'AB'``) into a single
    stand-in for that position, keyed by what was folded."""
    by_bit: dict[int, set[InputValueToken]] = {}
    for t in tokens:
        by_bit.setdefault(t.bit, set()).add(t)
    out = set()
    for bit, group in by_bit.items():
        if len(group) == 1:
            out |= group
        else:
            out.add(InputValueToken(bit, None, "+".join(sorted(t.letter or t.branch for t in group))))
    return frozenset(out)


def format_combination(combo: Iterable[InputValueToken]) -> str:
    return "{" + ", ".join(str(t) for t in sorted(combo)) + "}"


@dataclass(frozen=True)
class Facts:
    tokens: frozenset = frozenset()
    output: bool = False

    def __or__(self, other: Facts) -> Facts:
        if not other.tokens and not other.output:
            return self
        return Facts(self.tokens | other.tokens, self.output or other.output)


NOTHING = Facts()


@dataclass(frozen=True)
class CombinationSite:
    tokens: frozenset
    origin: str  # "dict" | "line" | "condition"
    span: Span


@dataclass(frozen=True)
class OutputUnit:
    span: Span
    text: str
    count: int
    origin: str  # "literal" | "mapping"


@dataclass
class MappingTable:
    combinations: list[frozenset]
    sum_n: int
    sum_m: int
    sites: list[CombinationSite] = field(default_factory=list)
    output_units: list[OutputUnit] = field(default_factory=list)
    uncounted: list[tuple[Span, str]] = field(default_factory=list)

    @property
    def l_plus(self) -> int:
        return self.sum_n + self.sum_m

    def to_json(self) -> dict:
        return {
            "sum_n": self.sum_n,
            "sum_m": self.sum_m,
            "l_plus": self.l_plus,
            "combinations": [
                {
                    "values": [str(t) for t in sorted(combo)],
                    "size": len(combo),
                    "sites": [
                        {"origin": s.origin, "span": [s.span.line, s.span.col]}
                        for s in self.sites
                        if s.tokens == combo
                    ],
                }
                for combo in self.combinations
            ],
            "output_units": [
                {"span": [u.span.line, u.span.col], "text": u.text, "count": u.count, "origin": u.origin}
                for u in self.output_units
            ],
            "uncounted_outputs": [{"span": [s.line, s.col], "note": note} for s, note in self.uncounted],
        }


# --- literal classification -------------------------------------------------


def literal_tokens(value: object) -> frozenset:
    if isinstance(value, str) and value and all(ch in INPUT_LETTERS for ch in value):
        return frozenset(InputValueToken.literal(ch) for ch in value)
    return frozenset()


def is_symbol_string(value: object) -> bool:
    return isinstance(value, str) and bool(value) and all(ch in SYMBOLS for ch in value)


def _is_coordinate(node: Expr) -> bool:
    def is_int(e: Expr) -> bool:
        if isinstance(e, UnaryOp) and e.op == "-":
            e = e.operand
        return isinstance(e, Const) and type(e.value) is int

    return isinstance(node, (TupleExpr, ListExpr)) and len(node.elts) >= 2 and all(is_int(e) for e in node.elts)


def atomic_units(node: Expr) -> int:
    """Output units on the right-hand side of a mapping entry."""
    if isinstance(node, Const):
        v = node.value
        if isinstance(v, str):
            if is_symbol_string(v):
                return len(v)
            if not v or literal_tokens(v):
                return 0
            return 1
        if v is None:
            return 0
        return 1
    if isinstance(node, UnaryOp) and node.op == "-" and isinstance(node.operand, Const):
        return atomic_units(node.operand)
    if _is_coordinate(node):
        return 1
    if isinstance(node, (ListExpr, TupleExpr)):
        return sum(atomic_units(e) for e in node.elts)
    if isinstance(node, DictExpr):
        return sum(atomic_units(k) + atomic_units(v) for k, v in zip(node.keys, node.values))
    # computed values (['****'] * 4, calls, ...): only the symbol literals
    # inside count; repetition counts and indices are not output units
    return sum(len(n.value) for n in _sub_expressions(node) if isinstance(n, Const) and is_symbol_string(n.value))


# --- scopes -----------------------------------------------------------------


def _assigned_names(target: Expr) -> Iterator[str]:
    if isinstance(target, Name):
        yield target.id
    elif isinstance(target, TupleExpr):
        for e in target.elts:
            yield from _assigned_names(e)


def _own_statements(body: Iterable[Stmt]) -> Iterator[Stmt]:
    """Statements of a block and its nested blocks, not entering function definitions."""
    for stmt in body:
        yield stmt
        if isinstance(stmt, If):
            for br in stmt.branches:
                yield from _own_statements(br.body)
            if stmt.orelse is not None:
                yield from _own_statements(stmt.orelse.body)
        elif isinstance(stmt, (For, While)):
            yield from _own_statements(stmt.body)


def _expressions(stmt: Stmt) -> Iterator[Expr]:
    """Top-level expressions of one statement (headers only for compound statements)."""
    if isinstance(stmt, Assign):
        yield stmt.target
        if stmt.value is not None:
            yield stmt.value
    elif isinstance(stmt, AugAssign):
        yield stmt.target
        yield stmt.value
    elif isinstance(stmt, (ExprStmt, Return)):
        if stmt.value is not None:
            yield stmt.value
    elif isinstance(stmt, If):
        for br in stmt.branches:
            yield br.test
    elif isinstance(stmt, For):
        yield stmt.target
        yield stmt.iter
    elif isinstance(stmt, While):
        yield stmt.test
    elif isinstance(stmt, FunctionDef):
        for p in stmt.params:
            if p.default is not None:
                yield p.default


def _sub_expressions(node: Node) -> Iterator[Node]:
    """All nodes below ``node`` without descending into nested statements."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(c for c in n.children() if isinstance(c, Expr))


class Annotation:
    """Flow-insensitive input-value and output involvement for every variable.

    Variables are scoped per function (parameters and assigned names are
    local, everything else is global).  Assignments, container mutation,
    loop targets, call arguments and return values all propagate facts until
    a fixpoint is reached.  A letter-keyed dict literal contributes no tokens
    to the expressions that use it; its entries are counted as mappings.
    """

    MODULE = 0

    def __init__(self, module: Module) -> None:
        self.module = module
        self.functions = module.functions()
        self.locals: dict[int, set[str]] = {self.MODULE: set()}
        self.scope_of_function: dict[str, int] = {}
        self.env: dict[tuple[int, str], Facts] = {}
        self.returns: dict[str, Facts] = {}
        self._collect_scopes(module.body, self.MODULE)
        self._fixpoint()

    # -- scopes -------------------------------------------------------------

    def _collect_scopes(self, body: Iterable[Stmt], scope: int) -> None:
        for stmt in _own_statements(body):
            if isinstance(stmt, FunctionDef):
                key = id(stmt)
                self.scope_of_function.setdefault(stmt.name, key)
                self.locals[key] = {p.name for p in stmt.params}
                self.locals[scope].add(stmt.name)
                self._collect_scopes(stmt.body, key)
                continue
            if isinstance(stmt, (Assign, For)):
                self.locals[scope].update(_assigned_names(stmt.target))
            elif isinstance(stmt, AugAssign) and isinstance(stmt.target, Name):
                self.locals[scope].add(stmt.target.id)
            for expr in _expressions(stmt):
                for n in _sub_expressions(expr):
                    if isinstance(n, ListComp):
                        self.locals[scope].update(_assigned_names(n.target))

    def resolve(self, name: str, scope: int) -> tuple[int, str]:
        if name in self.locals.get(scope, ()):
            return (scope, name)
        return (self.MODULE, name)

    def variable(self, name: str, scope: int = MODULE) -> Facts:
        return self.env.get(self.resolve(name, scope), NOTHING)

    # -- facts --------------------------------------------------------------

    def facts(self, node: Optional[Expr], scope: int) -> Facts:
        if node is None:
            return NOTHING
        if isinstance(node, Const):
            return Facts(literal_tokens(node.value), is_symbol_string(node.value))
        if isinstance(node, Name):
            return self.variable(node.id, scope)
        if isinstance(node, DictExpr):
            out = NOTHING
            for k, v in zip(node.keys, node.values):
                kf = self.facts(k, scope)
                vf = self.facts(v, scope)
                if kf.tokens:
                    out = out | Facts(frozenset(), vf.output or atomic_units(v) > 0)
                else:
                    out = out | kf | vf
            return out
        if isinstance(node, Call):
            out = NOTHING
            for a in node.args:
                out = out | self.facts(a, scope)
            if isinstance(node.func, Attribute):
                out = out | self.facts(node.func.value, scope)
            elif isinstance(node.func, Name) and node.func.id in self.functions:
                out = out | self.returns.get(node.func.id, NOTHING)
            return out
        out = NOTHING
        for child in node.children():
            if isinstance(child, Expr):
                out = out | self.facts(child, scope)
        return out

    def mapping_entries(self, node: DictExpr, scope: int) -> list[tuple[Expr, Expr, frozenset]]:
        entries = []
        for k, v in zip(node.keys, node.values):
            tokens = self.facts(k, scope).tokens
            if tokens:
                entries.append((k, v, tokens))
        return entries

    # -- propagation --------------------------------------------------------

    def _absorb(self, key: tuple[int, str], facts: Facts) -> None:
        old = self.env.get(key, NOTHING)
        new = old | facts
        if new != old:
            self.env[key] = new
            self._changed = True

    def _bind(self, target: Expr, facts: Facts, scope: int) -> None:
        if isinstance(target, Name):
            self._absorb(self.resolve(target.id, scope), facts)
        elif isinstance(target, Subscript):
            base = target.value
            while isinstance(base, Subscript):
                base = base.value
            if isinstance(base, Name):
                self._absorb(self.resolve(base.id, scope), facts)
        elif isinstance(target, TupleExpr):
            for e in target.elts:
                self._bind(e, facts, scope)

    def _flow_expr(self, expr: Expr, scope: int) -> None:
        for n in _sub_expressions(expr):
            if isinstance(n, ListComp):
                self._bind(n.target, self.facts(n.iter, scope), scope)
            elif isinstance(n, Call):
                func = n.func
                if isinstance(func, Attribute) and func.attr in _MUTATORS:
                    args = NOTHING
                    for a in n.args:
                        args = args | self.facts(a, scope)
                    self._bind(func.value, args, scope)
                elif isinstance(func, Name) and func.id in self.functions:
                    callee = self.functions[func.id]
                    key = self.scope_of_function[func.id]
                    for p, a in zip(callee.params, n.args):
                        self._absorb((key, p.name), self.facts(a, scope))

    def _flow_block(self, body: Iterable[Stmt], scope: int, function: Optional[str]) -> None:
        for stmt in _own_statements(body):
            if isinstance(stmt, FunctionDef):
                self._flow_block(stmt.body, id(stmt), stmt.name)
                continue
            for expr in _expressions(stmt):
                self._flow_expr(expr, scope)
            if isinstance(stmt, Assign) and stmt.value is not None:
                self._bind(stmt.target, self.facts(stmt.value, scope), scope)
            elif isinstance(stmt, AugAssign):
                self._bind(stmt.target, self.facts(stmt.value, scope), scope)
            elif isinstance(stmt, For):
                self._bind(stmt.target, self.facts(stmt.iter, scope), scope)
            elif isinstance(stmt, Return) and function is not None:
                old = self.returns.get(function, NOTHING)
                new = old | self.facts(stmt.value, scope)
                if new != old:
                    self.returns[function] = new
                    self._changed = True

    def _fixpoint(self) -> None:
        for _ in range(_MAX_ROUNDS):
            self._changed = False
            self._flow_block(self.module.body, self.MODULE, None)
            if not self._changed:
                return


def collect_input_values(module: Module) -> Annotation:
    return Annotation(module)


# --- combinations -----------------------------------------------------------


class _Enumerator:
    def __init__(self, ann: Annotation) -> None:
        self.ann = ann
        self.sites: list[CombinationSite] = []
        self.nested_dicts: set[int] = set()

    def emit(self, tokens: frozenset, origin: str, span: Span) -> None:
        if tokens:
            self.sites.append(CombinationSite(one_per_bit(tokens), origin, span))

    # dict entries ------------------------------------------------------------

    def dict_entries(self, node: DictExpr, scope: int, prefix: frozenset) -> None:
        for k, v, tokens in self.ann.mapping_entries(node, scope):
            combo = prefix | tokens
            if isinstance(v, DictExpr) and self.ann.mapping_entries(v, scope):
                self.nested_dicts.add(id(v))
                self.dict_entries(v, scope, combo)
            elif atomic_units(v) > 0 or self.ann.facts(v, scope).output:
                self.emit(combo, "dict", k.span)

    # same line -------------------------------------------------------------

    def line_leaves(self, expr: Expr, scope: int, lines: dict[int, list[Facts]], target: bool = False) -> None:
        ann = self.ann
        if isinstance(expr, Const):
            lines.setdefault(expr.span.line, []).append(ann.facts(expr, scope))
        elif isinstance(expr, Name):
            facts = ann.variable(expr.id, scope)
            if target:
                facts = Facts(frozenset(), facts.output)
            lines.setdefault(expr.span.line, []).append(facts)
        elif isinstance(expr, DictExpr):
            mapped = {id(k) for k, _, _ in ann.mapping_entries(expr, scope)}
            for k, v in zip(expr.keys, expr.values):
                if id(k) in mapped:
                    continue
                self.line_leaves(k, scope, lines)
                self.line_leaves(v, scope, lines)
        elif isinstance(expr, IfExp):
            for arm in _ifexp_arms(expr)[1]:
                self.line_leaves(arm, scope, lines)
        elif isinstance(expr, Call):
            func = expr.func
            if isinstance(func, Attribute):
                self.line_leaves(func.value, scope, lines)
            elif isinstance(func, Name) and func.id in ann.functions:
                lines.setdefault(expr.span.line, []).append(ann.returns.get(func.id, NOTHING))
            for a in expr.args:
                self.line_leaves(a, scope, lines)
        elif isinstance(expr, Subscript) and target:
            self.line_leaves(expr.value, scope, lines, target=True)
            self.line_leaves(expr.index, scope, lines)
        elif isinstance(expr, TupleExpr) and target:
            for e in expr.elts:
                self.line_leaves(e, scope, lines, target=True)
        else:
            for child in expr.children():
                if isinstance(child, Expr):
                    self.line_leaves(child, scope, lines)

    def line_combinations(self, body: Iterable[Stmt], scope: int) -> None:
        lines: dict[int, list[Facts]] = {}
        self._collect_lines(body, scope, lines)
        for line in sorted(lines):
            facts = NOTHING
            for f in lines[line]:
                facts = facts | f
            if facts.tokens and facts.output:
                self.emit(facts.tokens, "line", Span(line, 0))

    def _collect_lines(self, body: Iterable[Stmt], scope: int, lines: dict[int, list[Facts]]) -> None:
        for stmt in _own_statements(body):
            if isinstance(stmt, FunctionDef):
                sub: dict[int, list[Facts]] = {}
                self._collect_lines(stmt.body, id(stmt), sub)
                for line, facts in sub.items():
                    lines.setdefault(line, []).extend(facts)
                for p in stmt.params:
                    if p.default is not None:
                        self.line_leaves(p.default, scope, lines)
                continue
            if isinstance(stmt, If):
                continue  # tests belong to the condition tree
            if isinstance(stmt, (Assign, AugAssign)):
                self.line_leaves(stmt.target, scope, lines, target=True)
                if stmt.value is not None:
                    self.line_leaves(stmt.value, scope, lines)
            elif isinstance(stmt, For):
                self.line_leaves(stmt.target, scope, lines, target=True)
                self.line_leaves(stmt.iter, scope, lines)
            else:
                for expr in _expressions(stmt):
                    self.line_leaves(expr, scope, lines)

    # condition trees -------------------------------------------------------

    def stmt_involves_output(self, stmt: Stmt, scope: int) -> bool:
        ann = self.ann
        if isinstance(stmt, (If, FunctionDef)):
            return False
        if isinstance(stmt, (Assign, AugAssign)):
            target = NOTHING
            base = stmt.target
            while isinstance(base, Subscript):
                base = base.value
            if isinstance(base, Name):
                target = ann.variable(base.id, scope)
            return target.output or ann.facts(stmt.value, scope).output
        if isinstance(stmt, (For, While)):
            header = stmt.iter if isinstance(stmt, For) else stmt.test
            return ann.facts(header, scope).output or any(self.stmt_involves_output(s, scope) for s in stmt.body)
        return any(ann.facts(e, scope).output for e in _expressions(stmt))

    def arm_involves_output(self, body: Iterable[Stmt], scope: int) -> bool:
        return any(self.stmt_involves_output(s, scope) for s in body)

    def else_tokens(self, tests: list[frozenset], key: str) -> frozenset:
        mentioned: dict[int, set[str]] = {}
        for tokens in tests:
            for t in tokens:
                if t.letter is not None:
                    mentioned.setdefault(t.bit, set()).add(t.letter)
        out = set()
        for bit, letters in mentioned.items():
            if len(letters) == 1:
                out.add(InputValueToken.literal(complement(next(iter(letters)))))
            else:
                out.add(InputValueToken(bit, None, "".join(sorted(letters)) + key))
        return frozenset(out)

    def condition_trees(self, body: Iterable[Stmt], scope: int, chain: frozenset) -> None:
        for stmt in body:
            if isinstance(stmt, FunctionDef):
                self.condition_trees(stmt.body, id(stmt), frozenset())
                continue
            for expr in _expressions(stmt):
                self.expression_trees(expr, scope, chain)
            if isinstance(stmt, If):
                tests = [self.ann.facts(br.test, scope).tokens for br in stmt.branches]
                for br, tokens in zip(stmt.branches, tests):
                    path = chain | tokens
                    if tokens and self.arm_involves_output(br.body, scope):
                        self.emit(path, "condition", br.span)
                    self.condition_trees(br.body, scope, path)
                if stmt.orelse is not None:
                    hyp = self.else_tokens(tests, "")
                    path = chain | hyp
                    if hyp and self.arm_involves_output(stmt.orelse.body, scope):
                        self.emit(path, "condition", stmt.orelse.span)
                    self.condition_trees(stmt.orelse.body, scope, path)
            elif isinstance(stmt, (For, While)):
                self.condition_trees(stmt.body, scope, chain)

    def expression_trees(self, expr: Expr, scope: int, chain: frozenset) -> None:
        if isinstance(expr, IfExp):
            tests, arms = _ifexp_arms(expr)
            test_tokens = [self.ann.facts(t, scope).tokens for t in tests]
            for t in tests:
                self.expression_trees(t, scope, chain)
            for i, arm in enumerate(arms):
                if i < len(tests):
                    tokens = test_tokens[i]
                else:
                    tokens = self.else_tokens(test_tokens, "")
                path = chain | tokens
                if tokens and self.ann.facts(arm, scope).output:
                    self.emit(path, "condition", arm.span)
                self.expression_trees(arm, scope, path)
            return
        for child in expr.children():
            if isinstance(child, Expr):
                self.expression_trees(child, scope, chain)


def _ifexp_arms(node: IfExp) -> tuple[list[Expr], list[Expr]]:
    """Flatten ``a if t1 else b if t2 else c`` into tests [t1, t2] and arms [a, b, c]."""
    tests: list[Expr] = []
    arms: list[Expr] = []
    cur: Expr = node
    while isinstance(cur, IfExp):
        tests.append(cur.test)
        arms.append(cur.body)
        cur = cur.orelse
    arms.append(cur)
    return tests, arms


def _scoped_dicts(body: Iterable[Stmt], scope: int) -> Iterator[tuple[DictExpr, int]]:
    for stmt in _own_statements(body):
        if isinstance(stmt, FunctionDef):
            yield from _scoped_dicts(stmt.body, id(stmt))
        for expr in _expressions(stmt):
            for n in _sub_expressions(expr):
                if isinstance(n, DictExpr):
                    yield n, scope


def _scoped_consts(body: Iterable[Stmt], scope: int) -> Iterator[tuple[Const, int]]:
    for stmt in _own_statements(body):
        if isinstance(stmt, FunctionDef):
            yield from _scoped_consts(stmt.body, id(stmt))
        for expr in _expressions(stmt):
            for n in _sub_expressions(expr):
                if isinstance(n, Const):
                    yield n, scope


def enumerate_combinations(ann: Annotation) -> list[CombinationSite]:
    """Every place a combination of input values decides output, before dedup."""
    en = _Enumerator(ann)
    body = ann.module.body
    dicts = list(_scoped_dicts(body, Annotation.MODULE))
    # outer dicts first so nested mapping tables are claimed by their parent
    for node, scope in dicts:
        if id(node) not in en.nested_dicts:
            en.dict_entries(node, scope, frozenset())
    en.line_combinations(body, Annotation.MODULE)
    en.condition_trees(body, Annotation.MODULE, frozenset())
    return en.sites


def dedupe_and_sum_n(combos: Iterable[frozenset]) -> tuple[list[frozenset], int]:
    """Merge exact duplicates only; strict subsets stay separate mappings."""
    distinct: list[frozenset] = []
    seen: set[frozenset] = set()
    for combo in combos:
        if combo not in seen:
            seen.add(combo)
            distinct.append(combo)
    return distinct, sum(len(c) for c in distinct)


def sum_output_lengths(ann: Annotation) -> tuple[int, list[OutputUnit], list[tuple[Span, str]]]:
    """Lexical count of output units (loops are not unrolled)."""
    units: list[OutputUnit] = []
    uncounted: list[tuple[Span, str]] = []
    inside_mapping: set[int] = set()
    body = ann.module.body

    def mapping_values(node: DictExpr, scope: int) -> None:
        for k, v, _ in ann.mapping_entries(node, scope):
            if isinstance(v, DictExpr) and ann.mapping_entries(v, scope):
                inside_mapping.add(id(v))
                mapping_values(v, scope)
                continue
            for n in _sub_expressions(v):
                inside_mapping.add(id(n))
            count = atomic_units(v)
            if count:
                units.append(OutputUnit(v.span, _short(v), count, "mapping"))
            elif ann.facts(v, scope).output:
                uncounted.append((v.span, "mapping value refers to outputs defined elsewhere"))

    for node, scope in _scoped_dicts(body, Annotation.MODULE):
        if id(node) not in inside_mapping:
            mapping_values(node, scope)
    for node, _ in _scoped_consts(body, Annotation.MODULE):
        if id(node) in inside_mapping:
            continue
        if is_symbol_string(node.value):
            units.append(OutputUnit(node.span, str(node.value), len(node.value), "literal"))
    for stmt in _own_statements_all(body):
        if isinstance(stmt, (Assign, AugAssign)) and isinstance(stmt.target, Subscript) and stmt.value is not None:
            if not _has_output_syntax(stmt.value):
                uncounted.append((stmt.span, "output cell written from a computed value"))
    units.sort(key=lambda u: (u.span.line, u.span.col))
    return sum(u.count for u in units), units, uncounted


def _own_statements_all(body: Iterable[Stmt]) -> Iterator[Stmt]:
    for stmt in _own_statements(body):
        yield stmt
        if isinstance(stmt, FunctionDef):
            yield from _own_statements_all(stmt.body)


def _has_output_syntax(expr: Expr) -> bool:
    return any(isinstance(n, Const) and is_symbol_string(n.value) for n in _sub_expressions(expr))


def _short(node: Expr, limit: int = 40) -> str:
    from .lang.printer import expr as render

    text = render(node)
    return text if len(text) <= limit else text[: limit - 3] + "..."


def analyze(module: Module) -> MappingTable:
    ann = Annotation(module)
    sites = sorted(enumerate_combinations(ann), key=lambda s: (s.span, s.origin))
    combos, sum_n = dedupe_and_sum_n(s.tokens for s in sites)
    sum_m, units, uncounted = sum_output_lengths(ann)
    return MappingTable(combos, sum_n, sum_m, sites, units, uncounted)
