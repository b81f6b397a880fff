"""Bounded tree-walking execution of rule programs.

Each run starts from a fresh environment, executes the module body, then
calls the entry point.  Every statement and expression costs one step; bulk
builtins cost one step per element produced.  Budgets are checked *before*
work is done, so a run never exceeds ``max_steps``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .core import GRID_SIZE, SYMBOLS, Dataset, Grid, InputString, grids_equal
from .lang.nodes import (
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
    Span,
    Stmt,
    Subscript,
    TupleExpr,
    UnaryOp,
    While,
)
from .lang.parser import BUILTINS, METHODS

logger = logging.getLogger(__name__)

ENTRY_POINT = "generate"
FALLBACK_INPUT = "s"
FALLBACK_RESULT = "result"
MAX_CALL_DEPTH = 32
MAX_INT_BITS = 64


@dataclass(frozen=True)
class ExecBudget:
    max_steps: int = 100_000
    max_collection_size: int = 4096

    def __post_init__(self) -> None:
        if self.max_steps <= 0 or self.max_collection_size <= 0:
            raise ValueError("budgets must be positive")


class RuntimeFailure(Exception):
    def __init__(self, kind: str, message: str, span: Span | None = None) -> None:
        super().__init__(message)
        self.kind = kind
        self.message = message
        self.span = span


@dataclass(frozen=True)
class RunResult:
    input: str
    grid: Optional[Grid]
    steps: int
    failure_kind: Optional[str] = None
    failure: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.grid is not None

    def to_json(self) -> dict:
        return {
            "input": self.input,
            "output": list(self.grid.rows) if self.grid else None,
            "steps": self.steps,
            "failure_kind": self.failure_kind,
            "failure": self.failure,
        }


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


class _Return(Exception):
    def __init__(self, value: Any) -> None:
        self.value = value


class _Frame:
    __slots__ = ("vars", "parent")

    def __init__(self, parent: Optional[_Frame] = None) -> None:
        self.vars: dict[str, Any] = {}
        self.parent = parent

    def lookup(self, name: str) -> Any:
        frame: Optional[_Frame] = self
        while frame is not None:
            if name in frame.vars:
                return frame.vars[name]
            frame = frame.parent
        raise KeyError(name)


@dataclass(repr=False)
class _Function:
    node: FunctionDef
    closure: _Frame
    defaults: dict[str, Any] = field(default_factory=dict)

    def __repr__(self) -> str:
        return f"<function {self.node.name}>"


class _Machine:
    def __init__(self, module: Module, budget: ExecBudget) -> None:
        self.module = module
        self.budget = budget
        self.steps = 0
        self.call_depth = 0
        self.builtins: dict[str, Callable[..., Any]] = {
            "range": self._range,
            "len": lambda x: len(x),
            "list": lambda x=(): self._materialize(x),
            "tuple": lambda x=(): tuple(self._materialize(x)),
            "dict": self._dict,
            "str": lambda x="": self._str(x),
            "int": lambda x=0: int(x),
            "bool": lambda x=False: bool(x),
            "print": lambda *args: None,
            "enumerate": lambda x, start=0: [(i + start, v) for i, v in enumerate(self._materialize(x))],
            "zip": self._zip,
            "min": lambda *a: min(*self._spread(a)),
            "max": lambda *a: max(*self._spread(a)),
            "abs": abs,
            "sum": self._sum,
            "sorted": lambda x: sorted(self._materialize(x)),
            "reversed": lambda x: list(reversed(self._materialize(x))),
            "ord": ord,
            "chr": chr,
            "any": lambda x: any(self._materialize(x)),
            "all": lambda x: all(self._materialize(x)),
        }
        assert set(self.builtins) == BUILTINS

    # -- budget -------------------------------------------------------------

    def charge(self, n: int = 1) -> None:
        if self.steps + n > self.budget.max_steps:
            self.steps = self.budget.max_steps
            raise RuntimeFailure("step_budget", f"step budget of {self.budget.max_steps} exhausted")
        self.steps += n

    def check(self, value: Any) -> Any:
        if isinstance(value, bool) or value is None:
            return value
        if isinstance(value, int):
            if value.bit_length() > MAX_INT_BITS:
                raise RuntimeFailure("value_budget", "integer too large")
        elif isinstance(value, (str, list, tuple, dict)):
            if len(value) > self.budget.max_collection_size:
                raise RuntimeFailure("collection_budget", f"collection larger than {self.budget.max_collection_size}")
        return value

    def _materialize(self, iterable: Any) -> list:
        if isinstance(iterable, (int, bool)) or iterable is None or isinstance(iterable, (_Function,)):
            raise TypeError(f"{type(iterable).__name__} is not iterable")
        if isinstance(iterable, range):
            self.charge(max(len(iterable), 1))
            self.check_size(len(iterable))
            return list(iterable)
        if isinstance(iterable, dict):
            items = list(iterable)
        elif isinstance(iterable, (str, list, tuple)):
            items = list(iterable)
        else:
            raise TypeError(f"{type(iterable).__name__} is not iterable")
        self.charge(max(len(items), 1))
        return items

    def check_size(self, n: int) -> None:
        if n > self.budget.max_collection_size:
            raise RuntimeFailure("collection_budget", f"collection larger than {self.budget.max_collection_size}")

    def _spread(self, args: tuple) -> list:
        if len(args) == 1:
            return [self._materialize(args[0])]
        return list(args)

    # -- builtins -----------------------------------------------------------

    def _range(self, *args: Any) -> range:
        if not all(isinstance(a, int) for a in args):
            raise TypeError("range arguments must be integers")
        return range(*args)

    def _dict(self, x: Any = None) -> dict:
        if x is None:
            return {}
        if isinstance(x, dict):
            return dict(x)
        return dict(self._materialize(x))

    def _sum(self, x: Any, start: Any = 0) -> int:
        items = self._materialize(x)
        if not all(isinstance(v, int) for v in [*items, start]):
            raise TypeError("sum() only adds integers")
        return sum(items, start)

    def _zip(self, *iterables: Any) -> list:
        lists = [self._materialize(x) for x in iterables]
        return list(zip(*lists))

    def _str(self, x: Any) -> str:
        if isinstance(x, _Function):
            return f"<function {x.node.name}>"
        if isinstance(x, (list, tuple, dict)):
            self.charge(max(len(x), 1))
        return str(x)

    # -- statements ---------------------------------------------------------

    def run_module(self, frame: _Frame) -> None:
        self.exec_block(self.module.body, frame)

    def exec_block(self, body: tuple[Stmt, ...], frame: _Frame) -> None:
        for stmt in body:
            self.exec_stmt(stmt, frame)

    def exec_stmt(self, node: Stmt, frame: _Frame) -> None:
        self.charge()
        try:
            self._exec(node, frame)
        except (RuntimeFailure, _Break, _Continue, _Return):
            raise
        except RecursionError:
            raise RuntimeFailure("recursion", "nesting too deep", node.span) from None
        except Exception as exc:  # noqa: BLE001 - every host error is a program failure
            raise RuntimeFailure(type(exc).__name__, str(exc) or type(exc).__name__, node.span) from None

    def _exec(self, node: Stmt, frame: _Frame) -> None:
        if isinstance(node, Assign):
            if node.value is not None:
                self.assign(node.target, self.eval(node.value, frame), frame)
        elif isinstance(node, ExprStmt):
            self.eval(node.value, frame)
        elif isinstance(node, AugAssign):
            current = self.eval(node.target, frame)
            value = self.binop(node.op, current, self.eval(node.value, frame))
            self.assign(node.target, value, frame)
        elif isinstance(node, If):
            for branch in node.branches:
                if self.truth(self.eval(branch.test, frame)):
                    self.exec_block(branch.body, frame)
                    return
            if node.orelse is not None:
                self.exec_block(node.orelse.body, frame)
        elif isinstance(node, For):
            for item in self.iterate(self.eval(node.iter, frame)):
                self.charge()
                self.assign(node.target, item, frame)
                try:
                    self.exec_block(node.body, frame)
                except _Break:
                    break
                except _Continue:
                    continue
        elif isinstance(node, While):
            while self.truth(self.eval(node.test, frame)):
                self.charge()
                try:
                    self.exec_block(node.body, frame)
                except _Break:
                    break
                except _Continue:
                    continue
        elif isinstance(node, Return):
            raise _Return(None if node.value is None else self.eval(node.value, frame))
        elif isinstance(node, FunctionDef):
            defaults = {p.name: self.eval(p.default, frame) for p in node.params if p.default is not None}
            frame.vars[node.name] = _Function(node, frame, defaults)
        elif isinstance(node, Break):
            raise _Break()
        elif isinstance(node, Continue):
            raise _Continue()
        elif isinstance(node, Pass):
            pass
        else:  # pragma: no cover
            raise RuntimeFailure("unsupported", f"cannot execute {type(node).__name__}", node.span)

    def iterate(self, value: Any):
        if isinstance(value, dict):
            # snapshot keys, mirroring the host error on mutation during iteration
            keys = list(value)
            for k in keys:
                if len(value) != len(keys):
                    raise RuntimeError("dictionary changed size during iteration")
                yield k
            return
        if isinstance(value, (list, str, tuple, range)):
            # lists are walked live so appends during iteration keep going (bounded by budgets)
            i = 0
            while i < len(value):
                yield value[i]
                i += 1
            return
        raise TypeError(f"{type(value).__name__} is not iterable")

    def assign(self, target: Expr, value: Any, frame: _Frame) -> None:
        if isinstance(target, Name):
            frame.vars[target.id] = value
        elif isinstance(target, Subscript):
            container = self.eval(target.value, frame)
            if isinstance(target.index, Slice):
                raise TypeError("slice assignment is not supported")
            key = self.eval(target.index, frame)
            if isinstance(container, list):
                container[key] = value
            elif isinstance(container, dict):
                container[key] = value
                self.check(container)
            else:
                raise TypeError(f"{type(container).__name__} does not support item assignment")
        elif isinstance(target, TupleExpr):
            items = self._materialize(value)
            if len(items) != len(target.elts):
                raise ValueError(f"expected {len(target.elts)} values to unpack, got {len(items)}")
            for sub, item in zip(target.elts, items):
                self.assign(sub, item, frame)
        else:  # pragma: no cover
            raise TypeError("invalid assignment target")

    # -- expressions --------------------------------------------------------

    @staticmethod
    def truth(value: Any) -> bool:
        if isinstance(value, _Function):
            return True
        return bool(value)

    def eval(self, node: Expr, frame: _Frame) -> Any:
        self.charge()
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Name):
            try:
                return frame.lookup(node.id)
            except KeyError:
                if node.id in self.builtins:
                    return self.builtins[node.id]
                raise RuntimeFailure("undefined_name", f"name {node.id!r} is not defined", node.span) from None
        if isinstance(node, ListExpr):
            self.check_size(len(node.elts))
            return [self.eval(e, frame) for e in node.elts]
        if isinstance(node, TupleExpr):
            self.check_size(len(node.elts))
            return tuple(self.eval(e, frame) for e in node.elts)
        if isinstance(node, DictExpr):
            out = {}
            for k, v in zip(node.keys, node.values):
                out[self.eval(k, frame)] = self.eval(v, frame)
            return self.check(out)
        if isinstance(node, Subscript):
            container = self.eval(node.value, frame)
            if isinstance(node.index, Slice):
                parts = [None if p is None else self.eval(p, frame) for p in (node.index.lower, node.index.upper, node.index.step)]
                if not isinstance(container, (str, list, tuple)):
                    raise TypeError(f"{type(container).__name__} cannot be sliced")
                if parts[2] == 0:
                    raise ValueError("slice step cannot be zero")
                result = container[slice(*parts)]
                self.charge(max(len(result), 1))
                return result
            key = self.eval(node.index, frame)
            if isinstance(container, (str, list, tuple)):
                if isinstance(key, bool) or not isinstance(key, int):
                    raise TypeError("indices must be integers")
                return container[key]
            if isinstance(container, dict):
                return container[key]
            raise TypeError(f"{type(container).__name__} is not subscriptable")
        if isinstance(node, BinOp):
            return self.binop(node.op, self.eval(node.left, frame), self.eval(node.right, frame))
        if isinstance(node, UnaryOp):
            value = self.eval(node.operand, frame)
            if node.op == "not":
                return not self.truth(value)
            if not isinstance(value, int):
                raise TypeError(f"bad operand for unary {node.op}")
            return self.check(-value if node.op == "-" else +value)
        if isinstance(node, BoolOp):
            value = None
            for sub in node.values:
                value = self.eval(sub, frame)
                if (node.op == "and") != self.truth(value):
                    return value
            return value
        if isinstance(node, Compare):
            left = self.eval(node.left, frame)
            for op, right_node in zip(node.ops, node.comparators):
                right = self.eval(right_node, frame)
                if not self.compare(op, left, right):
                    return False
                left = right
            return True
        if isinstance(node, IfExp):
            branch = node.body if self.truth(self.eval(node.test, frame)) else node.orelse
            return self.eval(branch, frame)
        if isinstance(node, ListComp):
            inner = _Frame(frame)
            out = []
            for item in self.iterate(self.eval(node.iter, frame)):
                self.charge()
                self.assign(node.target, item, inner)
                if all(self.truth(self.eval(c, inner)) for c in node.ifs):
                    out.append(self.eval(node.elt, inner))
                    self.check_size(len(out))
            return out
        if isinstance(node, Call):
            return self.call(node, frame)
        raise RuntimeFailure("unsupported", f"cannot evaluate {type(node).__name__}", node.span)

    def binop(self, op: str, left: Any, right: Any) -> Any:
        if op == "*":
            for seq, n in ((left, right), (right, left)):
                if isinstance(seq, (str, list, tuple)) and isinstance(n, int):
                    size = len(seq) * max(n, 0)
                    self.check_size(size)
                    self.charge(max(size // 8, 1))
        if op == "+" and isinstance(left, (str, list, tuple)) and isinstance(right, type(left)):
            self.check_size(len(left) + len(right))
            self.charge(max((len(left) + len(right)) // 8, 1))
        if isinstance(left, (dict, _Function)) or isinstance(right, (dict, _Function)) or left is None or right is None:
            raise TypeError(f"unsupported operand types for {op}")
        if op == "+":
            result = left + right
        elif op == "-":
            result = left - right
        elif op == "*":
            result = left * right
        elif op == "//":
            result = left // right
        elif op == "%":
            if isinstance(left, str):
                raise TypeError("string formatting is not supported")
            result = left % right
        else:
            raise TypeError(f"unsupported operator {op}")
        return self.check(result)

    def compare(self, op: str, left: Any, right: Any) -> bool:
        if op == "==":
            return left == right
        if op == "!=":
            return left != right
        if op == "in":
            return left in self._container(right)
        if op == "not in":
            return left not in self._container(right)
        if op == "is":
            return left is right if left is None or right is None else left == right and type(left) is type(right)
        if op == "is not":
            return not self.compare("is", left, right)
        if isinstance(left, (dict, _Function)) or isinstance(right, (dict, _Function)):
            raise TypeError(f"'{op}' not supported")
        if op == "<":
            return left < right
        if op == ">":
            return left > right
        if op == "<=":
            return left <= right
        if op == ">=":
            return left >= right
        raise TypeError(f"unknown comparison {op}")

    def _container(self, value: Any) -> Any:
        if isinstance(value, (str, list, tuple, dict, range)):
            self.charge(max(len(value) // 8, 1))
            return value
        raise TypeError(f"argument of type {type(value).__name__} is not iterable")

    def call(self, node: Call, frame: _Frame) -> Any:
        if isinstance(node.func, Attribute):
            receiver = self.eval(node.func.value, frame)
            args = [self.eval(a, frame) for a in node.args]
            return self.method(receiver, node.func.attr, args)
        func = self.eval(node.func, frame)
        args = [self.eval(a, frame) for a in node.args]
        if isinstance(func, _Function):
            return self.invoke(func, args)
        if callable(func) and func in self.builtins.values():
            return self.check(func(*args))
        raise TypeError(f"{type(func).__name__} object is not callable")

    def method(self, receiver: Any, name: str, args: list) -> Any:
        if name not in METHODS or not isinstance(receiver, (str, list, dict, tuple)):
            raise TypeError(f"{type(receiver).__name__} has no method {name!r}")
        bound = getattr(receiver, name, None)
        if bound is None:
            raise TypeError(f"{type(receiver).__name__} has no method {name!r}")
        if name == "join":
            args = [self._materialize(args[0])] + args[1:] if args else args
        elif name == "extend" and args:
            args = [self._materialize(args[0])]
            self.check_size(len(receiver) + len(args[0]))
        elif name == "replace" and len(args) >= 2 and isinstance(args[0], str) and isinstance(args[1], str):
            count = receiver.count(args[0]) if args[0] else len(receiver) + 1
            self.check_size(len(receiver) + count * max(len(args[1]) - len(args[0]), 0))
        elif name in ("items", "keys", "values"):
            self.charge(max(len(receiver), 1))
            return list(bound())
        result = bound(*args)
        self.charge(max(len(result), 1) if isinstance(result, (str, list, tuple)) else 1)
        self.check(receiver)
        return self.check(result)

    def invoke(self, func: _Function, args: list) -> Any:
        params = func.node.params
        if len(args) > len(params):
            raise TypeError(f"{func.node.name}() takes {len(params)} arguments but {len(args)} were given")
        if self.call_depth >= MAX_CALL_DEPTH:
            raise RuntimeFailure("recursion", "maximum call depth exceeded")
        local = _Frame(func.closure)
        for i, p in enumerate(params):
            if i < len(args):
                local.vars[p.name] = args[i]
            elif p.name in func.defaults:
                local.vars[p.name] = func.defaults[p.name]
            else:
                raise TypeError(f"{func.node.name}() missing argument {p.name!r}")
        self.call_depth += 1
        try:
            self.exec_block(func.node.body, local)
        except _Return as ret:
            return ret.value
        except (_Break, _Continue):
            raise RuntimeFailure("SyntaxError", "'break' or 'continue' outside loop") from None
        finally:
            self.call_depth -= 1
        return None


def normalize_output(value: Any) -> Grid:
    """Accept 4 row strings or a 4x4 nested list of single symbols."""
    if isinstance(value, (list, tuple)) and len(value) == GRID_SIZE:
        if all(isinstance(r, str) for r in value):
            rows = list(value)
        elif all(isinstance(r, (list, tuple)) and all(isinstance(c, str) for c in r) for r in value):
            if any(len(c) != 1 for r in value for c in r):
                raise RuntimeFailure("bad_return", "nested grid cells must be single symbols")
            rows = ["".join(r) for r in value]
        else:
            raise RuntimeFailure("bad_return", "grid rows must be strings or lists of symbols")
        if all(len(r) == GRID_SIZE and set(r) <= set(SYMBOLS) for r in rows):
            return Grid.from_rows(rows)
    raise RuntimeFailure("bad_return", f"program returned {type(value).__name__}, not a 4x4 grid")


def _entry(frame: _Frame) -> Optional[_Function]:
    fn = frame.vars.get(ENTRY_POINT)
    if isinstance(fn, _Function):
        return fn
    candidates = [
        v
        for v in frame.vars.values()
        if isinstance(v, _Function) and v.node.params and all(p.name in v.defaults for p in v.node.params[1:])
    ]
    return candidates[0] if len(candidates) == 1 else None


def run_program(module: Module, x: InputString | str, budget: ExecBudget = ExecBudget()) -> RunResult:
    """Execute ``module`` on one input.  Never raises; failures are classified."""
    text = x if isinstance(x, str) else x.bits
    machine = _Machine(module, budget)
    frame = _Frame()
    frame.vars["__name__"] = "__sandbox__"
    frame.vars[FALLBACK_INPUT] = text
    try:
        machine.run_module(frame)
        fn = _entry(frame)
        if fn is not None:
            value = machine.invoke(fn, [text])
        elif FALLBACK_RESULT in frame.vars:
            value = frame.vars[FALLBACK_RESULT]
        else:
            raise RuntimeFailure("no_entry", f"no {ENTRY_POINT}() function and no {FALLBACK_RESULT!r} variable")
        grid = normalize_output(value)
    except RuntimeFailure as exc:
        return RunResult(text, None, machine.steps, exc.kind, exc.message)
    except (_Break, _Continue):
        return RunResult(text, None, machine.steps, "SyntaxError", "'break' or 'continue' outside loop")
    except _Return:
        return RunResult(text, None, machine.steps, "SyntaxError", "'return' outside function")
    except RecursionError:
        return RunResult(text, None, machine.steps, "recursion", "nesting too deep")
    except Exception as exc:  # noqa: BLE001
        return RunResult(text, None, machine.steps, type(exc).__name__, str(exc))
    return RunResult(text, grid, machine.steps)


def run_dataset(module: Module, dataset: Dataset, budget: ExecBudget = ExecBudget()) -> list[RunResult]:
    return [run_program(module, s.input, budget) for s in dataset]


def count_errors(module: Module, dataset: Dataset, budget: ExecBudget = ExecBudget()) -> int:
    """Number of samples whose output is wrong or whose run failed."""
    errors = 0
    for sample, result in zip(dataset, run_dataset(module, dataset, budget)):
        if result.grid is None or not grids_equal(result.grid, sample.output):
            errors += 1
    return errors
