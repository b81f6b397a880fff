"""Slow, obviously-correct references that the fast code is checked against."""

from __future__ import annotations

import itertools
from fractions import Fraction

from rulecomp.core import ALL_CELLS, BIT_LETTERS, CompositionalFunction, InputString, Setting

# every failure kind the sandbox is allowed to report
CLASSIFIED = {
    "step_budget", "collection_budget", "value_budget", "recursion", "bad_return", "no_entry",
    "undefined_name", "unsupported", "SyntaxError",
    "TypeError", "ValueError", "IndexError", "KeyError", "ZeroDivisionError", "AttributeError", "OverflowError",
}


def function_violations(f: CompositionalFunction) -> list[str]:
    """Every datagen property a sampled function must satisfy; empty when fine."""
    problems = []
    cells = [c for g in f.partition for c in g]
    if sorted(cells) != sorted(ALL_CELLS):
        problems.append("partition does not cover the grid exactly once")
    if any(len(g) != 4 for g in f.partition):
        problems.append("group size is not 4")
    outputs = {}
    for x in InputString.all():
        grid = f(x)
        outputs[grid] = x
        for bit in range(4):
            changed = grid.diff(f(x.flip(bit)))
            if changed != set(f.partition[bit]):
                problems.append(f"flipping bit {bit} of {x} changed {sorted(changed)}")
    if len(outputs) != 16:
        problems.append("outputs are not all distinct")
    if f.setting is Setting.RANDOM_INDEX:
        rows = [sorted({r for r, _ in g}) for g in f.partition]
        if all(len(r) == 1 for r in rows) and [r[0] for r in rows] == [0, 1, 2, 3]:
            problems.append("RandomIndex drew the identity mapping")
    for bit, group in enumerate(f.partition):
        for cell in group:
            if set(f.cell_bijections[cell]) != set(BIT_LETTERS[bit]):
                problems.append(f"cell {cell} keyed by the wrong letters")
    return problems


def _ranks(values):
    order = sorted(values)
    # average 1-based rank of each distinct value, as an exact fraction
    first = {}
    last = {}
    for i, v in enumerate(order, 1):
        first.setdefault(v, i)
        last[v] = i
    return [Fraction(first[v] + last[v], 2) for v in values]


def brute_force_mann_whitney_p(a, b) -> float:
    """Two-sided exact p by enumerating every split of the pooled ranks."""
    pooled = list(a) + list(b)
    ranks = _ranks(pooled)
    n_a = len(a)
    mean = Fraction(n_a * (len(pooled) + 1), 2)
    observed = abs(sum(ranks[:n_a]) - mean)
    hits = total = 0
    for chosen in itertools.combinations(range(len(pooled)), n_a):
        total += 1
        if abs(sum(ranks[i] for i in chosen) - mean) >= observed:
            hits += 1
    return hits / total


def brute_force_u(a, b) -> Fraction:
    return sum(Fraction(1) if x > y else Fraction(1, 2) if x == y else Fraction(0) for x in a for y in b)


def symbol_chars(source: str) -> int:
    """Count '.'/'*' characters inside string literals made only of those symbols.

    Good enough for generated programs that use simple quoted literals.
    """
    import re

    return sum(len(m.group(2)) for m in re.finditer(r"(['\"])([.*]+)\1", source))
