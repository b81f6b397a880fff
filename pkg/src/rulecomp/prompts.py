"""Prompt templates and renderers for the three task kinds.

Rendered prompts use a fixed textual layout (``Input: XXXX`` followed by an
``Output:`` line and four grid rows) so they can be parsed back, which the
mock provider relies on.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .core import (
    BIT_LETTERS,
    GRID_SIZE,
    Cell,
    CompositionalFunction,
    Dataset,
    Grid,
    InputString,
    Sample,
)
from .records import RESULT_GENERATION, RULE_GENERATION, RULES_PROVIDED, TASK_KINDS

REQUIRED = {
    RULE_GENERATION: {"samples", "subset_grammar_note"},
    RESULT_GENERATION: {"samples", "query_inputs"},
    RULES_PROVIDED: {"rules_text", "subset_grammar_note"},
}

SUBSET_GRAMMAR_NOTE = """\
Write the program in a small subset of Python: top-level constants and
functions only; statements def, if/elif/else, for, while, return, assignment;
literals, lists, tuples and dicts; indexing, slicing and comprehensions.
Allowed calls: range len list dict tuple str int bool enumerate zip min max
abs sum sorted reversed and the usual str/list/dict methods. No imports,
classes, lambdas, exceptions or file access.
Define `def generate(s):` taking the 4-letter input string and returning the
grid as a list of 4 strings of 4 symbols each (`.` or `*`).
Put the program in a single ```python fenced block."""


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    task_kind: str
    body: str

    def __post_init__(self) -> None:
        if self.task_kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.task_kind!r}")
        fields = {name for _, name, _, _ in string.Formatter().parse(self.body) if name}
        missing = REQUIRED[self.task_kind] - fields
        if missing:
            raise ValueError(f"template {self.template_id} lacks placeholders {sorted(missing)}")
        extra = fields - {"samples", "subset_grammar_note", "rules_text", "query_inputs"}
        if extra:
            raise ValueError(f"template {self.template_id} has unknown placeholders {sorted(extra)}")

    def fill(self, **values: str) -> str:
        return self.body.format(**{k: values.get(k, "") for k in ("samples", "subset_grammar_note", "rules_text", "query_inputs")})


TEMPLATES: dict[str, PromptTemplate] = {
    t.template_id: t
    for t in (
        PromptTemplate(
            "rule-plain",
            RULE_GENERATION,
            "Each sample below maps a 4-letter string to a 4x4 grid.\n\n"
            "{samples}\n\n"
            "Write a program that generates these samples.\n\n{subset_grammar_note}\n",
        ),
        PromptTemplate(
            "rule-explain",
            RULE_GENERATION,
            "You are given the complete set of samples produced by an unknown rule.\n"
            "Every input is a string of 4 letters; position 1 is A or B, position 2 is C or D,\n"
            "position 3 is E or F and position 4 is G or H. Every output is a 4x4 grid of '.' and '*'.\n\n"
            "{samples}\n\n"
            "Find the rule and express it as a program that reproduces every sample exactly.\n\n"
            "{subset_grammar_note}\n",
        ),
        PromptTemplate(
            "rule-steps",
            RULE_GENERATION,
            "Study the following input/output pairs.\n\n"
            "{samples}\n\n"
            "First look at how each grid changes when one input letter changes. Then write a\n"
            "program describing the rule that produced the data.\n\n{subset_grammar_note}\n",
        ),
        PromptTemplate(
            "result-plain",
            RESULT_GENERATION,
            "Each sample below maps a 4-letter string to a 4x4 grid.\n\n"
            "{samples}\n\n"
            "{query_inputs}\n"
            "Reply with the output grid for the query only: four lines of four symbols\n"
            "('.' or '*') inside a ``` fenced block.\n",
        ),
        PromptTemplate(
            "rules-plain",
            RULES_PROVIDED,
            "A 4-letter string is turned into a 4x4 grid of '.' and '*' by the following rule.\n\n"
            "{rules_text}\n\n"
            "Write a program that implements this rule.\n\n{subset_grammar_note}\n",
        ),
    )
}

DEFAULT_TEMPLATES = {
    RULE_GENERATION: "rule-plain",
    RESULT_GENERATION: "result-plain",
    RULES_PROVIDED: "rules-plain",
}


def get_template(template_id: str) -> PromptTemplate:
    try:
        return TEMPLATES[template_id]
    except KeyError:
        raise KeyError(f"unknown template {template_id!r}; known: {sorted(TEMPLATES)}") from None


def format_sample(sample: Sample) -> str:
    return f"Input: {sample.input.bits}\nOutput:\n{sample.output.to_text()}"


def format_samples(samples: Iterable[Sample]) -> str:
    return "\n\n".join(format_sample(s) for s in samples)


def _check_kind(template: PromptTemplate, kind: str) -> None:
    if template.task_kind != kind:
        raise ValueError(f"template {template.template_id} is for {template.task_kind}, not {kind}")


def render_rule_prompt(dataset: Dataset, template: PromptTemplate) -> str:
    _check_kind(template, RULE_GENERATION)
    return template.fill(samples=format_samples(dataset), subset_grammar_note=SUBSET_GRAMMAR_NOTE)


def render_result_prompt(shown: Sequence[Sample], query: InputString, template: PromptTemplate) -> str:
    _check_kind(template, RESULT_GENERATION)
    if any(s.input == query for s in shown):
        raise ValueError(f"query {query.bits} is among the shown samples")
    return template.fill(samples=format_samples(shown), query_inputs=f"Query: {query.bits}")


# --- mechanical rule descriptions -------------------------------------------


def _region(group: frozenset[Cell]) -> Optional[str]:
    rows = {r for r, _ in group}
    cols = {c for _, c in group}
    if len(rows) == 1:
        return f"row {next(iter(rows)) + 1}"
    if len(cols) == 1:
        return f"column {next(iter(cols)) + 1}"
    if len(rows) == 2 and len(cols) == 2 and min(rows) % 2 == 0 and min(cols) % 2 == 0 and max(rows) - min(rows) == 1:
        return f"the 2x2 block with rows {min(rows) + 1}-{max(rows) + 1} and columns {min(cols) + 1}-{max(cols) + 1}"
    return None


def describe_rules(f: CompositionalFunction) -> str:
    """Plain-text description of ``f``: owned cells and per-cell symbol assignment."""
    lines = [
        "Rows and columns are numbered 1 to 4 from the top left.",
    ]
    for bit, group in enumerate(f.partition):
        a, b = BIT_LETTERS[bit]
        cells = sorted(group)
        region = _region(group)
        listing = ", ".join(f"({r + 1},{c + 1})" for r, c in cells)
        where = region if region else f"the cells {listing}"
        lines.append(f"Position {bit + 1} of the string ({a} or {b}) controls {where}.")
        for r, c in cells:
            m = f.cell_bijections[(r, c)]
            lines.append(f"  cell ({r + 1},{c + 1}) is '{m[a]}' for {a} and '{m[b]}' for {b}.")
    lines.append("No other position affects those cells.")
    return "\n".join(lines)


def render_rules_provided_prompt(f: CompositionalFunction, template: PromptTemplate) -> str:
    _check_kind(template, RULES_PROVIDED)
    return template.fill(rules_text=describe_rules(f), subset_grammar_note=SUBSET_GRAMMAR_NOTE)


# --- parsing rendered prompts -----------------------------------------------

_SAMPLE_RE = re.compile(r"Input: ([A-H]{4})\nOutput:\n((?:[.*]{4}\n?){4})")
_QUERY_RE = re.compile(r"Query: ([A-H]{4})")
_CELL_RE = re.compile(r"cell \((\d),(\d)\) is '([.*])' for ([A-H]) and '([.*])' for ([A-H])")


def parse_samples(prompt: str) -> list[Sample]:
    return [
        Sample(InputString(m.group(1)), Grid.from_text(m.group(2)))
        for m in _SAMPLE_RE.finditer(prompt)
    ]


def parse_query(prompt: str) -> Optional[InputString]:
    m = _QUERY_RE.search(prompt)
    return InputString(m.group(1)) if m else None


def parse_rules(prompt: str) -> dict[Cell, dict[str, str]]:
    out: dict[Cell, dict[str, str]] = {}
    for m in _CELL_RE.finditer(prompt):
        r, c = int(m.group(1)) - 1, int(m.group(2)) - 1
        if 0 <= r < GRID_SIZE and 0 <= c < GRID_SIZE:
            out[(r, c)] = {m.group(4): m.group(3), m.group(6): m.group(5)}
    return out
