"""Machine-written reference programs for the two mapping-table bounds.

``sufficient_program`` keeps one 4-symbol mapping per letter (8 mappings of
size 1+4), the sufficient-compositionality bound of 40.  ``zero_program``
repeats the dataset verbatim (16 mappings of size 4+16), the
zero-compositionality bound of 320.
"""

from __future__ import annotations

from .core import BIT_LETTERS, N_BITS, CompositionalFunction, Dataset


def sufficient_program(f: CompositionalFunction) -> str:
    cells = [sorted(group) for group in f.partition]
    lines = ["# cells owned by each input position", "CELLS = ["]
    for group in cells:
        lines.append("    [" + ", ".join(f"({r}, {c})" for r, c in group) + "],")
    lines += ["]", "# symbols written to those cells for each letter", "VALUES = ["]
    for bit in range(N_BITS):
        entries = []
        for letter in BIT_LETTERS[bit]:
            symbols = "".join(f.cell_bijections[cell][letter] for cell in cells[bit])
            entries.append(f"'{letter}': '{symbols}'")
        lines.append("    {" + ", ".join(entries) + "},")
    lines += [
        "]",
        "",
        "",
        "def generate(s):",
        "    grid = [[None] * 4 for _ in range(4)]",
        "    for i in range(4):",
        "        symbols = VALUES[i][s[i]]",
        "        for k in range(4):",
        "            r, c = CELLS[i][k]",
        "            grid[r][c] = symbols[k]",
        "    return grid",
    ]
    return "\n".join(lines) + "\n"


def zero_program(dataset: Dataset) -> str:
    lines = ["TABLE = {"]
    for sample in dataset:
        rows = ", ".join(f"'{row}'" for row in sample.output.rows)
        lines.append(f"    '{sample.input.bits}': [{rows}],")
    lines += ["}", "", "", "def generate(s):", "    return TABLE[s]"]
    return "\n".join(lines) + "\n"


def constant_program(dataset: Dataset, index: int = 0) -> str:
    """Always returns one grid of the dataset (correct on exactly one input)."""
    rows = ", ".join(f"'{row}'" for row in dataset.samples[index].output.rows)
    return f"def generate(s):\n    return [{rows}]\n"
