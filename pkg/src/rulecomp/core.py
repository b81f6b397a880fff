"""Domain types for the string-to-grid task.

An input is a 4-letter string whose i-th position takes one of two letters
(``AB``, ``CD``, ``EF``, ``GH``).  The output is a 4x4 grid of ``.``/``*``.
A compositional function assigns each input position a disjoint group of four
cells, and each cell flips between the two symbols with the letter of its
owning position.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

N_BITS = 4
GRID_SIZE = 4
N_CELLS = GRID_SIZE * GRID_SIZE
ALPHABET_SIZE = 2
N_SAMPLES = ALPHABET_SIZE**N_BITS

DOT = "."
STAR = "*"
SYMBOLS = (DOT, STAR)

# bit i (zero-based) takes letters BIT_LETTERS[i]
BIT_LETTERS: tuple[tuple[str, str], ...] = (("A", "B"), ("C", "D"), ("E", "F"), ("G", "H"))
INPUT_LETTERS = frozenset(itertools.chain.from_iterable(BIT_LETTERS))
LETTER_BIT: dict[str, int] = {ch: i for i, pair in enumerate(BIT_LETTERS) for ch in pair}

Cell = tuple[int, int]
ALL_CELLS: tuple[Cell, ...] = tuple((r, c) for r in range(GRID_SIZE) for c in range(GRID_SIZE))


def complement(letter: str) -> str:
    """The other letter of the same input position."""
    a, b = BIT_LETTERS[LETTER_BIT[letter]]
    return b if letter == a else a


class Setting(str, Enum):
    HORIZONTAL = "Horizontal"
    BLOCK = "Block"
    VERTICAL = "Vertical"
    RANDOM = "Random"
    RANDOM_INDEX = "RandomIndex"
    SETTING_COMBINATION = "SettingCombination"

    @classmethod
    def parse(cls, value: str | Setting) -> Setting:
        if isinstance(value, Setting):
            return value
        key = value.replace("_", "").replace("-", "").replace(" ", "").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        aliases = {"ri": cls.RANDOM_INDEX, "sc": cls.SETTING_COMBINATION}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown setting {value!r}")


BASE_SETTINGS = (Setting.HORIZONTAL, Setting.BLOCK, Setting.VERTICAL, Setting.RANDOM)


class FailureMode(str, Enum):
    NONE = "none"
    NO_CODE_BLOCK = "no_code_block"
    PARSE_FAILURE = "parse_failure"
    RUNTIME_FAILURE = "runtime_failure"


@dataclass(frozen=True)
class InputString:
    bits: str

    def __post_init__(self) -> None:
        if not isinstance(self.bits, str) or len(self.bits) != N_BITS:
            raise ValueError(f"input must be a {N_BITS}-letter string, got {self.bits!r}")
        for i, ch in enumerate(self.bits):
            if ch not in BIT_LETTERS[i]:
                raise ValueError(f"position {i + 1} of {self.bits!r} must be one of {BIT_LETTERS[i]}")

    def __str__(self) -> str:
        return self.bits

    def flip(self, bit: int) -> InputString:
        chars = list(self.bits)
        chars[bit] = complement(chars[bit])
        return InputString("".join(chars))

    @classmethod
    def all(cls) -> list[InputString]:
        """All 16 inputs in lexicographic order."""
        return [cls("".join(p)) for p in itertools.product(*BIT_LETTERS)]


@dataclass(frozen=True)
class Grid:
    rows: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.rows) != GRID_SIZE or any(len(r) != GRID_SIZE for r in self.rows):
            raise ValueError("grid must be 4 rows of 4 symbols")
        if any(ch not in SYMBOLS for r in self.rows for ch in r):
            raise ValueError("grid cells must be '.' or '*'")

    @classmethod
    def from_rows(cls, rows: Iterable[str]) -> Grid:
        return cls(tuple(rows))

    @classmethod
    def from_cells(cls, cells: Mapping[Cell, str]) -> Grid:
        return cls(tuple("".join(cells[(r, c)] for c in range(GRID_SIZE)) for r in range(GRID_SIZE)))

    @classmethod
    def from_text(cls, text: str) -> Grid:
        return cls(tuple(line.strip() for line in text.strip().splitlines()))

    def __getitem__(self, cell: Cell) -> str:
        r, c = cell
        return self.rows[r][c]

    def to_text(self) -> str:
        return "\n".join(self.rows)

    def diff(self, other: Grid) -> set[Cell]:
        return {cell for cell in ALL_CELLS if self[cell] != other[cell]}


def grids_equal(a: Grid, b: Grid) -> bool:
    return a.rows == b.rows


@dataclass(frozen=True)
class CompositionalFunction:
    """Ground-truth generator: a cell partition plus per-cell letter->symbol maps.

    ``partition[i]`` holds the four cells owned by input position ``i``;
    ``cell_bijections[cell]`` maps both letters of the owning position to
    distinct symbols.
    """

    partition: tuple[frozenset[Cell], ...]
    cell_bijections: Mapping[Cell, Mapping[str, str]]
    setting: Setting = Setting.RANDOM
    metadata: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if len(self.partition) != N_BITS:
            raise ValueError("partition must have one group per input position")
        seen: set[Cell] = set()
        for group in self.partition:
            if len(group) != GRID_SIZE:
                raise ValueError("each group must hold exactly 4 cells")
            if seen & group:
                raise ValueError("partition groups overlap")
            seen |= group
        if seen != set(ALL_CELLS):
            raise ValueError("partition does not cover the grid")
        for bit, group in enumerate(self.partition):
            for cell in group:
                mapping = self.cell_bijections.get(cell)
                if mapping is None or set(mapping) != set(BIT_LETTERS[bit]):
                    raise ValueError(f"cell {cell} needs a map over {BIT_LETTERS[bit]}")
                if set(mapping.values()) != set(SYMBOLS):
                    raise ValueError(f"cell {cell} map is not a bijection onto the symbols")

    def owner(self, cell: Cell) -> int:
        for bit, group in enumerate(self.partition):
            if cell in group:
                return bit
        raise KeyError(cell)

    def __call__(self, x: InputString | str) -> Grid:
        return apply_function(self, x)

    def to_json(self) -> dict:
        return {
            "setting": self.setting.value,
            "partition": [sorted([list(c) for c in g]) for g in self.partition],
            "bijections": {
                f"{r},{c}": dict(sorted(self.cell_bijections[(r, c)].items())) for r, c in ALL_CELLS
            },
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> CompositionalFunction:
        partition = tuple(frozenset((int(r), int(c)) for r, c in g) for g in data["partition"])
        bij = {}
        for key, mapping in data["bijections"].items():
            r, c = (int(v) for v in key.split(","))
            bij[(r, c)] = dict(mapping)
        return cls(partition, bij, Setting.parse(data["setting"]), dict(data.get("metadata", {})))


def apply_function(f: CompositionalFunction, x: InputString | str) -> Grid:
    if isinstance(x, str):
        x = InputString(x)
    cells = {}
    for bit, group in enumerate(f.partition):
        letter = x.bits[bit]
        for cell in group:
            cells[cell] = f.cell_bijections[cell][letter]
    return Grid.from_cells(cells)


@dataclass(frozen=True)
class Sample:
    input: InputString
    output: Grid

    def to_json(self) -> dict:
        return {"input": self.input.bits, "output": list(self.output.rows)}

    @classmethod
    def from_json(cls, data: Mapping) -> Sample:
        return cls(InputString(data["input"]), Grid.from_rows(data["output"]))


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    function_ref: str = ""

    def __post_init__(self) -> None:
        if len(self.samples) != N_SAMPLES:
            raise ValueError(f"dataset must have {N_SAMPLES} samples")
        if len({s.input for s in self.samples}) != N_SAMPLES:
            raise ValueError("dataset inputs must be distinct")

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def inputs(self) -> list[InputString]:
        return [s.input for s in self.samples]

    @property
    def outputs(self) -> list[Grid]:
        return [s.output for s in self.samples]

    def lookup(self, x: InputString | str) -> Grid:
        key = x if isinstance(x, str) else x.bits
        for s in self.samples:
            if s.input.bits == key:
                return s.output
        raise KeyError(key)

    def reordered(self, order: Sequence[int]) -> Dataset:
        return Dataset(tuple(self.samples[i] for i in order), self.function_ref)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_json()) + "\n" for s in self.samples)

    @classmethod
    def from_jsonl(cls, text: str, function_ref: str = "") -> Dataset:
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        return cls(tuple(Sample.from_json(r) for r in rows), function_ref)


def write_dataset(path: Path, dataset: Dataset, f: CompositionalFunction | None = None) -> None:
    """Write ``<path>.jsonl`` samples and, when given, a ``<path>.meta.json`` sidecar."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.with_suffix(".jsonl").write_text(dataset.to_jsonl())
    if f is not None:
        meta = {"function_ref": dataset.function_ref, "function": f.to_json()}
        path.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def read_dataset(path: Path) -> tuple[Dataset, CompositionalFunction | None]:
    data_path = path.with_suffix(".jsonl")
    meta_path = path.with_suffix(".meta.json")
    f = None
    ref = data_path.stem
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        ref = meta.get("function_ref", ref)
        f = CompositionalFunction.from_json(meta["function"])
    return Dataset.from_jsonl(data_path.read_text(), ref), f
