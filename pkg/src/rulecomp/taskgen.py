"""Sampling of compositional functions and materialization of datasets."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .core import (
    ALL_CELLS,
    BIT_LETTERS,
    GRID_SIZE,
    N_BITS,
    SYMBOLS,
    Cell,
    CompositionalFunction,
    Dataset,
    InputString,
    Sample,
    Setting,
    apply_function,
)

SHOWN_COUNT = 8


@dataclass(frozen=True)
class SettingSpec:
    tag: Setting
    seed: int = 0
    sample_count: int = 30

    def __post_init__(self) -> None:
        object.__setattr__(self, "tag", Setting.parse(self.tag))
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


def _rng(*parts: object) -> random.Random:
    # Stable across processes, unlike hash() of a tuple of strings.
    digest = hashlib.sha256("|".join(map(str, parts)).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _row(i: int) -> frozenset[Cell]:
    return frozenset((i, c) for c in range(GRID_SIZE))


def _column(i: int) -> frozenset[Cell]:
    return frozenset((r, i) for r in range(GRID_SIZE))


def _block(i: int) -> frozenset[Cell]:
    r0, c0 = 2 * (i // 2), 2 * (i % 2)
    return frozenset((r0 + dr, c0 + dc) for dr in range(2) for dc in range(2))


_STRUCTURED = frozenset(f(i) for f in (_row, _column, _block) for i in range(GRID_SIZE))


def _chunk(cells: list[Cell]) -> list[frozenset[Cell]]:
    return [frozenset(cells[k : k + GRID_SIZE]) for k in range(0, len(cells), GRID_SIZE)]


def _partition(tag: Setting, rng: random.Random) -> tuple[tuple[frozenset[Cell], ...], dict]:
    meta: dict = {}
    if tag is Setting.HORIZONTAL:
        groups = [_row(i) for i in range(N_BITS)]
    elif tag is Setting.VERTICAL:
        groups = [_column(i) for i in range(N_BITS)]
    elif tag is Setting.BLOCK:
        groups = [_block(i) for i in range(N_BITS)]
    elif tag is Setting.RANDOM:
        cells = list(ALL_CELLS)
        rng.shuffle(cells)
        groups = _chunk(cells)
    elif tag is Setting.RANDOM_INDEX:
        identity = list(range(N_BITS))
        perm = identity[:]
        while perm == identity:
            rng.shuffle(perm)
        groups = [_row(perm[i]) for i in range(N_BITS)]
        meta["bit_to_row"] = perm
    elif tag is Setting.SETTING_COMBINATION:
        rows = sorted(rng.sample(range(GRID_SIZE), 2))
        rest = [cell for cell in ALL_CELLS if cell[0] not in rows]
        while True:
            rng.shuffle(rest)
            random_groups = _chunk(rest)
            if not any(g in _STRUCTURED for g in random_groups):
                break
        # the two horizontal rows go to the two lowest-index bits
        groups = [_row(rows[0]), _row(rows[1]), *random_groups]
        meta["horizontal_rows"] = rows
        meta["horizontal_bits"] = [0, 1]
    else:  # pragma: no cover
        raise ValueError(tag)
    return tuple(groups), meta


def sample_function(spec: SettingSpec, index: int) -> CompositionalFunction:
    """Draw the ``index``-th function of a setting; fully determined by (seed, tag, index)."""
    if not 0 <= index < spec.sample_count:
        raise IndexError(f"index {index} outside [0, {spec.sample_count})")
    rng = _rng(spec.seed, spec.tag.value, index)
    partition, meta = _partition(spec.tag, rng)
    bijections: dict[Cell, dict[str, str]] = {}
    for bit, group in enumerate(partition):
        first, second = BIT_LETTERS[bit]
        for cell in sorted(group):
            a, b = SYMBOLS if rng.random() < 0.5 else SYMBOLS[::-1]
            bijections[cell] = {first: a, second: b}
    meta.update(seed=spec.seed, index=index)
    return CompositionalFunction(partition, bijections, spec.tag, meta)


def function_ref(spec: SettingSpec, index: int) -> str:
    return f"{spec.tag.value}-{spec.seed}-{index:02d}"


def build_dataset(f: CompositionalFunction, ref: str = "") -> Dataset:
    samples = tuple(Sample(x, apply_function(f, x)) for x in InputString.all())
    return Dataset(samples, ref)


def covers_all_values(inputs: list[InputString]) -> bool:
    """True when every letter of every input position occurs in some input."""
    return all({x.bits[bit] for x in inputs} == set(BIT_LETTERS[bit]) for bit in range(N_BITS))


def split_for_result_test(dataset: Dataset, seed: int) -> tuple[list[Sample], list[Sample]]:
    """Draw 8 demonstration samples covering every letter; the other 8 are held out.

    Uniform over covering splits (rejection sampling).
    """
    rng = _rng("split", seed, dataset.function_ref)
    indices = list(range(len(dataset)))
    while True:
        shown_idx = sorted(rng.sample(indices, SHOWN_COUNT))
        shown = [dataset.samples[i] for i in shown_idx]
        if covers_all_values([s.input for s in shown]):
            break
    held = [dataset.samples[i] for i in indices if i not in set(shown_idx)]
    return shown, held


def presentation_order(dataset: Dataset, order: str, seed: int) -> Dataset:
    """Samples in lexicographic input order, or shuffled reproducibly."""
    if order == "lexicographic":
        return dataset.reordered(sorted(range(len(dataset)), key=lambda i: dataset.samples[i].input.bits))
    if order == "shuffled":
        idx = list(range(len(dataset)))
        _rng("order", seed, dataset.function_ref).shuffle(idx)
        return dataset.reordered(idx)
    raise ValueError(f"unknown sample order {order!r}")
