"""Per-function evaluation records, stored one JSON object per line."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .core import N_BITS, N_CELLS, N_SAMPLES, FailureMode

ROW_WEIGHT = N_BITS + N_CELLS  # cost of one full input->output mapping
L_SUFFICIENT = 2 * ROW_WEIGHT  # every value of every position mapped once
L_ZERO = N_SAMPLES * ROW_WEIGHT  # the dataset written out verbatim


def l_total(l_plus: int, errors: int) -> int:
    if not 0 <= errors <= N_SAMPLES:
        raise ValueError(f"errors must be in [0, {N_SAMPLES}], got {errors}")
    return l_plus + ROW_WEIGHT * errors


def c_score(l: float) -> float:
    clipped = min(max(l, L_SUFFICIENT), L_ZERO)
    return 100.0 * (L_ZERO - clipped) / (L_ZERO - L_SUFFICIENT)


RULE_GENERATION = "rule_generation"
RESULT_GENERATION = "result_generation"
RULES_PROVIDED = "rules_provided"
TASK_KINDS = (RULE_GENERATION, RESULT_GENERATION, RULES_PROVIDED)


@dataclass(frozen=True)
class EvalRecord:
    model_id: str
    setting: str
    function_index: int
    prompt_template_id: str
    raw_response: str
    extracted_program: Optional[str]
    l_plus: int
    errors: int
    l_total: int
    c_score: float
    failure_mode: FailureMode = FailureMode.NONE
    task_kind: str = RULE_GENERATION
    seed: int = 0
    sum_n: int = 0
    sum_m: int = 0
    detail: str = ""
    fingerprint: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "failure_mode", FailureMode(self.failure_mode))
        if self.l_plus < 0:
            raise ValueError("l_plus must be nonnegative")
        if self.l_total != l_total(self.l_plus, self.errors):
            raise ValueError(f"l_total {self.l_total} != {self.l_plus} + {ROW_WEIGHT}*{self.errors}")
        if abs(self.c_score - c_score(self.l_total)) > 1e-9:
            raise ValueError("c_score inconsistent with l_total")

    @classmethod
    def build(cls, *, l_plus: int, errors: int, **kw) -> EvalRecord:
        total = l_total(l_plus, errors)
        return cls(l_plus=l_plus, errors=errors, l_total=total, c_score=c_score(total), **kw)

    @property
    def record_id(self) -> str:
        return f"{self.task_kind}/{self.model_id}/{self.setting}-{self.seed}/{self.prompt_template_id}/{self.function_index:02d}"

    @property
    def group_key(self) -> tuple[str, str, str, str]:
        return (self.task_kind, self.model_id, self.setting, self.prompt_template_id)

    @property
    def accuracy(self) -> float:
        """Share of the dataset the program reproduces, in percent."""
        return 100.0 * (N_SAMPLES - self.errors) / N_SAMPLES

    def to_json(self) -> dict:
        out = asdict(self)
        out["failure_mode"] = self.failure_mode.value
        out["kind"] = "eval"
        return out

    @classmethod
    def from_json(cls, data: dict) -> EvalRecord:
        data = {k: v for k, v in data.items() if k != "kind"}
        return cls(**data)


@dataclass(frozen=True)
class AccuracyRecord:
    """Result-generation outcome for one function: held-out grids predicted directly."""

    model_id: str
    setting: str
    function_index: int
    prompt_template_id: str
    correct: int
    total: int
    seed: int = 0
    task_kind: str = RESULT_GENERATION
    responses: tuple[str, ...] = field(default=())
    fingerprints: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if not 0 <= self.correct <= self.total:
            raise ValueError("correct must be within [0, total]")
        object.__setattr__(self, "responses", tuple(self.responses))
        object.__setattr__(self, "fingerprints", tuple(self.fingerprints))

    @property
    def accuracy(self) -> float:
        return 100.0 * self.correct / self.total if self.total else 0.0

    @property
    def record_id(self) -> str:
        return f"{self.task_kind}/{self.model_id}/{self.setting}-{self.seed}/{self.prompt_template_id}/{self.function_index:02d}"

    @property
    def group_key(self) -> tuple[str, str, str, str]:
        return (self.task_kind, self.model_id, self.setting, self.prompt_template_id)

    def to_json(self) -> dict:
        out = asdict(self)
        out["responses"] = list(self.responses)
        out["fingerprints"] = list(self.fingerprints)
        out["kind"] = "accuracy"
        return out

    @classmethod
    def from_json(cls, data: dict) -> AccuracyRecord:
        data = {k: v for k, v in data.items() if k != "kind"}
        return cls(**data)


AnyRecord = Union[EvalRecord, AccuracyRecord]


def record_from_json(data: dict) -> AnyRecord:
    if data.get("kind") == "accuracy":
        return AccuracyRecord.from_json(data)
    return EvalRecord.from_json(data)


def sort_records(records: Iterable[AnyRecord]) -> list[AnyRecord]:
    return sorted(records, key=lambda r: (*r.group_key, r.seed, r.function_index))


def write_records(path: Path, records: Iterable[AnyRecord]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        for r in sort_records(records):
            fh.write(json.dumps(r.to_json(), sort_keys=True, ensure_ascii=False) + "\n")
    tmp.replace(path)


def read_records(path: Path) -> list[AnyRecord]:
    if not path.exists():
        return []
    with path.open(encoding="utf-8") as fh:
        return [record_from_json(json.loads(line)) for line in fh if line.strip()]
