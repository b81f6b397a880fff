"""From one model response to metrics: extract, parse, analyze, execute."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .analyzer import MappingTable, analyze
from .core import N_SAMPLES, Dataset, FailureMode, Grid
from .interpreter import ExecBudget, RunResult, run_dataset
from .lang import Diagnostic, Module, extract_code_block, fenced_blocks, parse
from .records import EvalRecord


@dataclass
class ProgramScore:
    failure_mode: FailureMode
    l_plus: int
    errors: int
    program: Optional[str] = None
    module: Optional[Module] = None
    table: Optional[MappingTable] = None
    results: list[RunResult] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def sum_n(self) -> int:
        return self.table.sum_n if self.table else 0

    @property
    def sum_m(self) -> int:
        return self.table.sum_m if self.table else 0

    @property
    def detail(self) -> str:
        if self.diagnostics:
            return str(self.diagnostics[0])
        failed = [r for r in self.results if not r.ok]
        if failed:
            first = failed[0]
            return f"{len(failed)} input(s) failed; {first.input}: {first.failure_kind}: {first.failure}"
        return ""


def score_response(response: str, dataset: Dataset, budget: ExecBudget = ExecBudget()) -> ProgramScore:
    """Decode failures score L+ = 0 with every sample wrong; runtime failures
    only cost the inputs they occur on."""
    program = extract_code_block(response)
    if program is None:
        return ProgramScore(FailureMode.NO_CODE_BLOCK, 0, N_SAMPLES)
    outcome = parse(program)
    if not outcome.ok:
        return ProgramScore(FailureMode.PARSE_FAILURE, 0, N_SAMPLES, program, diagnostics=list(outcome.diagnostics))
    module = outcome.result
    table = analyze(module)
    results = run_dataset(module, dataset, budget)
    errors = sum(1 for r, s in zip(results, dataset) if r.grid != s.output)
    mode = FailureMode.RUNTIME_FAILURE if any(not r.ok for r in results) else FailureMode.NONE
    return ProgramScore(mode, table.l_plus, errors, program, module, table, results)


def to_record(score: ProgramScore, raw_response: str, **keys) -> EvalRecord:
    return EvalRecord.build(
        l_plus=score.l_plus,
        errors=score.errors,
        raw_response=raw_response,
        extracted_program=score.program,
        failure_mode=score.failure_mode,
        sum_n=score.sum_n,
        sum_m=score.sum_m,
        detail=score.detail,
        **keys,
    )


_ROW = re.compile(r"^\s*([.*](?:\s?[.*]){3})\s*$")


def extract_grid(response: str) -> Optional[Grid]:
    """The last run of four grid rows in the response (fenced blocks first)."""
    for text in [*reversed(fenced_blocks(response)), response]:
        rows: list[str] = []
        found: Optional[Grid] = None
        for line in text.splitlines():
            m = _ROW.match(line)
            if m:
                rows.append(m.group(1).replace(" ", ""))
                if len(rows) >= 4:
                    found = Grid.from_rows(rows[-4:])
            else:
                rows = []
        if found is not None:
            return found
    return None
