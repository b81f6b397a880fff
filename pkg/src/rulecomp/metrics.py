"""Scores, aggregates, rank tests and report tables."""

from __future__ import annotations

import csv
import io
import math
import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .core import Grid
from .records import (
    L_SUFFICIENT,
    L_ZERO,
    RESULT_GENERATION,
    RULE_GENERATION,
    RULES_PROVIDED,
    AccuracyRecord,
    AnyRecord,
    EvalRecord,
    c_score,
    l_total,
    sort_records,
)

__all__ = [
    "l_total",
    "c_score",
    "Thresholds",
    "characterize",
    "mann_whitney_u",
    "significance_groups",
    "SettingSummary",
    "aggregate",
    "summarize",
    "result_accuracy",
    "summary_csv",
    "summary_table",
    "groups_report",
]

EXACT_LIMIT = 20
ALPHA = 0.05


@dataclass(frozen=True)
class Thresholds:
    l_plus: float = (L_SUFFICIENT + L_ZERO) / 2
    errors: float = 8.0


def characterize(mean_l_plus: float, mean_errors: float, thresholds: Thresholds = Thresholds()) -> str:
    low_l = mean_l_plus < thresholds.l_plus
    low_e = mean_errors < thresholds.errors
    if low_l and low_e:
        return "T1"
    if low_e:
        return "T2"
    if low_l:
        return "T3"
    return "mixed"


# --- Mann-Whitney -----------------------------------------------------------


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _exact_p(doubled: list[int], n_a: int, observed: int) -> float:
    """P(|S - E| >= |obs - E|) where S sums n_a of the doubled ranks."""
    n = len(doubled)
    centre = n_a * (n + 1)  # doubled expected rank sum
    dev = abs(observed - centre)
    # ways[k][s]: subsets of size k with doubled rank sum s
    ways: list[Counter] = [Counter() for _ in range(n_a + 1)]
    ways[0][0] = 1
    for r in doubled:
        for k in range(min(n_a, n) - 1, -1, -1):
            for s, c in ways[k].items():
                ways[k + 1][s + r] += c
    hits = sum(c for s, c in ways[n_a].items() if abs(s - centre) >= dev)
    return min(1.0, hits / math.comb(n, n_a))


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """U statistic of ``a`` and the two-sided p-value.

    Exact permutation distribution (midranks for ties) when the samples have
    at most 20 values together, otherwise the tie-corrected normal
    approximation with continuity correction.
    """
    if not a or not b:
        raise ValueError("both samples need at least one value")
    values = list(a) + list(b)
    n_a, n_b = len(a), len(b)
    n = n_a + n_b
    ranks = _midranks(values)
    r_a = sum(ranks[:n_a])
    u = r_a - n_a * (n_a + 1) / 2
    if len(set(values)) == 1:
        return u, 1.0
    if n <= EXACT_LIMIT:
        doubled = [int(round(2 * r)) for r in ranks]
        return u, _exact_p(doubled, n_a, sum(doubled[:n_a]))
    ties = Counter(values).values()
    tie_term = sum(t**3 - t for t in ties) / (n * (n - 1))
    var = n_a * n_b / 12 * ((n + 1) - tie_term)
    if var <= 0:
        return u, 1.0
    z = max(abs(u - n_a * n_b / 2) - 0.5, 0.0) / math.sqrt(var)
    return u, min(1.0, math.erfc(z / math.sqrt(2)))


def significance_groups(
    values: Mapping[str, Sequence[float]],
    higher_is_better: bool = True,
    alpha: float = ALPHA,
) -> list[list[str]]:
    """Greedy grouping of models whose pairwise differences are not significant.

    Models are ordered best-first by mean; a model joins the open group only
    if its test against every member gives p >= alpha.
    """
    sign = -1.0 if higher_is_better else 1.0
    order = sorted(values, key=lambda m: (sign * statistics.fmean(values[m]), m))
    groups: list[list[str]] = []
    for model in order:
        if groups and all(mann_whitney_u(values[model], values[o])[1] >= alpha for o in groups[-1]):
            groups[-1].append(model)
        else:
            groups.append([model])
    return groups


# --- aggregation ------------------------------------------------------------


@dataclass(frozen=True)
class SettingSummary:
    model_id: str
    setting: str
    template_id: str
    task_kind: str
    count: int
    mean_l_plus: float
    mean_errors: float
    mean_c: float
    std_l_plus: float
    std_errors: float
    std_c: float
    accuracy: Optional[float]
    characterization: str
    failures: int = 0


def _std(xs: Sequence[float]) -> float:
    return statistics.stdev(xs) if len(xs) > 1 else 0.0


def aggregate(
    records: Sequence[AnyRecord],
    thresholds: Thresholds = Thresholds(),
    accuracy: Optional[float] = None,
) -> SettingSummary:
    """Fold the records of one (task, model, setting, template) cell.

    C is computed per record and then averaged.
    """
    if not records:
        raise ValueError("no records to aggregate")
    keys = {r.group_key for r in records}
    if len(keys) != 1:
        raise ValueError(f"records mix grouping keys: {sorted(keys)}")
    task_kind, model, setting, template = keys.pop()
    ordered = sort_records(records)
    if all(isinstance(r, AccuracyRecord) for r in ordered):
        accs = [r.accuracy for r in ordered]
        nan = float("nan")
        return SettingSummary(
            model, setting, template, task_kind, len(ordered), nan, nan, nan, nan, nan, nan,
            statistics.fmean(accs), "n/a",
        )
    if not all(isinstance(r, EvalRecord) for r in ordered):
        raise ValueError("cannot mix program and accuracy records")
    l_plus = [float(r.l_plus) for r in ordered]
    errors = [float(r.errors) for r in ordered]
    cs = [r.c_score for r in ordered]
    mean_l, mean_e = statistics.fmean(l_plus), statistics.fmean(errors)
    if accuracy is None and task_kind == RULES_PROVIDED:
        accuracy = statistics.fmean(r.accuracy for r in ordered)
    return SettingSummary(
        model_id=model,
        setting=setting,
        template_id=template,
        task_kind=task_kind,
        count=len(ordered),
        mean_l_plus=mean_l,
        mean_errors=mean_e,
        mean_c=statistics.fmean(cs),
        std_l_plus=_std(l_plus),
        std_errors=_std(errors),
        std_c=_std(cs),
        accuracy=accuracy,
        characterization=characterize(mean_l, mean_e, thresholds),
        failures=sum(1 for r in ordered if r.failure_mode.value != "none"),
    )


def summarize(records: Iterable[AnyRecord], thresholds: Thresholds = Thresholds()) -> list[SettingSummary]:
    """One summary per grouping key; result-generation accuracy is attached to
    the matching rule-generation row when both exist."""
    cells: dict[tuple, list[AnyRecord]] = {}
    for r in sort_records(records):
        cells.setdefault(r.group_key, []).append(r)
    acc: dict[tuple[str, str], float] = {}
    for key, rs in cells.items():
        if key[0] == RESULT_GENERATION:
            acc[(key[1], key[2])] = statistics.fmean(r.accuracy for r in rs)
    out = []
    for key, rs in cells.items():
        if key[0] == RESULT_GENERATION and any(k[0] == RULE_GENERATION and k[1:3] == key[1:3] for k in cells):
            continue
        extra = acc.get((key[1], key[2])) if key[0] == RULE_GENERATION else None
        out.append(aggregate(rs, thresholds, accuracy=extra))
    return out


def result_accuracy(predictions: Sequence[Optional[Grid]], held_out: Sequence) -> float:
    """Percent of held-out samples whose grid was predicted exactly; ``None`` is a miss."""
    if len(predictions) != len(held_out):
        raise ValueError("one prediction per held-out sample is required")
    if not held_out:
        return 0.0
    hits = sum(1 for p, s in zip(predictions, held_out) if isinstance(p, Grid) and p == s.output)
    return 100.0 * hits / len(held_out)


# --- reports ----------------------------------------------------------------

COLUMNS = ("task", "model", "setting", "template", "n", "L(P+)", "E(P)", "C(P)", "A", "type", "failures")
STD_COLUMNS = ("std L(P+)", "std E(P)", "std C(P)")


def _fmt(x: Optional[float]) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "-"
    return f"{x:.2f}"


def _row(s: SettingSummary) -> list[str]:
    return [
        s.task_kind, s.model_id, s.setting, s.template_id, str(s.count),
        _fmt(s.mean_l_plus), _fmt(s.mean_errors), _fmt(s.mean_c), _fmt(s.accuracy),
        s.characterization, str(s.failures),
        _fmt(s.std_l_plus), _fmt(s.std_errors), _fmt(s.std_c),
    ]


def summary_csv(summaries: Sequence[SettingSummary]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS + STD_COLUMNS)
    for s in summaries:
        writer.writerow(_row(s))
    return buf.getvalue()


def summary_table(summaries: Sequence[SettingSummary], header: Sequence[str] = ()) -> str:
    rows = [list(COLUMNS + STD_COLUMNS)] + [_row(s) for s in summaries]
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = [f"# {h}" for h in header]
    for i, r in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) if j < 4 else cell.rjust(w) for j, (cell, w) in enumerate(zip(r, widths))).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def groups_report(records: Iterable[AnyRecord]) -> str:
    """Per setting and metric, models in bracketed groups of indistinguishable means.

    The greedy grouping rule is a reconstruction and the report says so.
    """
    by_setting: dict[tuple[str, str, str], dict[str, list[EvalRecord]]] = {}
    for r in sort_records(records):
        if isinstance(r, EvalRecord):
            by_setting.setdefault((r.task_kind, r.setting, r.prompt_template_id), {}).setdefault(r.model_id, []).append(r)
    lines = ["# grouping: greedy, Mann-Whitney U two-sided, p >= 0.05 joins (reconstructed rule)"]
    metrics = (
        ("L(P+)", lambda r: float(r.l_plus), False),
        ("E(P)", lambda r: float(r.errors), False),
        ("C(P)", lambda r: r.c_score, True),
    )
    for (task, setting, template), models in sorted(by_setting.items()):
        for name, get, higher in metrics:
            values = {m: [get(r) for r in rs] for m, rs in models.items()}
            if len(values) < 2:
                groups = [list(values)]
            else:
                groups = significance_groups(values, higher_is_better=higher)
            text = " ".join(
                "(" + ", ".join(f"{m} {statistics.fmean(values[m]):.2f}" for m in g) + ")" for g in groups
            )
            lines.append(f"{task}  {setting}  {template}  {name}: {text}")
    return "\n".join(lines) + "\n"
