"""Run configuration, execution, resumable state and reports.

Run directory layout::

    manifest.json            config, versions, seeds, deviations, cache stats, failures
    datasets/<Tag>-<seed>/   NN.jsonl samples and NN.meta.json ground truth
    cache/                   content-addressed transcripts
    records/records.jsonl    one record per (task, model, setting, template, function)
    reports/                 summary.csv, summary.txt, groups.txt
"""

from __future__ import annotations

import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import httpx

from . import __version__
from .analyzer import format_combination
from .core import CompositionalFunction, Dataset, read_dataset, write_dataset
from .gateway import Gateway, GatewayError, MalformedResponse, ModelConfig, Transcript, TranscriptCache
from .interpreter import ExecBudget
from .lang import to_json
from .metrics import Thresholds, groups_report, summarize, summary_csv, summary_table
from .pipeline import extract_grid, score_response, to_record
from .prompts import (
    DEFAULT_TEMPLATES,
    PromptTemplate,
    get_template,
    render_result_prompt,
    render_rule_prompt,
    render_rules_provided_prompt,
)
from .records import (
    RESULT_GENERATION,
    RULE_GENERATION,
    TASK_KINDS,
    AccuracyRecord,
    AnyRecord,
    EvalRecord,
    read_records,
    sort_records,
    write_records,
)
from .taskgen import SettingSpec, build_dataset, function_ref, presentation_order, sample_function, split_for_result_test

log = logging.getLogger(__name__)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SAMPLE_ORDERS = ("lexicographic", "shuffled")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    settings: tuple[SettingSpec, ...]
    models: tuple[ModelConfig, ...]
    templates: tuple[str, ...] = ()
    task_kinds: tuple[str, ...] = (RULE_GENERATION,)
    budget: ExecBudget = ExecBudget()
    output_dir: Path = Path("runs/default")
    seed: int = 0
    sample_order: str = "lexicographic"
    workers: int = 4
    thresholds: Thresholds = Thresholds()

    def __post_init__(self) -> None:
        if not self.settings:
            raise ConfigError("at least one setting is required")
        if not self.models:
            raise ConfigError("at least one model is required")
        if len({m.model_id for m in self.models}) != len(self.models):
            raise ConfigError("model ids must be unique")
        bad = set(self.task_kinds) - set(TASK_KINDS)
        if bad or not self.task_kinds:
            raise ConfigError(f"task_kinds must be a nonempty subset of {TASK_KINDS}")
        if self.sample_order not in SAMPLE_ORDERS:
            raise ConfigError(f"sample_order must be one of {SAMPLE_ORDERS}")
        for t in self.templates:
            try:
                get_template(t)
            except KeyError as exc:
                raise ConfigError(str(exc)) from None
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def templates_for(self, kind: str) -> list[PromptTemplate]:
        chosen = [get_template(t) for t in self.templates if get_template(t).task_kind == kind]
        return chosen or [get_template(DEFAULT_TEMPLATES[kind])]

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base: Optional[Path] = None) -> RunConfig:
        data = dict(data)
        known = {"settings", "models", "templates", "task_kinds", "budget", "output_dir", "seed", "sample_order", "workers", "thresholds"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        seed = int(data.get("seed", 0))
        try:
            settings = []
            for s in data.get("settings", []):
                if isinstance(s, str):
                    s = {"tag": s}
                settings.append(SettingSpec(s["tag"], int(s.get("seed", seed)), int(s.get("sample_count", 30))))
            models = tuple(ModelConfig.from_dict(m) for m in data.get("models", []))
            budget = ExecBudget(**data.get("budget", {}))
            thresholds = Thresholds(**data.get("thresholds", {}))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from None
        out = Path(data.get("output_dir", "runs/default"))
        if base is not None and not out.is_absolute():
            out = base / out
        return cls(
            settings=tuple(settings),
            models=models,
            templates=tuple(data.get("templates", ())),
            task_kinds=tuple(data.get("task_kinds", (RULE_GENERATION,))),
            budget=budget,
            output_dir=out,
            seed=seed,
            sample_order=data.get("sample_order", "lexicographic"),
            workers=int(data.get("workers", 4)),
            thresholds=thresholds,
        )

    def to_dict(self) -> dict:
        return {
            "settings": [{"tag": s.tag.value, "seed": s.seed, "sample_count": s.sample_count} for s in self.settings],
            "models": [asdict(m) for m in self.models],
            "templates": list(self.templates),
            "task_kinds": list(self.task_kinds),
            "budget": asdict(self.budget),
            "output_dir": str(self.output_dir),
            "seed": self.seed,
            "sample_order": self.sample_order,
            "workers": self.workers,
            "thresholds": asdict(self.thresholds),
        }

    def with_overrides(self, output_dir: Optional[Path] = None, seed: Optional[int] = None) -> RunConfig:
        data = self.to_dict()
        if output_dir is not None:
            data["output_dir"] = str(output_dir)
        if seed is not None:
            data["seed"] = seed
            for s in data["settings"]:
                s["seed"] = seed
        return RunConfig.from_dict(data)


def load_config(path: Path) -> RunConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix == ".toml":
            data = tomllib.loads(text)
        else:
            data = json.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return RunConfig.from_dict(data)


def deviations(config: RunConfig) -> list[str]:
    params = {m.model_id: dict(m.params) for m in config.models}
    return [
        "programs are restricted to a Python subset; prompts carry a grammar note",
        f"decoding parameters (provider defaults where empty): {json.dumps(params, sort_keys=True)}",
        "runtime failures count as errors on the affected inputs only",
        f"samples presented in {config.sample_order} order",
        "significance groups follow a reconstructed greedy rule",
    ]


# --- datasets ---------------------------------------------------------------


def dataset_path(run_dir: Path, spec: SettingSpec, index: int) -> Path:
    return run_dir / "datasets" / f"{spec.tag.value}-{spec.seed}" / f"{index:02d}.jsonl"


def generate_datasets(config: RunConfig) -> list[tuple[SettingSpec, int, CompositionalFunction, Dataset]]:
    out = []
    for spec in config.settings:
        for i in range(spec.sample_count):
            f = sample_function(spec, i)
            d = build_dataset(f, function_ref(spec, i))
            write_dataset(dataset_path(config.output_dir, spec, i), d, f)
            out.append((spec, i, f, d))
    return out


# --- run --------------------------------------------------------------------


@dataclass
class RunOutcome:
    records: list[AnyRecord]
    failures: list[dict] = field(default_factory=list)
    run_dir: Path = Path(".")

    @property
    def ok(self) -> bool:
        return not self.failures


def _failure(kind: str, where: str, exc: Exception) -> dict:
    return {"where": where, "kind": kind, "message": str(exc)}


def _cell_rule(gateway, config, spec, index, f, dataset, model, template, kind) -> tuple[list[AnyRecord], list[dict]]:
    keys = dict(
        model_id=model.model_id,
        setting=spec.tag.value,
        function_index=index,
        prompt_template_id=template.template_id,
        task_kind=kind,
        seed=spec.seed,
    )
    shown = presentation_order(dataset, config.sample_order, spec.seed)
    prompt = render_rule_prompt(shown, template) if kind == RULE_GENERATION else render_rules_provided_prompt(f, template)
    where = f"{kind}/{model.model_id}/{spec.tag.value}-{spec.seed}/{template.template_id}/{index:02d}"
    try:
        t = gateway.complete(prompt, template, model)
    except MalformedResponse as exc:
        score = score_response("", dataset, config.budget)
        rec = replace(to_record(score, "", **keys), detail=f"malformed_response: {exc}")
        return [rec], [_failure(exc.kind, where, exc) | {"hard": False}]
    except GatewayError as exc:
        return [], [_failure(exc.kind, where, exc) | {"hard": True}]
    score = score_response(t.raw_response, dataset, config.budget)
    return [to_record(score, t.raw_response, fingerprint=t.fingerprint, **keys)], []


def _cell_result(gateway, config, spec, index, dataset, model, template) -> tuple[list[AnyRecord], list[dict]]:
    shown, held = split_for_result_test(dataset, spec.seed)
    where = f"{RESULT_GENERATION}/{model.model_id}/{spec.tag.value}-{spec.seed}/{template.template_id}/{index:02d}"
    correct = 0
    responses, fps = [], []
    failures = []
    for sample in held:
        prompt = render_result_prompt(shown, sample.input, template)
        try:
            t = gateway.complete(prompt, template, model)
        except MalformedResponse as exc:
            failures.append(_failure(exc.kind, f"{where}/{sample.input.bits}", exc) | {"hard": False})
            responses.append("")
            fps.append("")
            continue
        except GatewayError as exc:
            return [], [_failure(exc.kind, where, exc) | {"hard": True}]
        responses.append(t.raw_response)
        fps.append(t.fingerprint)
        if extract_grid(t.raw_response) == sample.output:
            correct += 1
    rec = AccuracyRecord(
        model_id=model.model_id,
        setting=spec.tag.value,
        function_index=index,
        prompt_template_id=template.template_id,
        correct=correct,
        total=len(held),
        seed=spec.seed,
        responses=tuple(responses),
        fingerprints=tuple(fps),
    )
    return [rec], failures


def run(
    config: RunConfig,
    transport: Optional[httpx.BaseTransport] = None,
    offline: bool = False,
    gateway: Optional[Gateway] = None,
) -> RunOutcome:
    """Generate, query, score and report.  Cached transcripts are never re-requested."""
    run_dir = config.output_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    cells = generate_datasets(config)
    if gateway is None:
        gateway = Gateway(TranscriptCache(run_dir / "cache"), transport=transport, offline=offline)
    jobs = []
    for kind in config.task_kinds:
        for template in config.templates_for(kind):
            for model in config.models:
                for spec, index, f, dataset in cells:
                    if kind == RESULT_GENERATION:
                        jobs.append((_cell_result, (gateway, config, spec, index, dataset, model, template)))
                    else:
                        jobs.append((_cell_rule, (gateway, config, spec, index, f, dataset, model, template, kind)))
    records: list[AnyRecord] = []
    failures: list[dict] = []
    try:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            for recs, fails in pool.map(lambda job: job[0](*job[1]), jobs):
                records.extend(recs)
                failures.extend(fails)
    finally:
        gateway.close()
    records = sort_records(records)
    failures.sort(key=lambda d: (d["where"], d["kind"]))
    write_records(run_dir / "records" / "records.jsonl", records)
    write_reports(run_dir, records, config)
    write_manifest(run_dir, config, gateway, failures, records)
    hard = [f for f in failures if f.get("hard")]
    return RunOutcome(records, hard, run_dir)


def write_manifest(run_dir: Path, config: RunConfig, gateway: Gateway, failures: list[dict], records: Sequence[AnyRecord]) -> None:
    modes: dict[str, int] = {}
    for r in records:
        if isinstance(r, EvalRecord):
            modes[r.failure_mode.value] = modes.get(r.failure_mode.value, 0) + 1
    manifest = {
        "tool_version": __version__,
        "python": sys.version.split()[0],
        "httpx": httpx.__version__,
        "config": config.to_dict(),
        "seeds": sorted({s.seed for s in config.settings}),
        "deviations": deviations(config),
        "cache": gateway.cache.stats(),
        "network_calls": gateway.network_calls,
        "records": len(records),
        "failure_modes": dict(sorted(modes.items())),
        "failures": failures,
    }
    path = run_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_reports(run_dir: Path, records: Sequence[AnyRecord], config: RunConfig) -> dict[str, Path]:
    out = run_dir / "reports"
    out.mkdir(parents=True, exist_ok=True)
    summaries = summarize(records, config.thresholds)
    header = ["protocol deviations:"] + [f"  - {d}" for d in deviations(config)]
    files = {
        "csv": out / "summary.csv",
        "table": out / "summary.txt",
        "groups": out / "groups.txt",
    }
    files["csv"].write_text(summary_csv(summaries), encoding="utf-8")
    files["table"].write_text(summary_table(summaries, header), encoding="utf-8")
    files["groups"].write_text(groups_report(records), encoding="utf-8")
    return files


def load_run(run_dir: Path) -> tuple[RunConfig, dict]:
    manifest_path = Path(run_dir) / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"{run_dir} has no manifest.json")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    config = RunConfig.from_dict({**manifest["config"], "output_dir": str(run_dir)})
    return config, manifest


def rescore(run_dir: Path) -> RunOutcome:
    """Re-run analysis and metrics from cached transcripts only."""
    config, _ = load_run(run_dir)
    return run(config, offline=True)


def report(run_dir: Path) -> dict[str, Path]:
    config, _ = load_run(run_dir)
    records = read_records(Path(run_dir) / "records" / "records.jsonl")
    return write_reports(Path(run_dir), records, config)


# --- audit ------------------------------------------------------------------


def find_record(run_dir: Path, record_id: str) -> AnyRecord:
    records = read_records(Path(run_dir) / "records" / "records.jsonl")
    exact = [r for r in records if r.record_id == record_id]
    if exact:
        return exact[0]
    partial = [r for r in records if r.record_id.endswith(record_id)]
    if len(partial) == 1:
        return partial[0]
    raise KeyError(f"unknown record id {record_id!r}" if not partial else f"ambiguous record id {record_id!r}")


def _section(title: str) -> str:
    return f"== {title} " + "=" * max(0, 60 - len(title))


def audit(run_dir: Path, record_id: str) -> str:
    run_dir = Path(run_dir)
    config, _ = load_run(run_dir)
    rec = find_record(run_dir, record_id)
    lines = [f"record {rec.record_id}"]
    spec = next(s for s in config.settings if s.tag.value == rec.setting and s.seed == rec.seed)
    dataset, _ = read_dataset(dataset_path(run_dir, spec, rec.function_index))
    cache = TranscriptCache(run_dir / "cache")
    if isinstance(rec, AccuracyRecord):
        lines.append(f"accuracy {rec.accuracy:.2f}% ({rec.correct}/{rec.total})")
        for fp, resp in zip(rec.fingerprints, rec.responses):
            t = cache.get(fp) if fp else None
            lines += [_section("prompt"), t.prompt if t else "(not cached)", _section("response"), resp]
            grid = extract_grid(resp)
            lines.append(f"parsed grid: {grid.to_text() if grid else None}")
        return "\n".join(lines) + "\n"
    t: Optional[Transcript] = cache.get(rec.fingerprint) if rec.fingerprint else None
    lines += [_section("prompt"), t.prompt if t else "(not cached)"]
    lines += [_section("response"), rec.raw_response]
    score = score_response(rec.raw_response, dataset, config.budget)
    lines += [_section("extracted program"), score.program if score.program is not None else "(none)"]
    lines.append(_section("parse"))
    if score.diagnostics:
        lines += [f"diagnostic {d}" for d in score.diagnostics]
    elif score.module is not None:
        kinds: dict[str, int] = {}
        for node in score.module.walk():
            kinds[type(node).__name__] = kinds.get(type(node).__name__, 0) + 1
        funcs = sorted(score.module.functions())
        lines.append(f"functions: {', '.join(funcs) or '(none)'}")
        lines.append("nodes: " + ", ".join(f"{k}={v}" for k, v in sorted(kinds.items())))
        lines.append(f"statements: {len(to_json(score.module, spans=False)['body'])} top-level")
    if score.table is not None:
        table = score.table
        lines.append(_section(f"combinations ({len(table.combinations)}, sum_n={table.sum_n})"))
        for combo in table.combinations:
            sites = [s for s in table.sites if s.tokens == combo]
            where = ", ".join(f"{s.origin}@{s.span}" for s in sites)
            lines.append(f"  {format_combination(combo):<20} n={len(combo)}  {where}")
        lines.append(_section(f"output units ({len(table.output_units)}, sum_m={table.sum_m})"))
        for u in table.output_units:
            lines.append(f"  {str(u.span):<7} {u.origin:<8} m={u.count:<3} {u.text}")
        for span, note in table.uncounted:
            lines.append(f"  {str(span):<7} uncounted  {note}")
        lines.append(f"sum_n + sum_m = {table.sum_n} + {table.sum_m} = {table.l_plus}")
    if score.results:
        lines.append(_section("execution"))
        for r, s in zip(score.results, dataset):
            status = "ok" if r.grid == s.output else ("FAIL " + (r.failure_kind or "wrong grid"))
            lines.append(f"  {s.input.bits}  steps={r.steps:<6} {status}")
    lines.append(_section("metrics"))
    lines.append(
        f"failure_mode={rec.failure_mode.value} L(P+)={rec.l_plus} E(P)={rec.errors} "
        f"L(P)={rec.l_total} C(P)={rec.c_score:.2f}"
    )
    return "\n".join(lines) + "\n"
