import json
from pathlib import Path

import pytest

from rulecomp.cli import main
from rulecomp.gateway import ModelConfig
from rulecomp.orchestrator import (
    ConfigError,
    RunConfig,
    audit,
    find_record,
    load_config,
    report,
    rescore,
    run,
)
from rulecomp.records import EvalRecord, read_records

CONFIGS = Path(__file__).parent.parent / "configs"


def small_config(tmp_path, **overrides):
    data = {
        "seed": 3,
        "output_dir": str(tmp_path / "run"),
        "settings": [{"tag": "Horizontal", "sample_count": 2}, {"tag": "Random", "sample_count": 2}],
        "models": [
            {"model_id": "mock-sufficient", "provider": "mock", "mock_mode": "sufficient"},
            {"model_id": "mock-zero", "provider": "mock", "mock_mode": "zero"},
            {"model_id": "mock-silent", "provider": "mock", "mock_mode": "unparseable"},
        ],
        "task_kinds": ["rule_generation", "result_generation", "rules_provided"],
        "workers": 3,
    }
    data.update(overrides)
    return RunConfig.from_dict(data)


def reports(run_dir):
    return {p.name: p.read_bytes() for p in sorted((run_dir / "reports").iterdir())}


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        small_config(tmp_path, settings=[])
    with pytest.raises(ConfigError):
        small_config(tmp_path, models=[])
    with pytest.raises(ConfigError):
        small_config(tmp_path, task_kinds=["chat"])
    with pytest.raises(ConfigError):
        small_config(tmp_path, templates=["nope"])
    with pytest.raises(ConfigError):
        small_config(tmp_path, colour="red")
    with pytest.raises(ConfigError):
        small_config(tmp_path, sample_order="backwards")
    with pytest.raises(ConfigError):
        small_config(tmp_path, settings=[{"tag": "Diagonal"}])


def test_config_round_trip_and_overrides(tmp_path):
    cfg = small_config(tmp_path)
    again = RunConfig.from_dict(cfg.to_dict())
    assert again == cfg
    moved = cfg.with_overrides(output_dir=tmp_path / "elsewhere", seed=9)
    assert moved.output_dir == tmp_path / "elsewhere"
    assert {s.seed for s in moved.settings} == {9}


def test_toml_and_json_configs(tmp_path):
    cfg = load_config(CONFIGS / "mock.toml")
    assert [m.model_id for m in cfg.models] == ["mock-sufficient", "mock-zero", "mock-silent"]
    path = tmp_path / "c.json"
    path.write_text(json.dumps(small_config(tmp_path).to_dict()))
    assert load_config(path) == small_config(tmp_path)
    bad = tmp_path / "bad.toml"
    bad.write_text("this is = = not toml")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_mock_run_end_to_end(tmp_path):
    outcome = run(small_config(tmp_path))
    assert outcome.ok
    recs = outcome.records
    evals = [r for r in recs if isinstance(r, EvalRecord)]
    assert len(evals) == 2 * 4 * 3  # two program tasks, four functions, three models
    by_model = {}
    for r in evals:
        by_model.setdefault(r.model_id, set()).add((r.l_plus, r.errors))
    assert by_model["mock-sufficient"] == {(40, 0)}
    assert by_model["mock-zero"] == {(320, 0)}
    assert by_model["mock-silent"] == {(0, 16)}
    run_dir = outcome.run_dir
    table = (run_dir / "reports" / "summary.txt").read_text()
    assert table.startswith("# protocol deviations:")
    assert "subset" in table
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["records"] == len(recs)
    assert manifest["failure_modes"]["no_code_block"] == 8
    csv_lines = (run_dir / "reports" / "summary.csv").read_text().splitlines()
    sufficient = [line for line in csv_lines if line.startswith("rule_generation,mock-sufficient,Horizontal")]
    assert sufficient and ",100.00,100.00," in sufficient[0]
    provided = [line for line in csv_lines if line.startswith("rules_provided,mock-sufficient")]
    assert provided and all(",100.00,100.00," in line for line in provided)


def test_rerun_is_byte_identical_and_offline(tmp_path):
    cfg = small_config(tmp_path)
    first = run(cfg)
    before = reports(first.run_dir)
    records_before = (first.run_dir / "records" / "records.jsonl").read_bytes()
    second = rescore(first.run_dir)
    assert second.ok
    assert reports(second.run_dir) == before
    assert (second.run_dir / "records" / "records.jsonl").read_bytes() == records_before
    manifest = json.loads((first.run_dir / "manifest.json").read_text())
    assert manifest["network_calls"] == 0 and manifest["cache"]["misses"] == 0
    report(first.run_dir)
    assert reports(first.run_dir) == before


def test_reports_rebuild_from_records_alone(tmp_path):
    outcome = run(small_config(tmp_path))
    before = reports(outcome.run_dir)
    for p in (outcome.run_dir / "reports").iterdir():
        p.unlink()
    report(outcome.run_dir)
    assert reports(outcome.run_dir) == before


def test_same_config_same_artifacts(tmp_path):
    a = run(small_config(tmp_path / "a"))
    b = run(small_config(tmp_path / "b"))
    assert reports(a.run_dir) == reports(b.run_dir)
    ds_a = sorted(p.relative_to(a.run_dir) for p in (a.run_dir / "datasets").rglob("*.jsonl"))
    assert all((a.run_dir / p).read_bytes() == (b.run_dir / p).read_bytes() for p in ds_a)


def test_malformed_responses_are_flagged_not_fatal(tmp_path):
    cfg = small_config(tmp_path, models=[{"model_id": "mute", "provider": "mock", "mock_mode": "empty"}],
                       task_kinds=["rule_generation"])
    outcome = run(cfg)
    assert outcome.ok
    assert all(r.detail.startswith("malformed_response") and r.errors == 16 for r in outcome.records)


def test_hard_failures_are_reported(tmp_path, monkeypatch):
    monkeypatch.delenv("RULECOMP_NO_SUCH_KEY", raising=False)
    cfg = small_config(tmp_path, models=[{"model_id": "real", "provider": "openai", "api_key_env": "RULECOMP_NO_SUCH_KEY"}],
                       task_kinds=["rule_generation"])
    outcome = run(cfg)
    assert not outcome.ok and outcome.records == []
    assert {f["kind"] for f in outcome.failures} == {"auth"}


def test_audit(tmp_path):
    outcome = run(small_config(tmp_path))
    rid = "rule_generation/mock-sufficient/Horizontal-3/rule-plain/00"
    text = audit(outcome.run_dir, rid)
    assert text.startswith(f"record {rid}")
    assert "combinations (8, sum_n=8)" in text and "output units" in text and "sum_m=32" in text
    assert "sum_n + sum_m = 8 + 32 = 40" in text
    assert text.count("steps=") == 16
    assert "C(P)=100.00" in text
    silent = audit(outcome.run_dir, "rule_generation/mock-silent/Random-3/rule-plain/01")
    assert "failure_mode=no_code_block" in silent
    result = audit(outcome.run_dir, "result_generation/mock-sufficient/Random-3/result-plain/00")
    assert "accuracy 100.00% (8/8)" in result
    with pytest.raises(KeyError):
        find_record(outcome.run_dir, "nope/00")


def test_audit_parse_failure_shows_span(tmp_path):
    cfg = small_config(
        tmp_path,
        models=[{"model_id": "classy", "provider": "mock", "mock_mode": "fixed",
                 "fixed_response": "```python\nclass Rule:\n    pass\n```"}],
        task_kinds=["rule_generation"],
    )
    outcome = run(cfg)
    text = audit(outcome.run_dir, "classy/Horizontal-3/rule-plain/00")
    assert "diagnostic 1:1: 'class' is not supported" in text


# --- CLI -------------------------------------------------------------------------------


def test_cli_run_score_report_audit(tmp_path, capsys):
    out = tmp_path / "cli"
    assert main(["run", "--config", str(CONFIGS / "mock.toml"), "--out", str(out)]) == 0
    table = capsys.readouterr().out
    assert "mock-sufficient" in table and "protocol deviations" in table
    before = reports(out)
    assert main(["score", str(out)]) == 0
    assert reports(out) == before
    assert main(["report", str(out)]) == 0
    assert "reconstructed" in capsys.readouterr().out
    rid = read_records(out / "records" / "records.jsonl")[0].record_id
    assert main(["audit", str(out), rid]) == 0
    assert main(["audit", str(out), "no/such/record"]) == 1


def test_cli_gen_and_offline(tmp_path, capsys):
    out = tmp_path / "gen"
    assert main(["gen", "--config", str(CONFIGS / "mock.toml"), "--out", str(out), "--seed", "5"]) == 0
    assert len(list((out / "datasets").rglob("*.jsonl"))) == 6
    assert (out / "datasets" / "Horizontal-5" / "00.meta.json").exists()
    assert main(["run", "--config", str(CONFIGS / "mock.toml"), "--out", str(out), "--offline"]) == 1
    assert "cache_miss" in capsys.readouterr().err


def test_cli_score_single_response(tmp_path, capsys):
    out = tmp_path / "one"
    main(["gen", "--config", str(CONFIGS / "mock.toml"), "--out", str(out)])
    capsys.readouterr()
    response = tmp_path / "response.txt"
    response.write_text("Sorry, I could not work it out.")
    dataset = out / "datasets" / "Random-0" / "01.jsonl"
    assert main(["score", "--response", str(response), "--dataset", str(dataset)]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["failure_mode"] == "no_code_block"
    assert (result["l_plus"], result["errors"], result["l_total"], result["c_score"]) == (0, 16, 320, 0.0)


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"settings": [], "models": []}))
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["score"]) == 2
    assert main(["score", "--response", "x"]) == 2
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_model_config_round_trips_through_run_config(tmp_path):
    cfg = small_config(tmp_path)
    assert all(isinstance(m, ModelConfig) for m in cfg.models)
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))).models == cfg.models
