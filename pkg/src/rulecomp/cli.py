"""Command line: ``rulecomp {gen,run,score,report,audit}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .core import read_dataset
from .interpreter import ExecBudget
from .orchestrator import (
    ConfigError,
    audit,
    generate_datasets,
    load_config,
    report,
    rescore,
    run,
)
from .pipeline import score_response, to_record

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_USAGE = 2


def _config(args: argparse.Namespace):
    config = load_config(args.config)
    return config.with_overrides(output_dir=args.out, seed=args.seed)


def cmd_gen(args: argparse.Namespace) -> int:
    config = _config(args)
    cells = generate_datasets(config)
    print(f"wrote {len(cells)} datasets under {config.output_dir / 'datasets'}")
    return EXIT_OK


def _print_outcome(outcome) -> int:
    table = outcome.run_dir / "reports" / "summary.txt"
    print(table.read_text(encoding="utf-8"), end="")
    for f in outcome.failures:
        print(f"FAILED {f['where']}: {f['kind']}: {f['message']}", file=sys.stderr)
    return EXIT_OK if outcome.ok else EXIT_FAILURES


def cmd_run(args: argparse.Namespace) -> int:
    config = _config(args)
    return _print_outcome(run(config, offline=args.offline))


def cmd_score(args: argparse.Namespace) -> int:
    if args.response is not None:
        if args.dataset is None:
            print("--response needs --dataset", file=sys.stderr)
            return EXIT_USAGE
        dataset, _ = read_dataset(Path(args.dataset))
        text = Path(args.response).read_text(encoding="utf-8")
        score = score_response(text, dataset, ExecBudget(max_steps=args.max_steps))
        rec = to_record(
            score, text, model_id="-", setting="-", function_index=0, prompt_template_id="-"
        )
        out = {k: rec.to_json()[k] for k in ("failure_mode", "sum_n", "sum_m", "l_plus", "errors", "l_total", "c_score", "detail")}
        print(json.dumps(out, indent=2))
        return EXIT_OK
    if args.run_dir is None:
        print("score needs a run directory or --response/--dataset", file=sys.stderr)
        return EXIT_USAGE
    return _print_outcome(rescore(Path(args.run_dir)))


def cmd_report(args: argparse.Namespace) -> int:
    files = report(Path(args.run_dir))
    print(files["table"].read_text(encoding="utf-8"), end="")
    print(files["groups"].read_text(encoding="utf-8"), end="")
    return EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    try:
        print(audit(Path(args.run_dir), args.record_id), end="")
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_FAILURES
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rulecomp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, required=True, help="run config (.toml or .json)")
        p.add_argument("--out", type=Path, default=None, help="override output_dir")
        p.add_argument("--seed", type=int, default=None, help="override the seed of every setting")

    p = sub.add_parser("gen", help="write datasets only")
    run_args(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="query models, score and report")
    run_args(p)
    p.add_argument("--offline", action="store_true", help="fail on cache misses instead of calling providers")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="re-score a run from its cache, or one response file")
    p.add_argument("run_dir", nargs="?", default=None)
    p.add_argument("--response", default=None, help="file holding a raw model response")
    p.add_argument("--dataset", default=None, help="dataset .jsonl for --response")
    p.add_argument("--max-steps", type=int, default=ExecBudget().max_steps)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="rebuild reports from stored records")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("audit", help="trace how one record was scored")
    p.add_argument("run_dir")
    p.add_argument("record_id")
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
