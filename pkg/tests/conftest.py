from __future__ import annotations

import sys
from pathlib import Path

import pytest

from rulecomp.core import Setting
from rulecomp.lang import parse
from rulecomp.taskgen import SettingSpec, build_dataset, sample_function

TESTS = Path(__file__).parent
FIXTURES = TESTS / "fixtures"
sys.path.insert(0, str(TESTS))

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        terminalreporter.write_line(ACCEPTANCE[key])


def parse_ok(source: str):
    outcome = parse(source)
    assert outcome.ok, outcome.diagnostics
    return outcome.result


@pytest.fixture
def horizontal():
    f = sample_function(SettingSpec(Setting.HORIZONTAL, seed=0), 0)
    return f, build_dataset(f, "Horizontal-0-00")


@pytest.fixture
def random_fn():
    f = sample_function(SettingSpec(Setting.RANDOM, seed=0), 1)
    return f, build_dataset(f, "Random-0-01")
