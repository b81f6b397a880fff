import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from conftest import parse_ok
from oracles import CLASSIFIED
from programgen import random_program
from rulecomp.core import Grid, InputString, Setting
from rulecomp.interpreter import ExecBudget, count_errors, normalize_output, run_dataset, run_program
from rulecomp.lang import parse
from rulecomp.reference import constant_program, sufficient_program, zero_program
from rulecomp.taskgen import SettingSpec, build_dataset, sample_function

# sandbox kinds plus the errors an ordinary program can raise on bad data

SMALL = ExecBudget(max_steps=2000)


def run(source, x="ACEG", budget=ExecBudget()):
    return run_program(parse_ok(source), x, budget)


def test_row_strings_and_nested_lists():
    assert run("def generate(s):\n    return ['....'] * 4\n").grid == Grid(("....",) * 4)
    r = run("def generate(s):\n    return [['*'] * 4 for _ in range(4)]\n")
    assert r.grid == Grid(("****",) * 4) and r.ok


def test_input_reaches_program():
    src = "def generate(s):\n    row = '****' if s[0] == 'B' else '....'\n    return [row] * 4\n"
    assert run(src, "ACEG").grid.rows[0] == "...."
    assert run(src, "BCEG").grid.rows[0] == "****"


def test_entry_fallbacks():
    assert run("def solve(x, k=1):\n    return ['.*.*'] * 4\n").ok
    assert run("result = ['....'] * 4\n").ok
    r = run("x = 1\n")
    assert r.failure_kind == "no_entry"


@pytest.mark.parametrize(
    "source, kind",
    [
        ("def generate(s):\n    while True:\n        pass\n", "step_budget"),
        ("def generate(s):\n    return generate(s)\n", "recursion"),
        ("def generate(s):\n    return 'x' * 100000\n", "collection_budget"),
        ("def generate(s):\n    k = 2\n    for i in range(80):\n        k = k * k\n    return k\n", "value_budget"),
        ("def generate(s):\n    return nope\n", "undefined_name"),
        ("def generate(s):\n    return 5\n", "bad_return"),
        ("def generate(s):\n    return ['..'] * 4\n", "bad_return"),
        ("def generate(s):\n    return [1][3]\n", "IndexError"),
        ("def generate(s):\n    return {'A': 1}['B']\n", "KeyError"),
        ("def generate(s):\n    return 1 // 0\n", "ZeroDivisionError"),
        ("def generate(s):\n    return 'a' + 1\n", "TypeError"),
    ],
)
def test_failures_are_classified(source, kind):
    r = run(source, budget=ExecBudget(max_steps=5000))
    assert not r.ok and r.grid is None
    assert r.failure_kind == kind


def test_steps_never_exceed_budget():
    r = run("def generate(s):\n    k = 0\n    while True:\n        k += 1\n", budget=ExecBudget(max_steps=777))
    assert r.failure_kind == "step_budget" and r.steps == 777


def test_each_input_gets_a_fresh_environment():
    src = "SEEN = []\ndef generate(s):\n    SEEN.append(s)\n    return ['*' * len(SEEN) + '.' * (4 - len(SEEN))] * 4\n"
    m = parse_ok(src)
    assert {run_program(m, x).grid for x in ("ACEG", "BDFH", "ACEH")} == {Grid(("*...",) * 4)}


def test_normalize_output_rejects_bad_shapes():
    from rulecomp.interpreter import RuntimeFailure

    assert normalize_output(("....",) * 4) == Grid(("....",) * 4)
    for bad in (None, "....", ["...."] * 3, [["**", ".", ".", "."]] * 4, ["..x."] * 4):
        with pytest.raises(RuntimeFailure):
            normalize_output(bad)


@pytest.mark.parametrize("tag", list(Setting))
def test_reference_programs_reproduce_the_dataset(tag):
    spec = SettingSpec(tag, seed=11)
    for i in range(5):
        f = sample_function(spec, i)
        ds = build_dataset(f)
        assert count_errors(parse_ok(sufficient_program(f)), ds) == 0
        assert count_errors(parse_ok(zero_program(ds)), ds) == 0


def test_constant_program_is_wrong_fifteen_times(random_fn):
    _, ds = random_fn
    for index in (0, 7, 15):
        assert count_errors(parse_ok(constant_program(ds, index)), ds) == 15


def test_runtime_failures_count_only_where_they_happen(horizontal):
    f, ds = horizontal
    body = sufficient_program(f).replace("def generate(s):\n", "def generate(s):\n    if s == 'BDFH':\n        return 1 // 0\n")
    m = parse_ok(body)
    results = run_dataset(m, ds)
    assert [r.input for r in results if not r.ok] == ["BDFH"]
    assert count_errors(m, ds) == 1


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 2**32), st.sampled_from(InputString.all()))
def test_generated_programs_are_deterministic_and_total(seed, x):
    outcome = parse(random_program(seed))
    if not outcome.ok:
        return
    a = run_program(outcome.result, x, SMALL)
    b = run_program(outcome.result, x, SMALL)
    assert a == b
    assert a.steps <= SMALL.max_steps
    assert a.ok or a.failure_kind in CLASSIFIED, a


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        ExecBudget(max_steps=0)
    with pytest.raises(ValueError):
        ExecBudget(max_collection_size=-1)
