import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from conftest import parse_ok
from programgen import random_program
from rulecomp.lang import extract_code_block, fenced_blocks, lex, parse, to_json, unparse
from rulecomp.lang.nodes import DictExpr, If, Module

seeds = st.integers(0, 2**32)


def test_lex_simple_line():
    tokens, diags = lex("x = 'A'  # c\n")
    assert diags == []
    assert [(t.kind, t.value) for t in tokens] == [
        ("NAME", "x"), ("OP", "="), ("STRING", "A"), ("COMMENT", "# c"), ("NEWLINE", "\n"), ("END", ""),
    ]
    assert str(tokens[2].span) == "1:5"


def test_lex_string_forms():
    tokens, _ = lex("a = 'x' \"y\" r'\\n' '\\t'\n")
    assert [t.value for t in tokens if t.kind == "STRING"] == ["x", "y", "\\n", "\t"]
    m = parse_ok("a = 'ab' 'cd'\n")
    assert m.body[0].value.value == "abcd"


def test_indent_blocks():
    m = parse_ok("def generate(s):\n    if s[0] == 'A':\n        return 1\n    return 2\n")
    assert len(m.body) == 1 and len(m.body[0].body) == 2


def test_implicit_and_explicit_joins():
    m = parse_ok("x = [1,\n     2,\n  3]\ny = 1 + \\\n    2\n")
    assert len(m.body) == 2


@pytest.mark.parametrize(
    "source, where, message",
    [
        ("class A:\n    pass\n", "1:1", "'class'"),
        ("import os\n", "1:1", "'import'"),
        ("x = 1 / 2\n", "1:7", "'/'"),
        ("x = 2 ** 3\n", "1:7", "'**'"),
        ("x = foo(1)\n", "1:5", "'foo'"),
        ("x = (1,\n", "2:1", "unclosed"),
        ("x = 'abc\n", "1:5", "unterminated"),
        ("x = y.z\n", "1:7", "attribute"),
        ("f(a=1)\n", "1:3", "keyword"),
        ("x = {1, 2}\n", "1:7", "set literal"),
        ("x = a = 1\n", "1:7", "chained"),
        ("def f(s):\n  return s\n    x\n", "3:1", "indent"),
    ],
)
def test_rejections_carry_spans(source, where, message):
    outcome = parse(source)
    assert not outcome.ok and outcome.diagnostics
    d = outcome.diagnostics[0]
    assert str(d.span) == where and message in d.message


def test_dict_return_program_has_one_sixteen_entry_dict():
    entries = ", ".join(f"'{a}{c}{e}{g}': ['....'] * 4" for a in "AB" for c in "CD" for e in "EF" for g in "GH")
    m = parse_ok(f"def generate(s):\n    return {{{entries}}}[s]\n")
    dicts = [n for n in m.walk() if isinstance(n, DictExpr)]
    assert len(dicts) == 1 and len(dicts[0].keys) == 16


def test_if_elif_else_golden_tree():
    m = parse_ok("if s[0] == 'A':\n    x = 1\nelif s[0] == 'B':\n    x = 2\nelse:\n    x = 3\n")
    (node,) = m.body
    assert isinstance(node, If)
    assert len(node.branches) == 2 and node.orelse is not None
    assert [b.test.comparators[0].value for b in node.branches] == ["A", "B"]
    assert to_json(node, spans=False) == {
        "kind": "If",
        "branches": [
            {"kind": "Branch",
             "test": {"kind": "Compare",
                      "left": {"kind": "Subscript", "value": {"kind": "Name", "id": "s"},
                               "index": {"kind": "Const", "value": 0}},
                      "ops": ["=="], "comparators": [{"kind": "Const", "value": letter}]},
             "body": [{"kind": "Assign", "target": {"kind": "Name", "id": "x"},
                       "value": {"kind": "Const", "value": value}, "annotation": None}]}
            for letter, value in (("A", 1), ("B", 2))
        ],
        "orelse": {"kind": "Else", "body": [{"kind": "Assign", "target": {"kind": "Name", "id": "x"},
                                             "value": {"kind": "Const", "value": 3}, "annotation": None}]},
    }


def _ifs(module: Module):
    return [n for n in module.walk() if isinstance(n, If)]


@settings(max_examples=150, suppress_health_check=[HealthCheck.too_slow])
@given(seeds)
def test_else_links_stay_on_their_level(seed):
    outcome = parse(random_program(seed))
    if not outcome.ok:
        return
    for node in _ifs(outcome.result):
        chains = {b.chain for b in node.branches}
        assert len(chains) == 1
        if node.orelse is not None:
            assert node.orelse.chain == node.branches[0].chain


def test_nested_chain_records_enclosing_arm():
    m = parse_ok("if s[0] == 'A':\n    if s[1] == 'C':\n        x = 1\n    else:\n        x = 2\n")
    outer = m.body[0]
    inner = outer.branches[0].body[0]
    assert inner.branches[0].chain == (outer.branches[0].span,)
    assert inner.orelse.chain == (outer.branches[0].span,)


@settings(max_examples=300, suppress_health_check=[HealthCheck.too_slow])
@given(seeds)
def test_print_then_parse_round_trips(seed):
    outcome = parse(random_program(seed))
    if not outcome.ok:
        return
    again = parse(unparse(outcome.result))
    assert again.ok, again.diagnostics
    assert again.result == outcome.result
    assert to_json(again.result, spans=False) == to_json(outcome.result, spans=False)


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=300))
def test_lex_and_parse_are_total_on_text(text):
    first = parse(text)
    second = parse(text)
    assert first.ok or first.diagnostics
    assert first == second


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=300))
def test_lex_and_parse_are_total_on_bytes(data):
    outcome = parse(data.decode("latin-1"))
    assert outcome.ok or outcome.diagnostics


def test_deep_nesting_is_a_diagnostic_not_a_crash():
    outcome = parse("x = " + "(" * 5000 + "1" + ")" * 5000 + "\n")
    assert not outcome.ok and outcome.diagnostics


def test_comments_are_kept_aside():
    m = parse_ok("# lead\nx = 1  # trail\n")
    assert [c.text for c in m.comments] == ["# lead", "# trail"]
    assert m == parse_ok("x = 1\n")


def test_fenced_blocks():
    text = "intro\n```python\nx = 1\n```\nmore\n~~~\ny = 2\n~~~\n"
    assert fenced_blocks(text) == ["x = 1\n", "y = 2\n"]
    assert fenced_blocks("```\nz = 3\n") == ["z = 3\n"]


def test_extract_prefers_last_block():
    assert extract_code_block("```\nx = 1\n```\nthen\n```py\ny = 2\n```") == "y = 2\n"


@pytest.mark.parametrize(
    "response, expected",
    [
        ("def generate(s):\n    return s\n", "def generate(s):\n    return s\n"),
        ("x = 1\n", "x = 1\n"),
        ("nothing", None),
        ("I cannot do this.", None),
        ("", None),
    ],
)
def test_extract_without_fences(response, expected):
    assert extract_code_block(response) == expected
