import re

import pytest
from hypothesis import given, strategies as st

from conftest import parse_ok
from rulecomp.core import BIT_LETTERS, InputString, Setting
from rulecomp.gateway import ModelConfig, fingerprint
from rulecomp.interpreter import count_errors
from rulecomp.prompts import (
    SUBSET_GRAMMAR_NOTE,
    TEMPLATES,
    PromptTemplate,
    describe_rules,
    format_samples,
    get_template,
    parse_query,
    parse_rules,
    parse_samples,
    render_result_prompt,
    render_rule_prompt,
    render_rules_provided_prompt,
)
from rulecomp.taskgen import SettingSpec, build_dataset, presentation_order, sample_function, split_for_result_test

RULE_TEMPLATES = [t for t in TEMPLATES.values() if t.task_kind == "rule_generation"]


def test_template_placeholders_are_checked():
    with pytest.raises(ValueError):
        PromptTemplate("x", "rule_generation", "{samples} only")
    with pytest.raises(ValueError):
        PromptTemplate("x", "rules_provided", "{rules_text} {subset_grammar_note} {oops}")
    with pytest.raises(ValueError):
        PromptTemplate("x", "chat", "{samples}")
    with pytest.raises(KeyError):
        get_template("nope")


@pytest.mark.parametrize("template", RULE_TEMPLATES, ids=lambda t: t.template_id)
def test_rule_prompt_lists_all_sixteen_samples(template, random_fn):
    _, ds = random_fn
    prompt = render_rule_prompt(ds, template)
    assert len(re.findall(r"^Input: [A-H]{4}$", prompt, re.M)) == 16
    assert parse_samples(prompt) == list(ds.samples)
    assert SUBSET_GRAMMAR_NOTE in prompt and "def generate(s):" in prompt


def test_rule_prompt_keeps_dataset_order(random_fn):
    _, ds = random_fn
    shuffled = presentation_order(ds, "shuffled", 4)
    prompt = render_rule_prompt(shuffled, get_template("rule-plain"))
    assert [s.input for s in parse_samples(prompt)] == shuffled.inputs


def test_three_styles_three_fingerprints(random_fn):
    _, ds = random_fn
    model = ModelConfig("m", provider="mock")
    prints = {fingerprint(model, t, render_rule_prompt(ds, t)) for t in RULE_TEMPLATES}
    assert len(RULE_TEMPLATES) == 3 and len(prints) == 3


def test_wrong_kind_is_rejected(random_fn):
    f, ds = random_fn
    with pytest.raises(ValueError):
        render_rule_prompt(ds, get_template("rules-plain"))
    with pytest.raises(ValueError):
        render_rules_provided_prompt(f, get_template("rule-plain"))


def test_result_prompts(random_fn):
    _, ds = random_fn
    shown, held = split_for_result_test(ds, 0)
    template = get_template("result-plain")
    prompts = [render_result_prompt(shown, s.input, template) for s in held]
    assert len(prompts) == 8
    for prompt, s in zip(prompts, held):
        assert len(parse_samples(prompt)) == 8
        assert parse_query(prompt) == s.input
    with pytest.raises(ValueError):
        render_result_prompt(shown, shown[0].input, template)


def test_horizontal_description_names_rows():
    f = sample_function(SettingSpec(Setting.HORIZONTAL), 0)
    text = describe_rules(f)
    assert "Position 1 of the string (A or B) controls row 1." in text
    assert "Position 4 of the string (G or H) controls row 4." in text
    assert len(re.findall(r"cell \(\d,\d\) is", text)) == 16


def test_random_description_lists_cells():
    f = sample_function(SettingSpec(Setting.RANDOM, 3), 5)
    text = describe_rules(f)
    assert "controls the cells (" in text


def _program_from_description(text):
    """Write a rule program mechanically from the cell sentences."""
    rules = parse_rules(text)
    lines = ["def generate(s):", "    g = [['.'] * 4 for _ in range(4)]"]
    for (r, c), mapping in sorted(rules.items()):
        bit = next(i for i, pair in enumerate(BIT_LETTERS) if set(pair) == set(mapping))
        a, b = BIT_LETTERS[bit]
        lines.append(f"    g[{r}][{c}] = '{mapping[a]}' if s[{bit}] == '{a}' else '{mapping[b]}'")
    lines.append("    return g")
    return "\n".join(lines) + "\n"


@given(st.sampled_from(list(Setting)), st.integers(0, 5000), st.integers(0, 29))
def test_description_round_trip(tag, seed, index):
    f = sample_function(SettingSpec(tag, seed), index)
    prompt = render_rules_provided_prompt(f, get_template("rules-plain"))
    program = parse_ok(_program_from_description(prompt))
    assert count_errors(program, build_dataset(f)) == 0


def test_sample_format():
    f = sample_function(SettingSpec(Setting.BLOCK), 0)
    ds = build_dataset(f)
    block = format_samples(ds.samples[:1])
    assert block.splitlines()[0] == "Input: ACEG" and block.splitlines()[1] == "Output:"
    assert block.splitlines()[2:] == list(f(InputString("ACEG")).rows)
