"""Parser, formatter, and linter tests, including fuzz robustness."""

import random
import string

import pytest

from voltvar.config import builtin_fis_path, builtin_rules_path, load_fis_with_rules
from voltvar.ruledsl import format_rule, format_ruleset, lint, parse_ruleset

RULE_CONNECT = (
    "If (Reactive_power is High) and (Tap is Normal) and (Shunt_Off is Disconnected) "
    "then (Tap is -2)(Capacitor is Connect)"
)
RULE_STEP_DOWN = (
    "If (Voltage is H) and (Reactive_power is Good) and (Tap is not Tap1) "
    "then (Tap is -1)"
)


@pytest.fixture(scope="module")
def default_fis():
    fis, diags = load_fis_with_rules(builtin_fis_path(), builtin_rules_path())
    assert not diags
    return fis


def test_operator_rules_parse_clean():
    rules, diags = parse_ruleset(RULE_CONNECT + "\n" + RULE_STEP_DOWN + "\n")
    assert diags == []
    assert len(rules) == 2
    assert len(rules[0].antecedents) == 3
    assert len(rules[0].consequents) == 2
    assert len(rules[1].antecedents) == 3
    assert len(rules[1].consequents) == 1
    assert rules[1].antecedents[2].negated
    assert rules[0].consequents[0].term == "-2"


def test_operator_rules_parse_with_trailing_period():
    rules, diags = parse_ruleset(RULE_CONNECT + ".\n" + RULE_STEP_DOWN + ".")
    assert diags == []
    assert len(rules) == 2


def test_empty_input():
    rules, diags = parse_ruleset("")
    assert rules == [] and diags == []


def test_comment_only_input():
    rules, diags = parse_ruleset("-- nothing but commentary\n   \n")
    assert rules == [] and diags == []


def test_trailing_comment_after_rule():
    rules, diags = parse_ruleset("If (Voltage is G) then (Tap is 0) -- hold\n")
    assert diags == []
    assert len(rules) == 1


def test_missing_term_is_spanned_error():
    text = "If (Voltage is) then (Tap is 0)"
    rules, diags = parse_ruleset(text)
    assert rules == []
    assert len(diags) == 1
    start, end = diags[0].span
    assert text[start:end] == "(Voltage is)"


def test_missing_then_is_error():
    rules, diags = parse_ruleset("If (Voltage is G) (Tap is 0)")
    assert rules == []
    assert len(diags) == 1 and "then" in diags[0].message


def test_unbalanced_parenthesis_is_error():
    rules, diags = parse_ruleset("If (Voltage is G then (Tap is 0)")
    assert rules == []
    assert diags and diags[0].is_error()


def test_error_recovery_continues_to_next_rule():
    text = "If (Voltage is) then (Tap is 0)\nIf (Voltage is G) then (Tap is 0)\n"
    rules, diags = parse_ruleset(text)
    assert len(rules) == 1
    assert len(diags) == 1


def test_keywords_case_insensitive():
    rules, diags = parse_ruleset("IF (Voltage IS NOT G) THEN (Tap IS 0)")
    assert diags == []
    assert rules[0].antecedents[0].negated


def test_format_is_canonical_paper_style():
    rules, _ = parse_ruleset(RULE_CONNECT)
    assert format_rule(rules[0]) == RULE_CONNECT


def test_format_emits_is_not():
    rules, _ = parse_ruleset("if (Voltage is not G) then (Tap is 0)")
    assert format_rule(rules[0]) == "If (Voltage is not G) then (Tap is 0)"


def test_parse_format_parse_roundtrip():
    text = RULE_CONNECT + "\n" + RULE_STEP_DOWN + "\n"
    rules, _ = parse_ruleset(text)
    formatted = format_ruleset(rules)
    rules2, diags2 = parse_ruleset(formatted)
    assert diags2 == []
    assert [
        (r.antecedents, r.consequents) for r in rules2
    ] == [(r.antecedents, r.consequents) for r in rules]


def test_shipped_rulebase_is_canonical_fixpoint():
    text = builtin_rules_path().read_text(encoding="utf-8")
    rules, diags = parse_ruleset(text)
    assert diags == []
    assert len(rules) == 14
    assert format_ruleset(rules) == text


def test_shipped_rulebase_contains_operator_rules():
    text = builtin_rules_path().read_text(encoding="utf-8")
    assert RULE_CONNECT in text
    assert RULE_STEP_DOWN in text


def test_spans_inside_source_bounds():
    texts = [
        RULE_CONNECT,
        "If (V is) then (T is 0)\nIf",
        "then then then",
        "((((",
    ]
    for text in texts:
        rules, diags = parse_ruleset(text)
        for r in rules:
            assert 0 <= r.span[0] <= r.span[1] <= len(text)
        for d in diags:
            if d.span is not None:
                assert 0 <= d.span[0] <= d.span[1] <= len(text)


def test_fuzz_never_raises():
    rng = random.Random(1234)
    alphabet = string.printable + "é€世界\x00\x1b"
    for _ in range(2000):
        n = rng.randint(0, 120)
        text = "".join(rng.choice(alphabet) for _ in range(n))
        rules, diags = parse_ruleset(text)
        for d in diags:
            if d.span is not None:
                assert 0 <= d.span[0] <= d.span[1] <= len(text)


# ---------------------------------------------------------------------------
# lint


def test_lint_shipped_base_is_clean(default_fis):
    diags = lint(list(default_fis.rules), default_fis)
    assert diags == []


def test_lint_unknown_variable(default_fis):
    rules, _ = parse_ruleset("If (Frequency is High) then (Tap is 0)")
    diags = lint(rules, default_fis)
    assert any(d.is_error() and "Frequency" in d.message for d in diags)


def test_lint_unknown_term(default_fis):
    rules, _ = parse_ruleset("If (Voltage is Medium) then (Tap is 0)")
    diags = lint(rules, default_fis)
    assert any(d.is_error() and "Medium" in d.message for d in diags)


def test_lint_duplicate_rules_warn(default_fis):
    text = "If (Voltage is G) then (Tap is 0)\nIf (Voltage is G) then (Tap is 0)\n"
    rules, _ = parse_ruleset(text)
    diags = lint(rules, default_fis)
    assert any("duplicates" in d.message and d.severity == "warning" for d in diags)


def test_lint_contradictory_consequents_warn(default_fis):
    text = "If (Voltage is G) then (Tap is 0)\nIf (Voltage is G) then (Tap is 1)\n"
    rules, _ = parse_ruleset(text)
    diags = lint(rules, default_fis)
    assert any("contradictory" in d.message for d in diags)


def test_lint_output_without_rule_warns(default_fis):
    rules, _ = parse_ruleset("If (Voltage is G) then (Tap is 0)")
    diags = lint(rules, default_fis)
    assert any("Capacitor" in d.message and d.severity == "warning" for d in diags)


def test_roundtrip_on_generated_rules():
    """format -> parse is the identity for any structurally valid rule."""
    rng = random.Random(909)
    variables = ["Voltage", "Reactive_power", "Tap", "Shunt_Off", "Time", "X_1"]
    terms = ["VL", "L", "G", "H", "VH", "Normal", "-2", "-1", "0", "1", "2", "T_9"]
    for _ in range(300):
        conds = " and ".join(
            f"({rng.choice(variables)} is "
            f"{'not ' if rng.random() < 0.3 else ''}{rng.choice(terms)})"
            for _ in range(rng.randint(1, 4))
        )
        cons = "".join(
            f"({rng.choice(variables)} is {rng.choice(terms)})"
            for _ in range(rng.randint(1, 2))
        )
        text = f"If {conds} then {cons}"
        rules, diags = parse_ruleset(text)
        assert diags == [] and len(rules) == 1, text
        assert format_rule(rules[0]) == text
        reparsed, _ = parse_ruleset(format_rule(rules[0]))
        assert (reparsed[0].antecedents, reparsed[0].consequents) == (
            rules[0].antecedents,
            rules[0].consequents,
        )
