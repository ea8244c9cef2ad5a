"""Textual rule language: parser, canonical formatter, and linter.

The grammar is deliberately tiny -- it is exactly what a dispatch
operator writes down::

    rule       := "If" cond ("and" cond)* "then" consequent+
    cond       := "(" IDENT "is" ["not"] TERM ")"
    consequent := "(" IDENT "is" TERM ")"

Rules are separated by newlines or ".", keywords are case-insensitive,
``--`` starts a comment to end of line, and TERM may be an identifier or
a signed integer-like token such as ``-2``.  The parser recovers at rule
boundaries and reports every problem as a spanned diagnostic; it never
raises on arbitrary input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

from .fuzzy import Condition, Consequent, Diagnostic, FisDefinition, Rule, has_errors

KEYWORDS = {"if", "and", "then", "is", "not"}


@dataclass(frozen=True)
class Token:
    kind: str  # "lparen" | "rparen" | "word" | "dot" | "junk"
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class ParseDiagnostic:
    """A parse or lint finding; errors always carry a source span."""

    severity: str
    message: str
    span: Optional[Tuple[int, int]] = None

    def is_error(self) -> bool:
        return self.severity == "error"


def line_col(text: str, offset: int) -> tuple[int, int]:
    """1-based (line, column) of a character offset into ``text``."""
    line = text.count("\n", 0, offset) + 1
    last_nl = text.rfind("\n", 0, offset)
    return line, offset - last_nl


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def _tokenize(text: str, start: int, end: int) -> list[Token]:
    tokens: list[Token] = []
    i = start
    while i < end:
        ch = text[i]
        if ch in " \t\r":
            i += 1
            continue
        if ch == "(":
            tokens.append(Token("lparen", "(", i, i + 1))
            i += 1
        elif ch == ")":
            tokens.append(Token("rparen", ")", i, i + 1))
            i += 1
        elif ch == ".":
            tokens.append(Token("dot", ".", i, i + 1))
            i += 1
        elif _is_word_char(ch) or (ch in "+-" and i + 1 < end and text[i + 1].isdigit()):
            j = i + 1
            while j < end and _is_word_char(text[j]):
                j += 1
            tokens.append(Token("word", text[i:j], i, j))
            i = j
        else:
            tokens.append(Token("junk", ch, i, i + 1))
            i += 1
    return tokens


class _Segment:
    """One rule candidate: a token stream with single-token lookahead."""

    def __init__(self, text: str, tokens: list[Token], start: int, end: int):
        self.text = text
        self.tokens = tokens
        self.pos = 0
        self.start = start
        self.end = end

    def peek(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> Optional[Token]:
        tok = self.peek()
        if tok is not None:
            self.pos += 1
        return tok

    def keyword(self, word: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.kind == "word" and tok.text.lower() == word:
            self.pos += 1
            return True
        return False

    def span_from(self, start_tok: Optional[Token]) -> tuple[int, int]:
        if start_tok is None:
            return (self.start, self.end)
        last = self.tokens[self.pos - 1] if self.pos > 0 else start_tok
        return (start_tok.start, max(last.end, start_tok.end))


def parse_ruleset(text: str) -> tuple[list[Rule], list[ParseDiagnostic]]:
    """Parse a rule file; returns (rules, diagnostics) and never raises.

    A rule with any syntax error is dropped whole and parsing resumes at
    the next newline or ``.`` boundary.
    """
    rules: list[Rule] = []
    diagnostics: list[ParseDiagnostic] = []
    for seg_start, seg_end in _segments(text):
        tokens = _tokenize(text, seg_start, seg_end)
        if not tokens:
            continue
        seg = _Segment(text, tokens, seg_start, seg_end)
        rule, diags = _parse_rule(seg)
        diagnostics.extend(diags)
        if rule is not None:
            rules.append(rule)
    return rules, diagnostics


def _segments(text: str):
    """Rule boundaries: newlines and dots, with comments stripped."""
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "-" and i + 1 < n and text[i + 1] == "-":
            yield (start, i)
            nl = text.find("\n", i)
            if nl < 0:
                return
            start = nl + 1
            i = start
        elif ch == "\n" or ch == ".":
            yield (start, i)
            start = i + 1
            i = start
        else:
            i += 1
    if start < n:
        yield (start, n)


def _parse_rule(seg: _Segment) -> tuple[Optional[Rule], list[ParseDiagnostic]]:
    first = seg.peek()
    if first is None:
        return None, []
    if not seg.keyword("if"):
        return None, [
            ParseDiagnostic(
                "error",
                f"expected 'If' to start a rule, got '{first.text}'",
                (first.start, first.end),
            )
        ]

    antecedents: list[Condition] = []
    cond, diag = _parse_group(seg, allow_not=True)
    if cond is None:
        return None, [diag] if diag else []
    antecedents.append(Condition(*cond))
    while seg.keyword("and"):
        cond, diag = _parse_group(seg, allow_not=True)
        if cond is None:
            return None, [diag] if diag else []
        antecedents.append(Condition(*cond))

    then_tok = seg.peek()
    if not seg.keyword("then"):
        got = then_tok.text if then_tok is not None else "end of rule"
        span = (then_tok.start, then_tok.end) if then_tok is not None else (seg.start, seg.end)
        return None, [ParseDiagnostic("error", f"expected 'then', got '{got}'", span)]

    consequents: list[Consequent] = []
    while seg.peek() is not None:
        group, diag = _parse_group(seg, allow_not=False)
        if group is None:
            return None, [diag] if diag else []
        var, term, _ = group
        consequents.append(Consequent(var, term))
    if not consequents:
        return None, [
            ParseDiagnostic(
                "error", "rule has no consequent after 'then'", (seg.start, seg.end)
            )
        ]

    return (
        Rule(tuple(antecedents), tuple(consequents), span=(seg.start, seg.end)),
        [],
    )


def _parse_group(
    seg: _Segment, allow_not: bool
) -> tuple[Optional[tuple[str, str, bool]], Optional[ParseDiagnostic]]:
    """Parse ``( IDENT is [not] TERM )``; returns (var, term, negated)."""
    open_tok = seg.peek()
    if open_tok is None or open_tok.kind != "lparen":
        got = open_tok.text if open_tok is not None else "end of rule"
        span = (
            (open_tok.start, open_tok.end)
            if open_tok is not None
            else (seg.start, seg.end)
        )
        return None, ParseDiagnostic("error", f"expected '(', got '{got}'", span)
    seg.take()

    def fail(msg: str) -> tuple[None, ParseDiagnostic]:
        return None, ParseDiagnostic("error", msg, seg.span_from(open_tok))

    name_tok = seg.take()
    if name_tok is None or name_tok.kind != "word":
        return fail("expected a variable name after '('")
    if name_tok.text.lower() in KEYWORDS:
        return fail(f"'{name_tok.text}' cannot be used as a variable name")

    if not seg.keyword("is"):
        return fail(f"expected 'is' after '{name_tok.text}'")

    negated = False
    if allow_not and seg.keyword("not"):
        negated = True

    term_tok = seg.peek()
    if term_tok is None or term_tok.kind != "word" or term_tok.text.lower() in KEYWORDS:
        # Close the span over the malformed group, including a ')' if present.
        if term_tok is not None and term_tok.kind == "rparen":
            seg.take()
        return fail("expected a term name after 'is'")
    seg.take()

    close_tok = seg.peek()
    if close_tok is None or close_tok.kind != "rparen":
        return fail(f"missing ')' after '{term_tok.text}'")
    seg.take()
    return (name_tok.text, term_tok.text, negated), None


def format_rule(rule: Rule) -> str:
    """Canonical single-line form, matching the style rules are written in."""
    conds = " and ".join(
        f"({c.variable} is {'not ' if c.negated else ''}{c.term})"
        for c in rule.antecedents
    )
    cons = "".join(f"({c.variable} is {c.term})" for c in rule.consequents)
    return f"If {conds} then {cons}"


def format_ruleset(rules: list[Rule]) -> str:
    """One canonical rule per line; a non-empty result ends with a newline."""
    if not rules:
        return ""
    return "\n".join(format_rule(r) for r in rules) + "\n"


def lint(rules: list[Rule], fis: FisDefinition) -> list[ParseDiagnostic]:
    """Cross-check a parsed rule list against a FIS definition."""
    out: list[ParseDiagnostic] = []
    for idx, rule in enumerate(rules):
        for cond in rule.antecedents:
            var = fis.input_named(cond.variable)
            if var is None:
                out.append(
                    ParseDiagnostic(
                        "error",
                        f"rule {idx + 1}: unknown variable '{cond.variable}'",
                        rule.span,
                    )
                )
            elif var.set_for(cond.term) is None:
                out.append(
                    ParseDiagnostic(
                        "error",
                        f"rule {idx + 1}: variable '{cond.variable}' has no term "
                        f"'{cond.term}'",
                        rule.span,
                    )
                )
        for cons in rule.consequents:
            var = fis.output_named(cons.variable)
            if var is None:
                out.append(
                    ParseDiagnostic(
                        "error",
                        f"rule {idx + 1}: unknown output variable '{cons.variable}'",
                        rule.span,
                    )
                )
            elif var.set_for(cons.term) is None:
                out.append(
                    ParseDiagnostic(
                        "error",
                        f"rule {idx + 1}: output '{cons.variable}' has no term "
                        f"'{cons.term}'",
                        rule.span,
                    )
                )

    seen: dict[tuple, int] = {}
    antecedent_map: dict[tuple, list[int]] = {}
    for idx, rule in enumerate(rules):
        key = (rule.antecedents, rule.consequents)
        if key in seen:
            out.append(
                ParseDiagnostic(
                    "warning",
                    f"rule {idx + 1} duplicates rule {seen[key] + 1}",
                    rule.span,
                )
            )
        else:
            seen[key] = idx
        ante_key = tuple(sorted(
            (c.variable, c.term, c.negated) for c in rule.antecedents
        ))
        antecedent_map.setdefault(ante_key, []).append(idx)

    for indices in antecedent_map.values():
        if len(indices) < 2:
            continue
        assigned: dict[str, tuple[str, int]] = {}
        for idx in indices:
            for cons in rules[idx].consequents:
                prior = assigned.get(cons.variable)
                if prior is not None and prior[0] != cons.term:
                    out.append(
                        ParseDiagnostic(
                            "warning",
                            f"rules {prior[1] + 1} and {idx + 1} give "
                            f"'{cons.variable}' contradictory terms for the same "
                            "antecedents",
                            rules[idx].span,
                        )
                    )
                else:
                    assigned[cons.variable] = (cons.term, idx)

    targeted = {c.variable for r in rules for c in r.consequents}
    for var in fis.outputs:
        if var.name not in targeted:
            out.append(
                ParseDiagnostic(
                    "warning", f"output variable '{var.name}' has no rule"
                )
            )
    return out


__all__ = [
    "ParseDiagnostic",
    "Token",
    "parse_ruleset",
    "format_rule",
    "format_ruleset",
    "lint",
    "line_col",
    "has_errors",
    "Diagnostic",
]
