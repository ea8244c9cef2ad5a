"""Data-driven Mamdani fuzzy inference engine.

Everything the engine does is configured by a :class:`FisDefinition`:
linguistic variables with trapezoidal membership functions, and a rule
base of AND-joined conditions.  Inference is the classic pipeline

    fuzzify -> rule strengths (min/1-mu) -> clip + max aggregation
            -> centroid defuzzification

with no learning, no OR, and no hedges.  A definition is immutable once
validated; :func:`infer` is a pure function and safe to call from
parallel scenario runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

INPUT = "input"
OUTPUT = "output"

_SUPPORT_TOL = 1e-9


class MissingInputError(ValueError):
    """A declared input variable has no value in the crisp input map."""


@dataclass(frozen=True)
class Diagnostic:
    """A validation finding: ``severity`` is ``"error"`` or ``"warning"``."""

    severity: str
    message: str
    span: Optional[Tuple[int, int]] = None

    def is_error(self) -> bool:
        return self.severity == "error"


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.is_error() for d in diagnostics)


@dataclass(frozen=True)
class MembershipFunction:
    """Trapezoid with breakpoints a <= b <= c <= d.

    Triangles set b == c; left/right shoulders set a == b or c == d.
    Membership is 0 outside [a, d], 1 on [b, c], piecewise-linear between.
    """

    a: float
    b: float
    c: float
    d: float

    def is_ordered(self) -> bool:
        return self.a <= self.b <= self.c <= self.d

    def __call__(self, x: float) -> float:
        return membership(self, x)

    def sample(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized membership over ``xs`` (matches the scalar rules)."""
        a, b, c, d = self.a, self.b, self.c, self.d
        ys = np.zeros_like(xs, dtype=float)
        if b > a:
            rising = (xs >= a) & (xs < b)
            ys[rising] = (xs[rising] - a) / (b - a)
        ys[(xs >= b) & (xs <= c)] = 1.0
        if d > c:
            falling = (xs > c) & (xs < d)
            ys[falling] = (d - xs[falling]) / (d - c)
        return ys


def membership(mf: MembershipFunction, x: float) -> float:
    """Degree of ``x`` in ``mf``; exact 1.0 on the plateau, 0.0 outside."""
    if x < mf.a or x > mf.d:
        return 0.0
    if x < mf.b:
        return (x - mf.a) / (mf.b - mf.a)
    if x <= mf.c:
        return 1.0
    if x < mf.d:
        return (mf.d - x) / (mf.d - mf.c)
    return 0.0


@dataclass(frozen=True)
class FuzzySet:
    term: str
    mf: MembershipFunction


@dataclass
class LinguisticVariable:
    """A named variable over a real universe with its term sets."""

    name: str
    kind: str  # INPUT or OUTPUT
    lo: float
    hi: float
    sets: Tuple[FuzzySet, ...]
    unit: str = ""
    _samples: dict = field(default_factory=dict, repr=False, compare=False)

    def clamp(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)

    def terms(self) -> Tuple[str, ...]:
        return tuple(s.term for s in self.sets)

    def set_for(self, term: str) -> Optional[FuzzySet]:
        for s in self.sets:
            if s.term == term:
                return s
        return None

    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def _sampled(self, resolution: int):
        """Cached (grid, per-term samples) at the given resolution."""
        cached = self._samples.get(resolution)
        if cached is None:
            xs = np.linspace(self.lo, self.hi, resolution)
            cached = (xs, {s.term: s.mf.sample(xs) for s in self.sets})
            self._samples[resolution] = cached
        return cached


@dataclass(frozen=True)
class Condition:
    """One AND-joined antecedent: ``(variable is [not] term)``."""

    variable: str
    term: str
    negated: bool = False


@dataclass(frozen=True)
class Consequent:
    variable: str
    term: str


@dataclass(frozen=True)
class Rule:
    antecedents: Tuple[Condition, ...]
    consequents: Tuple[Consequent, ...]
    span: Optional[Tuple[int, int]] = None

    def text(self) -> str:
        conds = " and ".join(
            f"({c.variable} is {'not ' if c.negated else ''}{c.term})"
            for c in self.antecedents
        )
        cons = "".join(f"({c.variable} is {c.term})" for c in self.consequents)
        return f"If {conds} then {cons}"


@dataclass
class FisDefinition:
    """Inputs, outputs, rules, and the defuzzification sample count."""

    inputs: Tuple[LinguisticVariable, ...]
    outputs: Tuple[LinguisticVariable, ...]
    rules: Tuple[Rule, ...]
    resolution: int = 1001

    def input_named(self, name: str) -> Optional[LinguisticVariable]:
        for v in self.inputs:
            if v.name == name:
                return v
        return None

    def output_named(self, name: str) -> Optional[LinguisticVariable]:
        for v in self.outputs:
            if v.name == name:
                return v
        return None


def fuzzify(var: LinguisticVariable, x: float) -> list[tuple[str, float]]:
    """Membership of ``x`` (clamped to the universe) in every set of ``var``."""
    xc = var.clamp(x)
    return [(s.term, membership(s.mf, xc)) for s in var.sets]


def rule_strength(rule: Rule, degrees: Mapping[str, Mapping[str, float]]) -> float:
    """min over antecedent degrees; a negated condition contributes 1 - mu."""
    strength = 1.0
    for cond in rule.antecedents:
        try:
            mu = degrees[cond.variable][cond.term]
        except KeyError as exc:
            raise KeyError(
                f"rule references unknown input '{cond.variable} is {cond.term}'"
            ) from exc
        if cond.negated:
            mu = 1.0 - mu
        if mu < strength:
            strength = mu
    return strength


@dataclass
class AggregatedOutput:
    """Clipped-and-maxed output membership for one output variable.

    ``pieces`` holds (membership function, clip level) for every consequent
    whose rule fired with strength > 0; the aggregate value at x is
    max over pieces of min(clip, mu(x)).
    """

    variable: LinguisticVariable
    pieces: Tuple[Tuple[MembershipFunction, float], ...]

    def mu(self, x: float) -> float:
        best = 0.0
        for mf, clip in self.pieces:
            v = min(clip, membership(mf, x))
            if v > best:
                best = v
        return best

    def sample(self, xs: np.ndarray) -> np.ndarray:
        ys = np.zeros_like(xs, dtype=float)
        for mf, clip in self.pieces:
            np.maximum(ys, np.minimum(mf.sample(xs), clip), out=ys)
        return ys


def aggregate(
    fis: FisDefinition, strengths: Sequence[float]
) -> dict[str, AggregatedOutput]:
    """Clip every fired rule's consequent sets and max-combine per output."""
    if len(strengths) != len(fis.rules):
        raise ValueError(
            f"got {len(strengths)} strengths for {len(fis.rules)} rules"
        )
    pieces: dict[str, list] = {v.name: [] for v in fis.outputs}
    for rule, strength in zip(fis.rules, strengths):
        if strength <= 0.0:
            continue
        for cons in rule.consequents:
            var = fis.output_named(cons.variable)
            if var is None:
                raise KeyError(f"rule targets unknown output '{cons.variable}'")
            fset = var.set_for(cons.term)
            if fset is None:
                raise KeyError(
                    f"output '{cons.variable}' has no term '{cons.term}'"
                )
            pieces[cons.variable].append((fset.mf, strength))
    return {
        v.name: AggregatedOutput(v, tuple(pieces[v.name])) for v in fis.outputs
    }


def defuzzify_centroid(
    agg: AggregatedOutput, resolution: int = 1001
) -> tuple[float, bool]:
    """Sampled centroid of the aggregate.

    Returns (crisp value, no_rule_fired).  When the aggregate is identically
    zero the universe midpoint is returned with the flag set: the fail-safe
    "hold" reading.
    """
    if resolution < 101:
        raise ValueError("defuzzification resolution must be >= 101")
    var = agg.variable
    xs, term_samples = var._sampled(resolution)
    ys = np.zeros_like(xs)
    for mf, clip in agg.pieces:
        cached = None
        for fset in var.sets:
            if fset.mf is mf:
                cached = term_samples[fset.term]
                break
        sampled = cached if cached is not None else mf.sample(xs)
        np.maximum(ys, np.minimum(sampled, clip), out=ys)
    total = float(np.sum(ys))
    if total <= 0.0:
        return var.midpoint(), True
    return float(np.dot(xs, ys) / total), False


@dataclass(frozen=True)
class FiredRule:
    index: int
    strength: float
    text: str


@dataclass(frozen=True)
class InferenceResult:
    """Crisp outputs plus the per-rule firing report."""

    values: dict[str, float]
    no_rule_fired: dict[str, bool]
    fired: Tuple[FiredRule, ...]


def infer(fis: FisDefinition, inputs: Mapping[str, float]) -> InferenceResult:
    """Run the full pipeline on one crisp input map.

    Every declared input variable must be present in ``inputs``; extra keys
    are ignored so one caller can serve definitions with different input
    subsets.  Values are clamped to each variable's universe.
    """
    degrees: dict[str, dict[str, float]] = {}
    for var in fis.inputs:
        if var.name not in inputs:
            raise MissingInputError(f"no value for input variable '{var.name}'")
        degrees[var.name] = dict(fuzzify(var, float(inputs[var.name])))
    strengths = [rule_strength(rule, degrees) for rule in fis.rules]
    aggs = aggregate(fis, strengths)
    values: dict[str, float] = {}
    empty: dict[str, bool] = {}
    for var in fis.outputs:
        crisp, no_fire = defuzzify_centroid(aggs[var.name], fis.resolution)
        values[var.name] = crisp
        empty[var.name] = no_fire
    fired = tuple(
        FiredRule(i, s, rule.text())
        for i, (rule, s) in enumerate(zip(fis.rules, strengths))
    )
    return InferenceResult(values, empty, fired)


def validate_fis(fis: FisDefinition, coverage_resolution: int = 1001) -> list[Diagnostic]:
    """Structural diagnostics for a definition; never raises.

    Errors: bad universe, breakpoint ordering, support outside the universe,
    duplicate terms, unresolved rule names.  Warnings: input coverage gaps,
    outputs never used by a consequent, rules unreachable because an
    antecedent set has no support inside the universe.
    """
    out: list[Diagnostic] = []

    seen: dict[tuple[str, str], bool] = {}
    for var in fis.inputs + fis.outputs:
        key = (var.kind, var.name)
        if key in seen:
            out.append(Diagnostic("error", f"duplicate {var.kind} variable '{var.name}'"))
        seen[key] = True
        if not var.lo < var.hi:
            out.append(
                Diagnostic("error", f"variable '{var.name}' universe is empty")
            )
            continue
        terms = set()
        for fset in var.sets:
            where = f"'{var.name}.{fset.term}'"
            if fset.term in terms:
                out.append(Diagnostic("error", f"duplicate term {where}"))
            terms.add(fset.term)
            mf = fset.mf
            if not mf.is_ordered():
                out.append(
                    Diagnostic(
                        "error",
                        f"{where} breakpoints not ordered: "
                        f"({mf.a}, {mf.b}, {mf.c}, {mf.d})",
                    )
                )
                continue
            if mf.a < var.lo - _SUPPORT_TOL or mf.d > var.hi + _SUPPORT_TOL:
                out.append(
                    Diagnostic(
                        "error",
                        f"{where} support [{mf.a}, {mf.d}] outside universe "
                        f"[{var.lo}, {var.hi}]",
                    )
                )

    for var in fis.inputs:
        if not var.lo < var.hi:
            continue
        if any(not s.mf.is_ordered() for s in var.sets):
            continue
        out.extend(_coverage_gaps(var, coverage_resolution))

    used_outputs = set()
    for idx, rule in enumerate(fis.rules):
        if not rule.antecedents or not rule.consequents:
            out.append(
                Diagnostic("error", f"rule {idx} needs antecedents and consequents", rule.span)
            )
        for cond in rule.antecedents:
            var = fis.input_named(cond.variable)
            if var is None:
                out.append(
                    Diagnostic(
                        "error",
                        f"rule {idx}: unknown input variable '{cond.variable}'",
                        rule.span,
                    )
                )
                continue
            fset = var.set_for(cond.term)
            if fset is None:
                out.append(
                    Diagnostic(
                        "error",
                        f"rule {idx}: unknown term '{cond.term}' on '{cond.variable}'",
                        rule.span,
                    )
                )
            elif not cond.negated and _unreachable(var, fset):
                out.append(
                    Diagnostic(
                        "warning",
                        f"rule {idx}: '{cond.variable} is {cond.term}' can never "
                        "fire (no support inside the universe)",
                        rule.span,
                    )
                )
        for cons in rule.consequents:
            var = fis.output_named(cons.variable)
            if var is None:
                out.append(
                    Diagnostic(
                        "error",
                        f"rule {idx}: unknown output variable '{cons.variable}'",
                        rule.span,
                    )
                )
                continue
            used_outputs.add(cons.variable)
            if var.set_for(cons.term) is None:
                out.append(
                    Diagnostic(
                        "error",
                        f"rule {idx}: unknown term '{cons.term}' on output "
                        f"'{cons.variable}'",
                        rule.span,
                    )
                )

    for var in fis.outputs:
        if var.name not in used_outputs:
            out.append(
                Diagnostic("warning", f"output '{var.name}' is used by no rule")
            )

    return out


def _coverage_gaps(var: LinguisticVariable, resolution: int) -> list[Diagnostic]:
    """Warn for each open interval of the universe no set covers.

    A gap is reported when two consecutive sweep samples both have zero
    membership in every set, i.e. a whole inter-sample interval is
    uncovered.  Sets whose supports merely touch at a point do not trip it.
    """
    xs = np.linspace(var.lo, var.hi, resolution)
    cover = np.zeros_like(xs)
    for fset in var.sets:
        np.maximum(cover, fset.mf.sample(xs), out=cover)
    uncovered = cover <= 0.0
    gaps: list[Diagnostic] = []
    run_start = None
    for i in range(len(xs)):
        if uncovered[i]:
            if run_start is None:
                run_start = i
        else:
            if run_start is not None and i - run_start >= 2:
                gaps.append(_gap_diag(var, xs[run_start], xs[i - 1]))
            run_start = None
    if run_start is not None and len(xs) - run_start >= 2:
        gaps.append(_gap_diag(var, xs[run_start], xs[-1]))
    return gaps


def _gap_diag(var: LinguisticVariable, lo: float, hi: float) -> Diagnostic:
    return Diagnostic(
        "warning",
        f"input '{var.name}' has no covering set on [{lo:.4g}, {hi:.4g}]",
    )


def _unreachable(var: LinguisticVariable, fset: FuzzySet) -> bool:
    """True when the set's positive region misses the universe entirely.

    Membership is positive on the open interval (a, d) plus the closed
    plateau [b, c]; a spike (a == d) is positive only at that point.
    """
    mf = fset.mf
    if max(mf.b, var.lo) <= min(mf.c, var.hi):
        return False
    return not (max(mf.a, var.lo) < min(mf.d, var.hi))
