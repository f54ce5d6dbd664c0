"""Literals, numeric constraints, expressions and closed-world belief states."""
from __future__ import annotations

import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Union

COMPARATORS = {
    "<": operator.lt,
    "<=": operator.le,
    "=": operator.eq,
    ">=": operator.ge,
    ">": operator.gt,
}

ENERGY = "energy"
CLOCK = "clock"
DURATION = "?duration"

Binding = Mapping[str, str]


def is_variable(term: str) -> bool:
    return term.startswith("?")


def as_number(value) -> Union[Fraction, float]:
    """Coerce ints, strings and floats to an exact Fraction (infinity stays a float)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float) and value in (float("inf"), float("-inf")):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    return Fraction(str(value))


def format_number(value) -> str:
    if isinstance(value, float):
        return "inf" if value > 0 else "-inf"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    # terminating decimals print exactly; others fall back to a division form
    den = value.denominator
    while den % 2 == 0:
        den //= 2
    while den % 5 == 0:
        den //= 5
    if den == 1:
        text = f"{float(value):.12f}".rstrip("0")
        if Fraction(text) == value:
            return text
    return f"(/ {value.numerator} {value.denominator})"


def json_number(value):
    """Render a numeric value for JSON output: ints stay ints, other rationals become floats."""
    if isinstance(value, float):
        return value
    value = Fraction(value)
    return value.numerator if value.denominator == 1 else float(value)


@dataclass(frozen=True, order=True)
class Literal:
    predicate: str
    args: tuple = ()
    positive: bool = True

    def __post_init__(self):
        if not self.predicate:
            raise ValueError("literal predicate must be nonempty")
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def is_ground(self) -> bool:
        return not any(is_variable(a) for a in self.args)

    @property
    def atom(self) -> "Literal":
        return self if self.positive else Literal(self.predicate, self.args)

    def negate(self) -> "Literal":
        return Literal(self.predicate, self.args, not self.positive)

    def substitute(self, binding: Binding) -> "Literal":
        return Literal(self.predicate, tuple(binding.get(a, a) for a in self.args), self.positive)

    def variables(self) -> set:
        return {a for a in self.args if is_variable(a)}

    def __str__(self):
        inner = "(" + " ".join((self.predicate,) + self.args) + ")"
        return inner if self.positive else f"(not {inner})"


@dataclass(frozen=True, order=True)
class NumericConstraint:
    fluent: str
    comparator: str
    bound: Fraction

    def __post_init__(self):
        if self.comparator not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.comparator!r}")
        object.__setattr__(self, "bound", as_number(self.bound))

    def holds(self, fluents: Mapping[str, Fraction]) -> bool:
        if self.fluent not in fluents:
            return False
        return COMPARATORS[self.comparator](fluents[self.fluent], self.bound)

    def __str__(self):
        return f"({self.comparator} ({self.fluent}) {format_number(self.bound)})"


# Expressions over constants, ?duration and fluents:
#   Fraction | "?duration" | ("fluent", name) | (op, lhs, rhs) with op in + - * /
Expr = Union[Fraction, str, tuple]

_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul, "/": operator.truediv}


def evaluate(expr: Expr, duration=None, fluents: Optional[Mapping[str, Fraction]] = None):
    if isinstance(expr, (Fraction, int)):
        return Fraction(expr)
    if expr == DURATION:
        if duration is None:
            raise ValueError("?duration is unbound")
        return as_number(duration)
    if isinstance(expr, tuple) and expr[0] == "fluent":
        return (fluents or {})[expr[1]]
    op, lhs, rhs = expr
    return _ARITH[op](evaluate(lhs, duration, fluents), evaluate(rhs, duration, fluents))


def expr_to_str(expr: Expr) -> str:
    if isinstance(expr, (Fraction, int)):
        return format_number(expr)
    if expr == DURATION:
        return DURATION
    if expr[0] == "fluent":
        return f"({expr[1]})"
    op, lhs, rhs = expr
    return f"({op} {expr_to_str(lhs)} {expr_to_str(rhs)})"


def expr_fluents(expr: Expr) -> set:
    if isinstance(expr, tuple):
        if expr[0] == "fluent":
            return {expr[1]}
        return expr_fluents(expr[1]) | expr_fluents(expr[2])
    return set()


def _expr_key(expr):
    return expr_to_str(expr)


@dataclass(frozen=True)
class NumericEffect:
    fluent: str
    op: str  # "increase" | "decrease"
    expr: Expr

    def __post_init__(self):
        if self.op not in ("increase", "decrease"):
            raise ValueError(f"unsupported numeric effect {self.op!r}")
        if isinstance(self.expr, (int, Fraction)):
            object.__setattr__(self, "expr", Fraction(self.expr))

    def delta(self, duration=None, fluents=None) -> Fraction:
        amount = evaluate(self.expr, duration, fluents)
        return amount if self.op == "increase" else -amount

    def sort_key(self):
        return (self.fluent, self.op, _expr_key(self.expr))

    def __str__(self):
        return f"({self.op} ({self.fluent}) {expr_to_str(self.expr)})"


@dataclass(frozen=True)
class State:
    """Ground belief snapshot: positive literals (closed world) plus numeric fluents."""

    literals: frozenset = frozenset()
    fluent_items: tuple = ()

    @classmethod
    def of(cls, literals: Iterable[Literal] = (), fluents: Optional[Mapping[str, object]] = None) -> "State":
        lits = frozenset(literals)
        for lit in lits:
            if not lit.positive or not lit.is_ground:
                raise ValueError(f"state literals must be positive and ground, got {lit}")
        items = tuple(sorted((k, as_number(v)) for k, v in (fluents or {}).items()))
        return cls(lits, items)

    @property
    def fluents(self) -> dict:
        return dict(self.fluent_items)

    def fluent(self, name: str, default=None):
        for key, value in self.fluent_items:
            if key == name:
                return value
        return default

    def holds(self, lit: Literal) -> bool:
        return (lit in self.literals) if lit.positive else (lit.atom not in self.literals)

    def satisfies(self, literals: Iterable[Literal] = (), constraints: Iterable[NumericConstraint] = ()) -> bool:
        fl = self.fluents
        return all(self.holds(l) for l in literals) and all(c.holds(fl) for c in constraints)

    def apply(self, adds=(), deletes=(), deltas: Optional[Mapping[str, Fraction]] = None) -> "State":
        lits = (self.literals - frozenset(deletes)) | frozenset(adds)
        fl = self.fluents
        for name, delta in (deltas or {}).items():
            fl[name] = fl.get(name, Fraction(0)) + delta
        return State(lits, tuple(sorted(fl.items())))

    def with_fluents(self, **updates) -> "State":
        fl = self.fluents
        fl.update({k: as_number(v) for k, v in updates.items()})
        return State(self.literals, tuple(sorted(fl.items())))

    def sorted_literals(self) -> list:
        return sorted(self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(sorted(self.literals))


@dataclass(frozen=True)
class Condition:
    """A conjunction of literals (either polarity) and numeric constraints."""

    literals: frozenset = frozenset()
    constraints: frozenset = frozenset()

    def holds(self, state: State) -> bool:
        return state.satisfies(self.literals, self.constraints)

    def substitute(self, binding: Binding) -> "Condition":
        return Condition(frozenset(l.substitute(binding) for l in self.literals), self.constraints)

    def __bool__(self):
        return bool(self.literals or self.constraints)


def match(pattern: Literal, fact: Literal, binding: Optional[dict] = None) -> Optional[dict]:
    """Extend `binding` so that `pattern` equals the ground `fact`, or return None."""
    if pattern.predicate != fact.predicate or len(pattern.args) != len(fact.args):
        return None
    if pattern.positive != fact.positive:
        return None
    out = dict(binding or {})
    for p, f in zip(pattern.args, fact.args):
        if is_variable(p):
            bound = out.get(p)
            if bound is None:
                out[p] = f
            elif bound != f:
                return None
        elif p != f:
            return None
    return out


def satisfying_bindings(literals: Iterable[Literal], constraints: Iterable[NumericConstraint],
                        state: State, binding: Optional[dict] = None) -> Iterator[dict]:
    """Enumerate every extension of `binding` under which the conjunction holds in `state`.

    Positive literals generate bindings by joining against the state; negative
    literals and numeric constraints are checked once their variables are bound.
    """
    positives = [l for l in literals if l.positive]
    negatives = [l for l in literals if not l.positive]
    constraints = list(constraints)
    facts_by_pred: dict = {}
    for fact in state.literals:
        facts_by_pred.setdefault(fact.predicate, []).append(fact)

    def join(i, current):
        if i == len(positives):
            for neg in negatives:
                ground = neg.substitute(current)
                if not ground.is_ground:
                    return
                if not state.holds(ground):
                    return
            if all(c.holds(state.fluents) for c in constraints):
                yield dict(current)
            return
        pattern = positives[i].substitute(current)
        for fact in sorted(facts_by_pred.get(pattern.predicate, ())):
            ext = match(pattern, fact, current)
            if ext is not None:
                yield from join(i + 1, ext)

    yield from join(0, dict(binding or {}))
