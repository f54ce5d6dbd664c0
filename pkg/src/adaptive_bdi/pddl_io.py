"""Reader and printer for the durative-action PDDL subset used by the self-model.

Supported requirements are ``:strips :typing :fluents :durative-actions``
(plus ``:negative-preconditions``/``:equality`` for guards).  Durations are
fixed, ``(= ?duration c)``, optionally widened by the extension clause
``(:duration-bound lo hi)``; an ``(:energy-bound lo hi)`` clause records the
energy threshold.  All effects happen ``at end``.

Health bookkeeping does not belong in PDDL and is stored in a JSON sidecar
next to the domain file (``<stem>.health.json``).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import AdaptiveBDIError, InvalidDescription
from .lifecycle import ExecStatus, HealthStatus
from .logic import (
    COMPARATORS,
    DURATION,
    Literal,
    NumericConstraint,
    NumericEffect,
    State,
    format_number,
    is_variable,
)
from .self_model import ActionDescription, SelfModel, nominal_energy


@dataclass(frozen=True, order=True)
class SourceSpan:
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


class ParseError(AdaptiveBDIError):
    def __init__(self, message: str, span: SourceSpan, expected: Iterable[str] = ()):
        self.message = message
        self.span = span
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{span}: {message}{detail}")


class UndeclaredObject(AdaptiveBDIError):
    def __init__(self, symbol: str, span: SourceSpan):
        self.symbol = symbol
        self.span = span
        super().__init__(f"{span}: undeclared object {symbol!r}")


# ---------------------------------------------------------------------------
# s-expressions


@dataclass
class Atom:
    text: str
    span: SourceSpan

    @property
    def lower(self) -> str:
        return self.text.lower()


@dataclass
class SList:
    items: list
    span: SourceSpan
    end: SourceSpan

    def head(self) -> Optional[str]:
        if self.items and isinstance(self.items[0], Atom):
            return self.items[0].lower
        return None


Node = Union[Atom, SList]


def _eof_span(text: str) -> SourceSpan:
    if not text:
        return SourceSpan(1, 1)
    lines = text.split("\n")
    if lines[-1] == "" and len(lines) > 1:
        return SourceSpan(len(lines) - 1, max(1, len(lines[-2])))
    return SourceSpan(len(lines), max(1, len(lines[-1])))


def read_sexprs(text: str) -> list:
    """Tokenise `text` into a list of top-level nodes, tracking 1-based positions."""
    stack: list = []
    top: list = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
                col += 1
            continue
        span = SourceSpan(line, col)
        if ch == "(":
            stack.append(SList([], span, span))
            i += 1
            col += 1
            continue
        if ch == ")":
            if not stack:
                raise ParseError("unbalanced ')'", span, {"(", "end of input"})
            node = stack.pop()
            node.end = span
            (stack[-1].items if stack else top).append(node)
            i += 1
            col += 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in "();":
            j += 1
        (stack[-1].items if stack else top).append(Atom(text[i:j], span))
        col += j - i
        i = j
    if stack:
        raise ParseError(f"unclosed '(' opened at {stack[-1].span}", _eof_span(text), {")"})
    return top


# ---------------------------------------------------------------------------
# documents


@dataclass(frozen=True)
class DomainDocument:
    name: str
    requirements: tuple = (":strips", ":typing", ":fluents", ":durative-actions")
    types: tuple = ()
    constants: tuple = ()  # ((symbol, type), ...)
    predicates: tuple = ()  # ((name, ((var, type), ...)), ...)
    functions: tuple = ()
    durative_actions: tuple = ()


@dataclass(frozen=True)
class ProblemDocument:
    name: str
    domain_name: str
    objects: tuple = ()
    init: frozenset = frozenset()
    init_fluents: tuple = ()  # ((fluent, value), ...) in file order
    goal: frozenset = frozenset()

    def state(self) -> State:
        return State.of(self.init, dict(self.init_fluents))

    def object_types(self) -> dict:
        return dict(self.objects)


# ---------------------------------------------------------------------------
# helpers


def _expect_list(node: Node, what: str, expected=("(",)) -> SList:
    if not isinstance(node, SList):
        raise ParseError(f"expected {what}, found {node.text!r}", node.span, expected)
    return node


def _expect_atom(node: Node, what: str) -> Atom:
    if not isinstance(node, Atom):
        raise ParseError(f"expected {what}, found a list", node.span, {what})
    return node


def _keyword(node: Node, options: Iterable[str]) -> str:
    atom = _expect_atom(node, "keyword")
    if atom.lower not in options:
        raise ParseError(f"unexpected {atom.text!r}", atom.span, options)
    return atom.lower


def _number(node: Node) -> Fraction:
    if isinstance(node, SList) and node.head() == "/" and len(node.items) == 3:
        den = _number(node.items[2])
        if den == 0:
            raise ParseError("division by zero", node.items[2].span, {"<nonzero number>"})
        return _number(node.items[1]) / den
    atom = _expect_atom(node, "<number>")
    try:
        return Fraction(atom.text)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"expected a number, found {atom.text!r}", atom.span, {"<number>"}) from None


def _symbol(node: Node, what: str = "<name>") -> str:
    atom = _expect_atom(node, what)
    if atom.text.startswith(":") or atom.text == "-":
        raise ParseError(f"expected {what}, found {atom.text!r}", atom.span, {what})
    return atom.text


def _typed_list(items: list, variables: bool) -> tuple:
    """Parse ``a b - t c`` into ((a, t), (b, t), (c, object))."""
    out: list = []
    pending: list = []
    i = 0
    while i < len(items):
        node = items[i]
        atom = _expect_atom(node, "<variable>" if variables else "<name>")
        if atom.text == "-":
            if i + 1 >= len(items) or not pending:
                raise ParseError("dangling type marker '-'", atom.span, {"<type>"})
            typ = _symbol(items[i + 1], "<type>")
            out.extend((p, typ) for p in pending)
            pending = []
            i += 2
            continue
        if variables and not is_variable(atom.text):
            raise ParseError(f"expected a variable, found {atom.text!r}", atom.span, {"?<variable>"})
        if not variables and is_variable(atom.text):
            raise ParseError(f"variables are not allowed here: {atom.text!r}", atom.span, {"<name>"})
        pending.append(atom.text)
        i += 1
    out.extend((p, "object") for p in pending)
    return tuple(out)


def _literal(node: Node, allow_vars: bool = True) -> Literal:
    lst = _expect_list(node, "literal")
    if not lst.items:
        raise ParseError("empty literal", lst.span, {"<predicate>"})
    pred = _symbol(lst.items[0], "<predicate>")
    args = []
    for item in lst.items[1:]:
        a = _symbol(item, "<term>")
        if not allow_vars and is_variable(a):
            raise ParseError(f"expected a ground term, found variable {a}", item.span, {"<object>"})
        args.append(a)
    return Literal(pred, tuple(args))


def _fluent_ref(node: Node) -> str:
    lst = _expect_list(node, "fluent reference")
    if len(lst.items) != 1:
        raise ParseError("only zero-arity fluents are supported", lst.span, {")"})
    return _symbol(lst.items[0], "<fluent>")


def _expr(node: Node):
    if isinstance(node, Atom):
        if node.text.lower() == DURATION:
            return DURATION
        return _number(node)
    if len(node.items) == 1:
        return ("fluent", _fluent_ref(node))
    head = node.head()
    if head in ("+", "-", "*", "/") and len(node.items) == 3:
        return (head, _expr(node.items[1]), _expr(node.items[2]))
    raise ParseError("malformed numeric expression", node.span, {"+", "-", "*", "/", "<number>", "?duration"})


def _conjuncts(node: Node) -> list:
    lst = _expect_list(node, "condition")
    if lst.head() == "and":
        out = []
        for item in lst.items[1:]:
            out.extend(_conjuncts(item))
        return out
    return [lst]


# ---------------------------------------------------------------------------
# domain


class _ActionBuilder:
    def __init__(self, name: str):
        self.name = name
        self.params: tuple = ()
        self.pre: set = set()
        self.numeric_pre: set = set()
        self.adds: set = set()
        self.deletes: set = set()
        self.numeric_effects: set = set()
        self.distinct: set = set()
        self.duration: Optional[tuple] = None
        self.duration_bound: Optional[tuple] = None
        self.energy_bound: Optional[tuple] = None

    def condition(self, goal: SList) -> None:
        head = goal.head()
        if head == "not":
            if len(goal.items) != 2:
                raise ParseError("'not' takes exactly one argument", goal.span, {")"})
            inner = _expect_list(goal.items[1], "literal")
            if inner.head() == "=":
                if len(inner.items) != 3:
                    raise ParseError("'=' takes two terms", inner.span, {")"})
                self.distinct.add((_symbol(inner.items[1]), _symbol(inner.items[2])))
                return
            self.pre.add(_literal(inner).negate())
            return
        if head in COMPARATORS and len(goal.items) == 3 and isinstance(goal.items[1], SList):
            self.numeric_pre.add(NumericConstraint(_fluent_ref(goal.items[1]), head, _number(goal.items[2])))
            return
        self.pre.add(_literal(goal))

    def effect(self, eff: SList) -> None:
        head = eff.head()
        if head == "not":
            if len(eff.items) != 2:
                raise ParseError("'not' takes exactly one argument", eff.span, {")"})
            self.deletes.add(_literal(eff.items[1]))
            return
        if head in ("increase", "decrease"):
            if len(eff.items) != 3:
                raise ParseError(f"'{head}' takes a fluent and an expression", eff.span, {")"})
            self.numeric_effects.add(NumericEffect(_fluent_ref(eff.items[1]), head, _expr(eff.items[2])))
            return
        if head in ("assign", "scale-up", "scale-down"):
            raise ParseError(f"unsupported numeric effect {head!r}", eff.span, {"increase", "decrease"})
        self.adds.add(_literal(eff))

    def build(self, span: SourceSpan) -> ActionDescription:
        if self.duration_bound is not None:
            d_bound = self.duration_bound
        elif self.duration is not None:
            d_bound = self.duration
        else:
            raise ParseError(f"action {self.name} has no :duration", span, {":duration"})
        try:
            if self.energy_bound is not None:
                e_bound = self.energy_bound
            else:
                probe = ActionDescription(self.name, numeric_effects=frozenset(
                    e for e in self.numeric_effects if e.fluent == "energy"), duration_bound=d_bound)
                used = nominal_energy(probe)
                e_bound = (used, used)
            return ActionDescription(
                name=self.name, params=self.params, pre=frozenset(self.pre),
                numeric_pre=frozenset(self.numeric_pre), adds=frozenset(self.adds),
                deletes=frozenset(self.deletes), numeric_effects=frozenset(self.numeric_effects),
                distinct=frozenset(self.distinct), duration_bound=d_bound, energy_bound=e_bound)
        except InvalidDescription as exc:
            raise ParseError(str(exc), span) from None


_ACTION_KEYS = {":parameters", ":duration", ":condition", ":effect"}
_EXTENSIONS = {":duration-bound", ":energy-bound"}


def _parse_bound(node: SList) -> tuple:
    if len(node.items) != 3:
        raise ParseError(f"{node.head()} takes two numbers", node.span, {"<number>"})
    hi = node.items[2]
    if isinstance(hi, Atom) and hi.lower == "inf":
        return (_number(node.items[1]), math.inf)
    return (_number(node.items[1]), _number(hi))


def _parse_action(node: SList) -> ActionDescription:
    if len(node.items) < 2:
        raise ParseError("durative action needs a name", node.end, {"<name>"})
    builder = _ActionBuilder(_symbol(node.items[1], "<action name>"))
    seen: set = set()
    i = 2
    items = node.items
    while i < len(items):
        item = items[i]
        if isinstance(item, SList) and item.head() in _EXTENSIONS:
            bound = _parse_bound(item)
            if item.head() == ":duration-bound":
                builder.duration_bound = bound
            else:
                builder.energy_bound = bound
            i += 1
            continue
        key = _keyword(item, _ACTION_KEYS | _EXTENSIONS)
        if key in seen:
            raise ParseError(f"duplicate {key} clause", item.span, _ACTION_KEYS - seen)
        seen.add(key)
        if i + 1 >= len(items):
            raise ParseError(f"{key} needs a value", node.end, {"("})
        value = items[i + 1]
        if key == ":parameters":
            builder.params = _typed_list(_expect_list(value, "parameter list").items, variables=True)
        elif key == ":duration":
            dur = _expect_list(value, "duration constraint")
            if dur.head() in _EXTENSIONS:
                builder.duration_bound = _parse_bound(dur)
            elif (dur.head() == "=" and len(dur.items) == 3 and isinstance(dur.items[1], Atom)
                  and dur.items[1].lower == DURATION):
                d = _number(dur.items[2])
                builder.duration = (d, d)
            else:
                raise ParseError("only (= ?duration <number>) durations are supported", dur.span,
                                 {"(= ?duration <number>)"})
        elif key == ":condition":
            for goal in _conjuncts(value):
                qualifier = goal.head()
                if qualifier == "at" and len(goal.items) == 3 and isinstance(goal.items[1], Atom) \
                        and goal.items[1].lower == "start":
                    inner = goal.items[2]
                elif qualifier == "over" and len(goal.items) == 3 and isinstance(goal.items[1], Atom) \
                        and goal.items[1].lower == "all":
                    inner = goal.items[2]
                else:
                    raise ParseError("conditions must be (at start ...) or (over all ...)", goal.span,
                                     {"at start", "over all"})
                for lit in _conjuncts(inner):
                    builder.condition(lit)
        elif key == ":effect":
            for eff in _conjuncts(value):
                if not (eff.head() == "at" and len(eff.items) == 3 and isinstance(eff.items[1], Atom)):
                    raise ParseError("effects must be timed (at end ...)", eff.span, {"at end"})
                when = eff.items[1].lower
                if when != "end":
                    raise ParseError(f"unsupported 'at {when}' effect; all effects happen at end",
                                     eff.items[1].span, {"end"})
                for inner in _conjuncts(eff.items[2]):
                    builder.effect(inner)
        i += 2
    if ":effect" not in seen:
        raise ParseError(f"action {builder.name} is missing its :effect clause", node.end, {":effect"})
    return builder.build(node.span)


def _define(text: str, kind: str) -> SList:
    nodes = read_sexprs(text)
    if not nodes:
        raise ParseError("empty input", _eof_span(text), {"(define"})
    if len(nodes) > 1:
        raise ParseError("unexpected content after definition", nodes[1].span, {"end of input"})
    root = _expect_list(nodes[0], "(define ...)")
    if root.head() != "define":
        raise ParseError("expected (define ...)", root.span, {"define"})
    if len(root.items) < 2:
        raise ParseError(f"missing ({kind} <name>) header", root.end, {f"({kind}"})
    header = _expect_list(root.items[1], f"({kind} <name>)")
    if header.head() != kind or len(header.items) != 2:
        raise ParseError(f"expected ({kind} <name>)", header.span, {kind})
    return root


def parse_domain(text: str) -> DomainDocument:
    root = _define(text, "domain")
    name = _symbol(root.items[1].items[1])
    requirements: Optional[tuple] = None
    types: tuple = ()
    constants: tuple = ()
    predicates: list = []
    functions: list = []
    actions: list = []
    for section in root.items[2:]:
        sec = _expect_list(section, "domain section")
        head = sec.head()
        if head == ":requirements":
            requirements = tuple(_expect_atom(r, "<requirement>").lower for r in sec.items[1:])
            if ":durative-actions" not in requirements:
                raise ParseError("domain must require :durative-actions", sec.span, {":durative-actions"})
        elif head == ":types":
            typed = _typed_list(sec.items[1:], variables=False)
            for _, parent in typed:
                if parent != "object":
                    raise ParseError("type hierarchies are not supported (flat types only)", sec.span,
                                     {"- object"})
            types = tuple(t for t, _ in typed)
        elif head == ":constants":
            constants = _typed_list(sec.items[1:], variables=False)
        elif head == ":predicates":
            for p in sec.items[1:]:
                plist = _expect_list(p, "predicate declaration")
                if not plist.items:
                    raise ParseError("empty predicate declaration", plist.span, {"<predicate>"})
                predicates.append((_symbol(plist.items[0], "<predicate>"),
                                   _typed_list(plist.items[1:], variables=True)))
        elif head == ":functions":
            items = sec.items[1:]
            j = 0
            while j < len(items):
                f = items[j]
                if isinstance(f, Atom) and f.text == "-":
                    if j + 1 >= len(items) or _symbol(items[j + 1], "<type>").lower() != "number":
                        raise ParseError("functions must be of type number", f.span, {"number"})
                    j += 2
                    continue
                functions.append(_fluent_ref(f))
                j += 1
        elif head == ":durative-action":
            actions.append(_parse_action(sec))
        elif head == ":action":
            raise ParseError("only durative actions are supported", sec.span, {":durative-action"})
        else:
            raise ParseError(f"unknown domain section {head!r}", sec.span,
                             {":requirements", ":types", ":constants", ":predicates", ":functions",
                              ":durative-action"})
    if requirements is None:
        raise ParseError("domain has no :requirements section", root.span, {":requirements"})
    return DomainDocument(name, requirements, types, constants, tuple(predicates), tuple(functions),
                          tuple(actions))


def parse_problem(text: str, constants: Iterable[str] = ()) -> ProblemDocument:
    root = _define(text, "problem")
    name = _symbol(root.items[1].items[1])
    domain_name = None
    objects: tuple = ()
    init: set = set()
    fluents: list = []
    goal: set = set()
    pending: list = []  # (symbol, span) references checked after :objects is known
    for section in root.items[2:]:
        sec = _expect_list(section, "problem section")
        head = sec.head()
        if head == ":domain":
            if len(sec.items) != 2:
                raise ParseError("(:domain <name>) takes one name", sec.span, {"<name>"})
            domain_name = _symbol(sec.items[1])
        elif head == ":objects":
            objects = _typed_list(sec.items[1:], variables=False)
        elif head == ":init":
            for fact in sec.items[1:]:
                flist = _expect_list(fact, "initial fact")
                if flist.head() == "=":
                    if len(flist.items) != 3:
                        raise ParseError("fluent assignment is (= (<fluent>) <number>)", flist.span, {")"})
                    fluents.append((_fluent_ref(flist.items[1]), _number(flist.items[2])))
                    continue
                if flist.head() == "not":
                    raise ParseError("initial state lists positive facts only", flist.span, {"<predicate>"})
                lit = _literal(flist, allow_vars=False)
                init.add(lit)
                pending.extend(zip(lit.args, (a.span for a in flist.items[1:])))
        elif head == ":goal":
            if len(sec.items) != 2:
                raise ParseError("(:goal ...) takes one condition", sec.span, {"("})
            for g in _conjuncts(sec.items[1]):
                if g.head() in ("not", "or", "imply", "exists", "forall") or g.head() in COMPARATORS:
                    raise ParseError("goals must be positive ground conjunctions", g.span, {"<predicate>"})
                lit = _literal(g, allow_vars=False)
                goal.add(lit)
                pending.extend(zip(lit.args, (a.span for a in g.items[1:])))
        elif head == ":metric":
            raise ParseError("plan metrics are not supported", sec.span, {":goal"})
        else:
            raise ParseError(f"unknown problem section {head!r}", sec.span,
                             {":domain", ":objects", ":init", ":goal"})
    if domain_name is None:
        raise ParseError("problem has no (:domain ...) section", root.span, {":domain"})
    declared = {o for o, _ in objects} | set(constants)
    for symbol, span in pending:
        if symbol not in declared:
            raise UndeclaredObject(symbol, span)
    return ProblemDocument(name, domain_name, objects, frozenset(init), tuple(fluents), frozenset(goal))


# ---------------------------------------------------------------------------
# printing


def _typed(pairs: Iterable[tuple]) -> str:
    """Typed list text; a trailing run of `object` symbols needs no type suffix."""
    runs: list = []
    for sym, typ in pairs:
        if runs and runs[-1][1] == typ:
            runs[-1][0].append(sym)
        else:
            runs.append(([sym], typ))
    parts = []
    for i, (syms, typ) in enumerate(runs):
        parts.extend(syms)
        if typ != "object" or i < len(runs) - 1:
            parts += ["-", typ]
    return " ".join(parts)


def _literal_text(lit: Literal) -> str:
    return str(lit)


def format_action(desc: ActionDescription, indent: str = "  ") -> str:
    ind2 = indent * 2
    ind3 = indent * 3
    lines = [f"{indent}(:durative-action {desc.name}"]
    lines.append(f"{ind2}:parameters ({_typed(desc.params)})")
    d_min, d_max = desc.duration_bound
    lines.append(f"{ind2}:duration (= ?duration {format_number(d_min)})")
    if d_min != d_max:
        lines.append(f"{ind2}(:duration-bound {format_number(d_min)} {format_number(d_max)})")
    e_min, e_max = desc.energy_bound
    lines.append(f"{ind2}(:energy-bound {format_number(e_min)} {format_number(e_max)})")
    conds = [f"(at start {_literal_text(l)})" for l in sorted(desc.pre)]
    conds += [f"(at start (not (= {a} {b})))" for a, b in sorted(desc.distinct)]
    conds += [f"(over all {c})" for c in sorted(desc.numeric_pre, key=str)]
    effs = [f"(at end (not {_literal_text(l)}))" for l in sorted(desc.deletes)]
    effs += [f"(at end {_literal_text(l)})" for l in sorted(desc.adds)]
    effs += [f"(at end {e})" for e in sorted(desc.numeric_effects, key=lambda e: e.sort_key())]
    for key, items in ((":condition", conds), (":effect", effs)):
        if items:
            lines.append(f"{ind2}{key} (and")
            lines.extend(f"{ind3}{c}" for c in items[:-1])
            lines.append(f"{ind3}{items[-1]})")
        else:
            lines.append(f"{ind2}{key} (and)")
    lines[-1] += ")"
    return "\n".join(lines)


def print_domain(doc: DomainDocument) -> str:
    lines = [f"(define (domain {doc.name})", f"  (:requirements {' '.join(doc.requirements)})"]
    if doc.types:
        lines.append(f"  (:types {' '.join(doc.types)})")
    if doc.constants:
        lines.append(f"  (:constants {_typed(doc.constants)})")
    if doc.predicates:
        lines.append("  (:predicates")
        for name, params in doc.predicates:
            inner = f"{name} {_typed(params)}".rstrip()
            lines.append(f"    ({inner})")
        lines[-1] += ")"
    if doc.functions:
        lines.append(f"  (:functions {' '.join(f'({f})' for f in doc.functions)})")
    for desc in doc.durative_actions:
        lines.append(format_action(desc))
    lines.append(")")
    return "\n".join(lines) + "\n"


def print_problem(doc: ProblemDocument) -> str:
    lines = [f"(define (problem {doc.name})", f"  (:domain {doc.domain_name})"]
    if doc.objects:
        lines.append(f"  (:objects {_typed(doc.objects)})")
    facts = [str(l) for l in sorted(doc.init)]
    facts += [f"(= ({f}) {format_number(v)})" for f, v in doc.init_fluents]
    if facts:
        lines.append("  (:init")
        lines.extend(f"    {f}" for f in facts)
        lines[-1] += ")"
    else:
        lines.append("  (:init)")
    goals = [str(g) for g in sorted(doc.goal)]
    if len(goals) == 1:
        lines.append(f"  (:goal {goals[0]})")
    else:
        lines.append(f"  (:goal (and {' '.join(goals)}))")
    lines.append(")")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# fragments used by the JSON formats


def parse_literal(text: str, ground: bool = False) -> Literal:
    """Parse ``(p a b)`` or ``(not (p a b))``."""
    nodes = read_sexprs(text)
    if len(nodes) != 1:
        raise ParseError("expected exactly one literal", _eof_span(text), {"("})
    node = _expect_list(nodes[0], "literal")
    if node.head() == "not":
        if len(node.items) != 2:
            raise ParseError("'not' takes exactly one argument", node.span, {")"})
        return _literal(node.items[1], allow_vars=not ground).negate()
    return _literal(node, allow_vars=not ground)


def parse_condition_item(text: str) -> Union[Literal, NumericConstraint]:
    nodes = read_sexprs(text)
    if len(nodes) != 1:
        raise ParseError("expected exactly one condition", _eof_span(text), {"("})
    node = _expect_list(nodes[0], "condition")
    head = node.head()
    if head in COMPARATORS and len(node.items) == 3 and isinstance(node.items[1], SList):
        return NumericConstraint(_fluent_ref(node.items[1]), head, _number(node.items[2]))
    return parse_literal(text)


# ---------------------------------------------------------------------------
# self-model conversion and the health sidecar


def model_from_domain(doc: DomainDocument, health: Optional[dict] = None) -> SelfModel:
    model = SelfModel(
        types=doc.types,
        predicates=[(name, len(params)) for name, params in doc.predicates],
        fluents=doc.functions,
        constants=dict(doc.constants),
    )
    for desc in doc.durative_actions:
        model.register_action(desc)
    if health:
        apply_health(model, health)
    return model


def domain_from_model(model: SelfModel, template: DomainDocument) -> DomainDocument:
    """Rebuild a domain document holding the latest version of every action."""
    latest = model.actions
    order = [d.name for d in template.durative_actions if d.name in latest]
    order += sorted(n for n in latest if n not in order)
    actions = []
    for name in order:
        desc = latest[name]
        actions.append(ActionDescription(
            name=desc.name, params=desc.params, pre=desc.pre, numeric_pre=desc.numeric_pre,
            adds=desc.adds, deletes=desc.deletes, numeric_effects=desc.numeric_effects,
            distinct=desc.distinct, duration_bound=desc.duration_bound, energy_bound=desc.energy_bound))
    return DomainDocument(template.name, template.requirements, template.types, template.constants,
                          template.predicates, template.functions, tuple(actions))


def health_sidecar_path(domain_path: Union[str, Path]) -> Path:
    p = Path(domain_path)
    return p.with_name(p.stem + ".health.json")


def dump_health(model: SelfModel) -> dict:
    out = {}
    for name, desc in sorted(model.actions.items()):
        out[name] = {
            "health": desc.health.value,
            "window": [o.value for o in desc.outcome_window],
            "version": desc.version,
        }
    return out


def apply_health(model: SelfModel, data: dict) -> None:
    for name, entry in sorted(data.items()):
        if name not in model:
            continue
        try:
            health = HealthStatus(entry.get("health", "Functional"))
            window = [ExecStatus(o) for o in entry.get("window", [])]
        except ValueError as exc:
            raise ValueError(f"health sidecar entry for {name}: {exc}") from None
        if any(o not in (ExecStatus.SUCCEEDED, ExecStatus.FAILED) for o in window):
            raise ValueError(f"health sidecar entry for {name}: window holds non-outcome tags")
        model.set_health(name, health, window, version=entry.get("version"))


def load_domain_file(path: Union[str, Path]):
    """Parse a domain file plus its optional health sidecar into (document, model)."""
    path = Path(path)
    doc = parse_domain(path.read_text(encoding="utf-8"))
    sidecar = health_sidecar_path(path)
    health = json.loads(sidecar.read_text(encoding="utf-8")) if sidecar.exists() else None
    return doc, model_from_domain(doc, health)
