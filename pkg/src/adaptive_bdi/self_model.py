"""The agent-maintained repository of action descriptions.

Each description carries its pre/post-conditions, duration and energy bounds
and a health status driven by a sliding window of recent outcomes.
Descriptions are immutable values; the model swaps in updated copies and bumps
its revision counter on every mutation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Optional

from .errors import (
    DuplicateAction,
    InvalidDescription,
    StaleVersion,
    UnknownAction,
    VocabularyViolation,
)
from .lifecycle import ExecStatus, HealthEvent, HealthStatus, step_health
from .logic import (
    CLOCK,
    Condition,
    as_number,
    expr_fluents,
    is_variable,
)

OUTCOMES = (ExecStatus.SUCCEEDED, ExecStatus.FAILED)


@dataclass(frozen=True)
class HealthPolicy:
    window: int = 5
    suspect_threshold: int = 2
    recovery_successes: int = 3

    def failures(self, window) -> int:
        return sum(1 for o in window if o is ExecStatus.FAILED)

    def next_health(self, health: HealthStatus, window: tuple, outcome: ExecStatus):
        """Return (new_health, fired_event) after `outcome` was appended to `window`."""
        if health is HealthStatus.DEPRECATED:
            return health, None
        event = None
        if outcome is ExecStatus.FAILED:
            if health is HealthStatus.FUNCTIONAL and self.failures(window) >= self.suspect_threshold:
                event = HealthEvent.PERSISTENT_FAILURE
            elif health is HealthStatus.SUSPECT:
                event = HealthEvent.REPEATED_FAILURE
        elif health is HealthStatus.SUSPECT:
            tail = window[-self.recovery_successes:]
            if len(tail) == self.recovery_successes and all(o is ExecStatus.SUCCEEDED for o in tail):
                event = HealthEvent.RECOVERY_OBSERVED
        if event is None:
            return health, None
        return step_health(health, event), event


DEFAULT_POLICY = HealthPolicy()


@dataclass(frozen=True)
class ActionDescription:
    name: str
    params: tuple = ()  # ((variable, type), ...)
    pre: frozenset = frozenset()  # Literals, either polarity
    numeric_pre: frozenset = frozenset()  # NumericConstraints
    adds: frozenset = frozenset()
    deletes: frozenset = frozenset()
    numeric_effects: frozenset = frozenset()
    distinct: frozenset = frozenset()  # {(var, var)} required unequal
    duration_bound: tuple = (Fraction(1), Fraction(1))
    energy_bound: tuple = (Fraction(0), Fraction(0))
    success_cond: Optional[Condition] = None
    failure_cond: Optional[Condition] = None
    health: HealthStatus = HealthStatus.FUNCTIONAL
    outcome_window: tuple = ()
    version: int = 1

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "params", tuple(tuple(p) for p in self.params))
        for name in ("pre", "numeric_pre", "adds", "deletes", "numeric_effects"):
            set_(self, name, frozenset(getattr(self, name)))
        set_(self, "distinct", frozenset(tuple(sorted(p)) for p in self.distinct))
        set_(self, "duration_bound", tuple(as_number(v) for v in self.duration_bound))
        set_(self, "energy_bound", tuple(as_number(v) for v in self.energy_bound))
        set_(self, "outcome_window", tuple(self.outcome_window))
        self._validate()

    def _validate(self):
        if not self.name:
            raise InvalidDescription("action name must be nonempty")
        d_min, d_max = self.duration_bound
        e_min, e_max = self.energy_bound
        if d_min > d_max:
            raise InvalidDescription(f"{self.name}: duration bound {d_min} > {d_max}")
        if e_min > e_max:
            raise InvalidDescription(f"{self.name}: energy bound {e_min} > {e_max}")
        if any(not l.positive for l in self.adds | self.deletes):
            raise InvalidDescription(f"{self.name}: effects must be positive literals")
        clash = self.adds & self.deletes
        if clash:
            raise InvalidDescription(f"{self.name}: literal both added and deleted: {sorted(map(str, clash))}")
        declared = {v for v, _ in self.params}
        used = set()
        for lit in self.pre | self.adds | self.deletes:
            used |= lit.variables()
        for a, b in self.distinct:
            used |= {a, b}
        missing = used - declared
        if missing:
            raise InvalidDescription(f"{self.name}: undeclared variables {sorted(missing)}")

    @property
    def key(self) -> tuple:
        return (self.name, self.version)

    @property
    def d_max(self):
        return self.duration_bound[1]

    @property
    def e_max(self):
        return self.energy_bound[1]

    def success_condition(self) -> Condition:
        if self.success_cond is not None:
            return self.success_cond
        return Condition(self.adds | frozenset(d.negate() for d in self.deletes))

    def binding(self, args) -> dict:
        if len(args) != len(self.params):
            raise ValueError(f"{self.name} expects {len(self.params)} arguments, got {len(args)}")
        return {var: arg for (var, _), arg in zip(self.params, args)}

    def ground(self, args) -> "GroundAction":
        b = self.binding(tuple(args))
        d_max = self.d_max
        deltas: dict = {}
        for eff in self.numeric_effects:
            # pessimistic nominal change, evaluated at the longest allowed duration
            deltas[eff.fluent] = deltas.get(eff.fluent, Fraction(0)) + eff.delta(d_max)
        return GroundAction(
            name=self.name,
            version=self.version,
            args=tuple(args),
            pre=frozenset(l.substitute(b) for l in self.pre),
            numeric_pre=self.numeric_pre,
            adds=frozenset(l.substitute(b) for l in self.adds),
            deletes=frozenset(l.substitute(b) for l in self.deletes),
            deltas=tuple(sorted(deltas.items())),
            d_max=d_max,
            e_max=self.e_max,
        )


@dataclass(frozen=True, order=True)
class GroundAction:
    name: str
    args: tuple
    version: int = 1
    pre: frozenset = field(default=frozenset(), compare=False)
    numeric_pre: frozenset = field(default=frozenset(), compare=False)
    adds: frozenset = field(default=frozenset(), compare=False)
    deletes: frozenset = field(default=frozenset(), compare=False)
    deltas: tuple = field(default=(), compare=False)
    d_max: Fraction = field(default=Fraction(1), compare=False)
    e_max: Fraction = field(default=Fraction(0), compare=False)

    def applicable(self, state) -> bool:
        return state.satisfies(self.pre, self.numeric_pre)

    def apply(self, state):
        deltas = dict(self.deltas)
        if state.fluent(CLOCK) is not None:
            deltas[CLOCK] = deltas.get(CLOCK, Fraction(0)) + self.d_max
        return state.apply(self.adds, self.deletes, deltas)

    def cost(self, weights=(1, 1)) -> Fraction:
        w_time, w_energy = (as_number(w) for w in weights)
        total = w_time * self.d_max
        if w_energy:
            total += w_energy * self.e_max
        return total

    def __str__(self):
        return f"{self.name}({', '.join(self.args)})"


class SelfModel:
    """Typed action repository keyed by (name, version)."""

    def __init__(self, types: Iterable[str] = (), predicates: Iterable[tuple] = (),
                 fluents: Iterable[str] = (), constants: Optional[dict] = None,
                 policy: HealthPolicy = DEFAULT_POLICY):
        self.type_hierarchy = frozenset(types) | {"object"}
        self.predicate_vocab = frozenset((p, int(n)) for p, n in predicates)
        self.fluent_vocab = frozenset(fluents) | {CLOCK}
        self.constants = dict(constants or {})
        self.policy = policy
        self.revision = 0
        self._descriptions: dict = {}
        self.history: list = []  # (name, outcome, tick), for deterministic replay

    # -- lookup ---------------------------------------------------------
    @property
    def actions(self) -> dict:
        """Latest version of every registered action, by name."""
        latest: dict = {}
        for (name, version), desc in sorted(self._descriptions.items()):
            latest[name] = desc
        return latest

    def descriptions(self) -> list:
        return [self._descriptions[k] for k in sorted(self._descriptions)]

    def __contains__(self, name) -> bool:
        return any(n == name for n, _ in self._descriptions)

    def lookup(self, name: str, version: Optional[int] = None) -> ActionDescription:
        if version is not None:
            try:
                return self._descriptions[(name, version)]
            except KeyError:
                raise UnknownAction(f"unknown action {name} v{version}") from None
        versions = [v for n, v in self._descriptions if n == name]
        if not versions:
            raise UnknownAction(f"unknown action {name}")
        return self._descriptions[(name, max(versions))]

    def functional_actions(self) -> list:
        return [d for d in self.descriptions() if d.health is not HealthStatus.DEPRECATED]

    # -- mutation -------------------------------------------------------
    def _bump(self) -> int:
        self.revision += 1
        return self.revision

    def check_vocabulary(self, desc: ActionDescription) -> None:
        preds = {p for p, _ in self.predicate_vocab}
        for lit in desc.pre | desc.adds | desc.deletes:
            if (lit.predicate, len(lit.args)) not in self.predicate_vocab:
                what = "arity mismatch for" if lit.predicate in preds else "undeclared predicate"
                raise VocabularyViolation(f"{desc.name}: {what} {lit.predicate}/{len(lit.args)}")
            for arg in lit.args:
                if not is_variable(arg) and arg not in self.constants:
                    raise VocabularyViolation(f"{desc.name}: undeclared constant {arg!r}")
        fluents = {c.fluent for c in desc.numeric_pre}
        for eff in desc.numeric_effects:
            fluents |= {eff.fluent} | expr_fluents(eff.expr)
        unknown = fluents - self.fluent_vocab
        if unknown:
            raise VocabularyViolation(f"{desc.name}: undeclared fluents {sorted(unknown)}")
        for _, typ in desc.params:
            if typ not in self.type_hierarchy:
                raise VocabularyViolation(f"{desc.name}: undeclared type {typ!r}")

    def register_action(self, desc: ActionDescription, *, keep_health: bool = False) -> int:
        if desc.name in self:
            raise DuplicateAction(f"action {desc.name} already registered")
        self.check_vocabulary(desc)
        if not keep_health:
            desc = replace(desc, health=HealthStatus.FUNCTIONAL, outcome_window=())
        self._descriptions[desc.key] = desc
        return self._bump()

    def record_outcome(self, name: str, outcome: ExecStatus, tick: int = 0) -> HealthStatus:
        if outcome not in OUTCOMES:
            raise ValueError(f"outcome must be Succeeded or Failed, got {outcome}")
        desc = self.lookup(name)
        window = (desc.outcome_window + (outcome,))[-self.policy.window:]
        health, _ = self.policy.next_health(desc.health, window, outcome)
        self._descriptions[desc.key] = replace(desc, outcome_window=window, health=health)
        self.history.append((name, outcome, tick))
        self._bump()
        return health

    def replace_description(self, name: str, new_desc: ActionDescription) -> int:
        old = self.lookup(name)
        if new_desc.name != name:
            raise InvalidDescription(f"replacement for {name} is named {new_desc.name}")
        if new_desc.version <= old.version:
            raise StaleVersion(f"{name}: version {new_desc.version} is not newer than {old.version}")
        self.check_vocabulary(new_desc)
        for key, desc in list(self._descriptions.items()):
            if key[0] == name and desc.health is not HealthStatus.DEPRECATED:
                self._descriptions[key] = replace(desc, health=HealthStatus.DEPRECATED)
        self._descriptions[new_desc.key] = replace(new_desc, health=HealthStatus.FUNCTIONAL, outcome_window=())
        return self._bump()

    def set_health(self, name: str, health: HealthStatus, window=(), version: Optional[int] = None) -> None:
        """Restore persisted health bookkeeping (sidecar load); optionally renumbers the version."""
        desc = self.lookup(name)
        updated = replace(desc, health=health, outcome_window=tuple(window)[-self.policy.window:],
                          version=desc.version if version is None else version)
        del self._descriptions[desc.key]
        self._descriptions[updated.key] = updated
        self._bump()

    def copy(self) -> "SelfModel":
        other = SelfModel.__new__(SelfModel)
        other.__dict__.update(self.__dict__)
        other._descriptions = dict(self._descriptions)
        other.history = list(self.history)
        other.constants = dict(self.constants)
        return other


def replay_history(model: SelfModel, events) -> SelfModel:
    """Re-apply (name, outcome, tick) events to a model."""
    for name, outcome, tick in events:
        model.record_outcome(name, outcome, tick)
    return model


def lifted_matches(desc: ActionDescription, objects: dict) -> Iterable[tuple]:
    """Every type-correct argument tuple for `desc` honouring its distinct constraints."""
    pools = []
    for _, typ in desc.params:
        pools.append(sorted(o for o, t in objects.items() if typ == "object" or t == typ))
    names = [v for v, _ in desc.params]
    for combo in itertools.product(*pools):
        b = dict(zip(names, combo))
        if all(b[x] != b[y] for x, y in desc.distinct):
            yield combo


def nominal_energy(desc: ActionDescription):
    """Energy consumed by the nominal effects, evaluated at the shortest duration."""
    total = Fraction(0)
    for eff in desc.numeric_effects:
        if eff.fluent == "energy":
            total -= eff.delta(desc.duration_bound[0])
    return total

