"""Induce replacement action descriptions from execution traces.

Effects are the lifted literals that change the same way in every
successful trace; thresholds are ``ceil(mean + k * pstdev)`` computed
exactly over rationals.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .errors import EmptyEffects, InconsistentSchema, InsufficientData
from .lifecycle import ExecStatus, HealthStatus
from .logic import ENERGY, Literal, NumericEffect, State, as_number, json_number
from .self_model import ActionDescription, SelfModel

MIN_TRACES = 2


@dataclass(frozen=True)
class ExecutionTrace:
    name: str
    args: tuple
    pre: State
    post: State
    duration: Fraction
    energy: Fraction
    outcome: ExecStatus
    trace_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(self, "duration", as_number(self.duration))
        object.__setattr__(self, "energy", as_number(self.energy))
        if self.duration < 0 or self.energy < 0:
            raise ValueError("trace duration and energy must be nonnegative")
        if self.outcome not in (ExecStatus.SUCCEEDED, ExecStatus.FAILED):
            raise ValueError(f"trace outcome must be Succeeded or Failed, got {self.outcome}")

    def to_dict(self) -> dict:
        def state(s: State):
            return {"literals": [str(l) for l in s.sorted_literals()],
                    "fluents": {k: json_number(v) for k, v in s.fluent_items}}

        return {
            "name": self.name,
            "args": list(self.args),
            "pre": state(self.pre),
            "post": state(self.post),
            "duration": json_number(self.duration),
            "energy": json_number(self.energy),
            "outcome": self.outcome.value,
        }

    @classmethod
    def from_dict(cls, data: dict, trace_id: str = "") -> "ExecutionTrace":
        from .pddl_io import parse_literal

        def state(raw) -> State:
            if isinstance(raw, list):
                raw = {"literals": raw}
            lits = [parse_literal(t, ground=True) for t in raw.get("literals", [])]
            return State.of(lits, {k: as_number(v) for k, v in raw.get("fluents", {}).items()})

        try:
            return cls(
                name=data["name"], args=tuple(data.get("args", ())), pre=state(data["pre"]),
                post=state(data["post"]), duration=data["duration"], energy=data["energy"],
                outcome=ExecStatus(data["outcome"]), trace_id=trace_id)
        except KeyError as exc:
            raise ValueError(f"trace record missing field {exc}") from None


@dataclass(frozen=True)
class LearnedDescription:
    description: ActionDescription
    support: int
    provenance: tuple


def write_traces(path: Union[str, Path], traces: Iterable[ExecutionTrace]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in traces:
            fh.write(json.dumps(t.to_dict(), sort_keys=True) + "\n")


def read_traces(path: Union[str, Path]) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                out.append(ExecutionTrace.from_dict(json.loads(line), trace_id=f"{Path(path).name}:{lineno}"))
    return out


# ---------------------------------------------------------------------------
# effect induction


def default_params(arity: int) -> tuple:
    return tuple(f"?a{i}" for i in range(arity))


def lift(lit: Literal, args: Sequence[str], variables: Sequence[str], constants: Iterable[str] = ()):
    """Replace action arguments by their positional variables; None if the literal is irrelevant."""
    consts = set(constants)
    index = {}
    for pos, a in enumerate(args):
        index.setdefault(a, variables[pos])
    lifted = []
    for a in lit.args:
        if a in index:
            lifted.append(index[a])
        elif a in consts:
            lifted.append(a)
        else:
            return None
    return Literal(lit.predicate, tuple(lifted), lit.positive)


def _check_schema(traces: Sequence[ExecutionTrace]) -> None:
    names = {t.name for t in traces}
    if len(names) > 1:
        raise InconsistentSchema(f"traces mix actions {sorted(names)}")
    arities = {len(t.args) for t in traces}
    if len(arities) > 1:
        raise InconsistentSchema(f"traces disagree on arity: {sorted(arities)}")


def successful(traces: Iterable[ExecutionTrace]) -> list:
    return [t for t in traces if t.outcome is ExecStatus.SUCCEEDED]


def _require(traces: Sequence[ExecutionTrace]) -> list:
    _check_schema(traces)
    good = successful(traces)
    if len(good) < MIN_TRACES:
        raise InsufficientData(f"need at least {MIN_TRACES} successful traces, got {len(good)}")
    return good


def _lifted_set(lits, trace, variables, constants) -> set:
    out = set()
    for lit in lits:
        lifted = lift(lit, trace.args, variables, constants)
        if lifted is not None:
            out.add(lifted)
    return out


def learn_effects(traces: Sequence[ExecutionTrace], params: Optional[Sequence[str]] = None,
                  constants: Iterable[str] = ()) -> tuple:
    """Lifted (adds, deletes) shared by every successful trace."""
    good = _require(traces)
    variables = tuple(params) if params is not None else default_params(len(good[0].args))
    constants = tuple(constants)
    adds = deletes = None
    for t in good:
        a = _lifted_set(t.post.literals - t.pre.literals, t, variables, constants)
        d = _lifted_set(t.pre.literals - t.post.literals, t, variables, constants)
        adds = a if adds is None else adds & a
        deletes = d if deletes is None else deletes & d
    return frozenset(adds), frozenset(deletes)


def learn_preconditions(traces: Sequence[ExecutionTrace], params: Optional[Sequence[str]] = None,
                        constants: Iterable[str] = ()) -> frozenset:
    good = _require(traces)
    variables = tuple(params) if params is not None else default_params(len(good[0].args))
    pre = None
    for t in good:
        p = _lifted_set(t.pre.literals, t, variables, tuple(constants))
        pre = p if pre is None else pre & p
    return frozenset(pre)


# ---------------------------------------------------------------------------
# thresholds


def ceil_mean_plus_k_std(values: Sequence, k=2) -> int:
    """Exact ``ceil(mean + k * population_stddev)`` for rational samples."""
    xs = [Fraction(as_number(v)) for v in values]
    k = Fraction(as_number(k))
    if k < 0:
        raise ValueError("k must be nonnegative")
    n = len(xs)
    mean = sum(xs, Fraction(0)) / n
    var = sum(((x - mean) ** 2 for x in xs), Fraction(0)) / n
    target_sq = k * k * var

    def covers(c: int) -> bool:
        gap = c - mean
        return gap >= 0 and gap * gap >= target_sq

    guess = math.ceil(float(mean) + float(k) * math.sqrt(float(var)))
    while not covers(guess):
        guess += 1
    while covers(guess - 1):
        guess -= 1
    return guess


def estimate_thresholds(samples: Sequence[tuple], k=2) -> tuple:
    if len(samples) < MIN_TRACES:
        raise InsufficientData(f"need at least {MIN_TRACES} samples, got {len(samples)}")
    durations = [d for d, _ in samples]
    energies = [e for _, e in samples]
    return ceil_mean_plus_k_std(durations, k), ceil_mean_plus_k_std(energies, k)


# ---------------------------------------------------------------------------
# synthesis


def synthesize_description(name: str, traces: Sequence[ExecutionTrace], model: SelfModel,
                           k=2) -> LearnedDescription:
    """Propose a successor description for `name`; nothing is installed until `commit`."""
    old = model.lookup(name)
    relevant = [t for t in traces if t.name == name]
    good = _require(relevant)
    variables = [v for v, _ in old.params] if old.params else default_params(len(good[0].args))
    if len(variables) != len(good[0].args):
        raise InconsistentSchema(f"{name} takes {len(variables)} arguments, traces carry {len(good[0].args)}")
    constants = tuple(model.constants)
    adds, deletes = learn_effects(good, variables, constants)
    if not adds and not deletes:
        raise EmptyEffects(f"no literal changes consistently across {len(good)} traces of {name}")
    pre = learn_preconditions(good, variables, constants)
    durations = [t.duration for t in good]
    energies = [t.energy for t in good]
    d_est, e_est = estimate_thresholds(list(zip(durations, energies)), k)
    # the estimate can undercut an observed sample on larger corpora; never reject training data
    d_max = max(Fraction(d_est), max(durations))
    e_max = max(Fraction(e_est), max(energies))
    mean_energy = sum(energies, Fraction(0)) / len(energies)
    effects = frozenset(e for e in old.numeric_effects if e.fluent != ENERGY)
    if any(e.fluent == ENERGY for e in old.numeric_effects) or mean_energy > 0:
        effects |= {NumericEffect(ENERGY, "decrease", Fraction(math.ceil(mean_energy)))}
    desc = ActionDescription(
        name=name, params=old.params or tuple((v, "object") for v in variables),
        pre=pre | frozenset(l for l in old.pre if not l.positive),
        numeric_pre=old.numeric_pre, adds=adds, deletes=deletes - adds,
        numeric_effects=effects, distinct=old.distinct,
        duration_bound=(min(durations), d_max), energy_bound=(min(energies), e_max),
        health=HealthStatus.FUNCTIONAL, version=old.version + 1)
    ids = tuple(t.trace_id or f"{name}#{i}" for i, t in enumerate(good))
    return LearnedDescription(desc, len(good), ids)


def commit(model: SelfModel, learned: LearnedDescription) -> int:
    return model.replace_description(learned.description.name, learned.description)


def propose_on_copy(model: SelfModel, learned: LearnedDescription) -> SelfModel:
    """Tentative model with the learned description installed, for re-planning before commit."""
    trial = model.copy()
    commit(trial, learned)
    return trial
