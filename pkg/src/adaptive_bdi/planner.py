"""Forward state-space planning over the self-model.

`solve` is a uniform-cost search whose step cost uses the pessimistic
bounds (d_max, e_max).  `repair_plan` re-plans around a failed step and
`check_safety` enumerates every success/failure outcome vector of a plan.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from .errors import BoundExceeded, IndexOutOfRange, Unsolvable
from .logic import CLOCK, ENERGY, Condition, NumericConstraint, State, json_number
from .self_model import GroundAction, SelfModel, lifted_matches

MAX_BRANCH_BOUND = 12


@dataclass(frozen=True)
class PlanningProblem:
    init: State
    goal: frozenset
    actions: tuple
    cost_weights: tuple = (1, 1)
    budget: Optional[tuple] = None  # (time_budget, energy_budget)
    max_expansions: int = 200_000

    def __post_init__(self):
        object.__setattr__(self, "goal", frozenset(self.goal))
        object.__setattr__(self, "actions", tuple(sorted(self.actions)))


@dataclass(frozen=True)
class PlanResult:
    steps: tuple
    cost: Fraction
    expanded_nodes: int


@dataclass(frozen=True)
class Patched:
    steps: tuple
    subplan: tuple
    cost: Fraction


@dataclass(frozen=True)
class NeedLearning:
    subplan: tuple
    cost: Fraction
    reason: str


@dataclass(frozen=True)
class Unrepairable:
    reason: str


RepairResult = Union[Patched, NeedLearning, Unrepairable]


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    first_violation: Optional[int] = None

    def __bool__(self):
        return self.valid


@dataclass(frozen=True)
class SafetyProperty:
    """A state violates safety when it satisfies any of the forbidden conjunctions."""

    forbidden: tuple

    def __post_init__(self):
        if not self.forbidden or any(not c for c in self.forbidden):
            raise ValueError("safety property needs nonempty forbidden conjunctions")

    def violated(self, state: State) -> bool:
        return any(c.holds(state) for c in self.forbidden)


NO_NEGATIVE_ENERGY = SafetyProperty((Condition(constraints=frozenset({NumericConstraint(ENERGY, "<", 0)})),))


@dataclass(frozen=True)
class Certified:
    explored: int


@dataclass(frozen=True)
class Counterexample:
    outcomes: tuple  # True = nominal success, False = failure, one per executed step
    states: tuple  # init followed by the state after each step

    def to_dict(self) -> dict:
        return {
            "outcomes": ["Succeeded" if o else "Failed" for o in self.outcomes],
            "states": [state_to_dict(s) for s in self.states],
        }


def state_to_dict(state: State) -> dict:
    return {
        "literals": [str(l) for l in state.sorted_literals()],
        "fluents": {k: json_number(v) for k, v in state.fluent_items},
    }


def plan_to_json(steps: Iterable[GroundAction]) -> list:
    return [{"name": s.name, "version": s.version, "args": list(s.args),
             "est_duration": json_number(s.d_max), "est_energy": json_number(s.e_max)} for s in steps]


# ---------------------------------------------------------------------------


def ground_actions(model: SelfModel, objects: dict, exclude: Iterable[tuple] = ()) -> list:
    """Ground every functional description over the typed `objects` map (symbol -> type)."""
    excluded = set(exclude)
    pool = dict(model.constants)
    pool.update(objects)
    out = []
    for desc in model.functional_actions():
        if desc.key in excluded:
            continue
        out.extend(desc.ground(args) for args in lifted_matches(desc, pool))
    return sorted(out)


def _search_key(state: State, fluents: frozenset) -> tuple:
    return (state.literals, tuple((k, v) for k, v in state.fluent_items if k in fluents))


def solve(problem: PlanningProblem, greedy: bool = False) -> PlanResult:
    """Minimum-cost plan from init to goal; equal-cost ties break on the (name, args) sequence.

    With ``greedy=True`` the frontier is ordered by unsatisfied goal count
    first, which is faster but gives up optimality.
    """
    tracked = frozenset(c.fluent for a in problem.actions for c in a.numeric_pre)
    goal = problem.goal
    counter = 0

    def priority(cost, state, names):
        if greedy:
            return (sum(1 for g in goal if g not in state.literals), cost, names)
        return (cost, names)

    frontier = [(priority(Fraction(0), problem.init, ()), counter, problem.init, ())]
    closed: set = set()
    expanded = 0
    while frontier:
        key, _, state, plan = heapq.heappop(frontier)
        cost = key[1] if greedy else key[0]
        skey = _search_key(state, tracked)
        if skey in closed:
            continue
        closed.add(skey)
        if goal <= state.literals:
            return PlanResult(tuple(plan), cost, expanded)
        expanded += 1
        if expanded > problem.max_expansions:
            raise Unsolvable(f"expansion limit {problem.max_expansions} reached")
        for act in problem.actions:
            if not act.applicable(state):
                continue
            nxt = act.apply(state)
            if _search_key(nxt, tracked) in closed:
                continue
            names = tuple((s.name, s.args) for s in plan) + ((act.name, act.args),)
            counter += 1
            heapq.heappush(frontier, (priority(cost + act.cost(problem.cost_weights), nxt, names),
                                      counter, nxt, plan + (act,)))
    raise Unsolvable("search space exhausted")


def _reground(step, model: Optional[SelfModel]) -> GroundAction:
    if model is None:
        return step
    if isinstance(step, GroundAction):
        return model.lookup(step.name, step.version).ground(step.args)
    name, args = step
    return model.lookup(name).ground(tuple(args))


def validate_plan(steps: Sequence, init: State, model: Optional[SelfModel] = None) -> ValidationResult:
    """Chain nominal effects from `init`; report the first step whose preconditions fail."""
    state = init
    for i, step in enumerate(steps):
        act = _reground(step, model)
        if not act.applicable(state):
            return ValidationResult(False, i)
        state = act.apply(state)
    return ValidationResult(True)


def repair_plan(plan: Sequence[GroundAction], failed_index: int, current: State, model: SelfModel,
                budget: Optional[tuple] = None, *, objects: Optional[dict] = None,
                exclude: Iterable[tuple] = (), cost_weights: tuple = (1, 1)) -> RepairResult:
    """Replace plan[failed_index] by a sub-plan of functional actions reaching its adds."""
    if not 0 <= failed_index < len(plan):
        raise IndexOutOfRange(f"failed_index {failed_index} outside plan of length {len(plan)}")
    failed = plan[failed_index]
    actions = ground_actions(model, objects or {}, exclude)
    problem = PlanningProblem(current, failed.adds, tuple(actions), cost_weights)
    try:
        sub = solve(problem)
    except Unsolvable as exc:
        return Unrepairable(f"no functional sub-plan reaches the effects of {failed}: {exc}")
    if budget is not None:
        time_budget, energy_budget = budget
        total_d = sum((s.d_max for s in sub.steps), Fraction(0))
        total_e = sum((s.e_max for s in sub.steps), Fraction(0))
        if time_budget is not None and total_d > time_budget:
            return NeedLearning(sub.steps, sub.cost, f"sub-plan duration {total_d} exceeds budget {time_budget}")
        if energy_budget is not None and total_e > energy_budget:
            return NeedLearning(sub.steps, sub.cost, f"sub-plan energy {total_e} exceeds budget {energy_budget}")
    patch = tuple(sub.steps) + tuple(plan[failed_index + 1:])
    check = validate_plan(patch, current)
    if not check.valid:
        return Unrepairable(f"patched plan invalid at step {check.first_violation}")
    return Patched(patch, tuple(sub.steps), sub.cost)


def fail_outcome(act: GroundAction, state: State) -> State:
    """Failed execution: no literal effects, worst-case time and energy drain."""
    deltas = {}
    if state.fluent(ENERGY) is not None:
        deltas[ENERGY] = -act.e_max
    if state.fluent(CLOCK) is not None:
        deltas[CLOCK] = act.d_max
    fl = state.fluents
    for k, v in deltas.items():
        fl[k] = fl[k] + v
    return State(state.literals, tuple(sorted(fl.items())))


def check_safety(steps: Sequence, init: State, model: Optional[SelfModel] = None,
                 props: SafetyProperty = NO_NEGATIVE_ENERGY,
                 branch_bound: int = MAX_BRANCH_BOUND) -> Union[Certified, Counterexample]:
    """Explore every success/failure combination of `steps` looking for a forbidden state."""
    if branch_bound > MAX_BRANCH_BOUND:
        raise BoundExceeded(f"branch bound {branch_bound} exceeds {MAX_BRANCH_BOUND}")
    if len(steps) > branch_bound:
        raise BoundExceeded(f"plan of length {len(steps)} exceeds branch bound {branch_bound}")
    acts = [_reground(s, model) for s in steps]
    safe_below: set = set()
    explored = 0

    def dfs(i, state, outcomes, states):
        nonlocal explored
        explored += 1
        if props.violated(state):
            return Counterexample(tuple(outcomes), tuple(states))
        if i == len(acts) or (i, state) in safe_below:
            return None
        for ok in (False, True):
            nxt = acts[i].apply(state) if ok else fail_outcome(acts[i], state)
            found = dfs(i + 1, nxt, outcomes + [ok], states + [nxt])
            if found is not None:
                return found
        safe_below.add((i, state))
        return None

    found = dfs(0, init, [], [init])
    return found if found is not None else Certified(explored)


def plan_cost(steps: Iterable[GroundAction], weights=(1, 1)) -> Fraction:
    return sum((s.cost(weights) for s in steps), Fraction(0))

