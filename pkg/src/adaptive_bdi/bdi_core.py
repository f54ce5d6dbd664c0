"""Minimal BDI engine: beliefs, goals, a guarded plan library and intentions.

Each deliberation cycle updates beliefs from percepts, runs the monitor on
every executing action, and advances each ready intention by one step.
Dispatching a durative action suspends the owning intention until the
monitor reports a verdict; failures are routed to a reconfiguration hook.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import NoApplicablePlan, UnknownAction
from .learner import ExecutionTrace
from .lifecycle import ExecStatus, HealthStatus, is_terminal
from .logic import CLOCK, ENERGY, Condition, Literal, NumericConstraint, State, match, \
    satisfying_bindings
from .messages import FINISHED, HALT, HALTED, ActionCommand, Percepts
from .monitor import ActionExecutionRecord, MonitorVerdict, apply_verdict, monitor
from .self_model import SelfModel

FUNCTIONAL_PREDICATES = frozenset({"at", "sample_at"})


def update_beliefs(beliefs: State, percepts: Percepts, functional: Iterable[str] = FUNCTIONAL_PREDICATES) -> State:
    """Fold percepts into beliefs.

    A positive percept of a functional predicate replaces any belief with the
    same predicate and first argument; negative percepts retract; fluent
    readings overwrite.
    """
    functional = frozenset(functional)
    lits = set(beliefs.literals)
    for lit in percepts.literals:
        if not lit.positive:
            lits.discard(lit.atom)
            continue
        if lit.predicate in functional and lit.args:
            lits = {l for l in lits if not (l.predicate == lit.predicate and l.args[:1] == lit.args[:1])}
        lits.add(lit)
    fl = beliefs.fluents
    fl.update(dict(percepts.fluents))
    return State.of(lits, fl)


# ---------------------------------------------------------------------------
# plan library


@dataclass(frozen=True)
class Act:
    name: str
    args: tuple = ()

    def substitute(self, b: dict) -> "Act":
        return Act(self.name, tuple(b.get(a, a) for a in self.args))

    def variables(self) -> set:
        return {a for a in self.args if a.startswith("?")}


@dataclass(frozen=True)
class AddBelief:
    literal: Literal

    def substitute(self, b: dict) -> "AddBelief":
        return AddBelief(self.literal.substitute(b))

    def variables(self) -> set:
        return self.literal.variables()


@dataclass(frozen=True)
class DropBelief:
    literal: Literal

    def substitute(self, b: dict) -> "DropBelief":
        return DropBelief(self.literal.substitute(b))

    def variables(self) -> set:
        return self.literal.variables()


@dataclass(frozen=True)
class SubGoal:
    goal: Literal

    def substitute(self, b: dict) -> "SubGoal":
        return SubGoal(self.goal.substitute(b))

    def variables(self) -> set:
        return self.goal.variables()


Step = Union[Act, AddBelief, DropBelief, SubGoal]


@dataclass(frozen=True)
class PlanRule:
    trigger: Literal
    guard: Condition = Condition()
    body: tuple = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        bound = self.trigger.variables()
        for lit in self.guard.literals:
            if lit.positive:
                bound |= lit.variables()
        for lit in self.guard.literals:
            if not lit.positive and lit.variables() - bound:
                raise ValueError(f"negated guard literal {lit} uses unbound variables")
        for step in self.body:
            loose = step.variables() - bound
            if loose:
                raise ValueError(f"plan body step {step} uses unbound variables {sorted(loose)}")


@dataclass(frozen=True)
class PlanInstance:
    rule: PlanRule
    index: int
    binding: tuple  # sorted ((var, value), ...)
    body: tuple


def select_plan(goal: Literal, beliefs: State, library) -> PlanInstance:
    """First applicable rule in declaration order, with the least ground substitution."""
    for i, rule in enumerate(library):
        b0 = match(rule.trigger, goal)
        if b0 is None:
            continue
        options = [tuple(sorted(b.items())) for b in
                   satisfying_bindings(rule.guard.literals, rule.guard.constraints, beliefs, b0)]
        if not options:
            continue
        best = min(options)
        b = dict(best)
        return PlanInstance(rule, i, best, tuple(s.substitute(b) for s in rule.body))
    raise NoApplicablePlan(f"no applicable plan for {goal}")


def _step_from_dict(raw: dict) -> Step:
    from .pddl_io import parse_literal

    kind = raw.get("kind", "act")
    if kind == "act":
        return Act(raw["name"], tuple(raw.get("args", ())))
    if kind == "add_belief":
        return AddBelief(parse_literal(raw["literal"]))
    if kind == "drop_belief":
        return DropBelief(parse_literal(raw["literal"]))
    if kind == "subgoal":
        return SubGoal(parse_literal(raw["goal"]))
    raise ValueError(f"unknown plan step kind {kind!r}")


def plan_rule_from_dict(raw: dict) -> PlanRule:
    from .pddl_io import parse_condition_item, parse_literal

    lits, cons = set(), set()
    for item in raw.get("guard", []):
        parsed = parse_condition_item(item)
        (cons if isinstance(parsed, NumericConstraint) else lits).add(parsed)
    return PlanRule(parse_literal(raw["trigger"]), Condition(frozenset(lits), frozenset(cons)),
                    tuple(_step_from_dict(s) for s in raw.get("body", [])), raw.get("label", ""))


def load_plan_library(path: Union[str, Path]) -> list:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ValueError("plan library must be a JSON list of rules")
    return [plan_rule_from_dict(r) for r in data]


def monitor_records(records: dict, beliefs: State, tick: int, percepts: Percepts) -> list:
    """Run the monitor over every live record, updating `records` in place.

    Returns (action_id, old_record, new_record, verdict) for each record that
    was live at the start of the tick, in creation order.  A halted notice
    completes an abort; a finished notice without the expected effect marks
    a contradiction.
    """
    halted = percepts.notice_ids(HALTED)
    finished = percepts.notice_ids(FINISHED)
    aborts = set(percepts.abort_requests)
    out = []
    for aid in list(records):
        rec = records[aid]
        if aid in aborts and rec.status is ExecStatus.ACTIVE:
            rec = replace(rec, abort_requested=True)
        if rec.status is ExecStatus.ABORTING and aid in halted:
            verdict = MonitorVerdict(ExecStatus.ABORTED, rec.reason)
        elif rec.status in (ExecStatus.ACTIVE, ExecStatus.ABORTING):
            if aid in finished:
                rec = replace(rec, contradiction=True)
            verdict = monitor(rec, beliefs, tick)
        else:
            continue
        new = apply_verdict(rec, verdict)
        records[aid] = new
        out.append((aid, rec, new, verdict))
    return out


# ---------------------------------------------------------------------------
# agent


@dataclass
class GoalEntry:
    goal: Literal
    status: ExecStatus = ExecStatus.PENDING
    parent: Optional[int] = None
    diagnostic: str = ""


@dataclass
class Intention:
    goal_index: int
    plan: PlanInstance
    body: list
    pc: int = 0
    status: ExecStatus = ExecStatus.ACTIVE
    active_action: Optional[str] = None
    waiting_on: Optional[int] = None
    reattempt: bool = False


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    kind: str  # Percept | Command | Verdict | Health | Plan | Learn | Safety
    payload: dict

    def to_json(self) -> str:
        return json.dumps({"tick": self.tick, "kind": self.kind, "payload": self.payload}, sort_keys=True)


def command_payload(record: ActionExecutionRecord, reattempt: bool = False) -> dict:
    payload = record.to_dict()
    payload["reattempt"] = reattempt
    return payload


def verdict_payload(action_id: str, verdict: MonitorVerdict) -> dict:
    return {"action_id": action_id, "status": verdict.status.value,
            "reason": verdict.reason.value if verdict.reason else None}


class Agent:
    """Mutable agent state stepped once per tick by `step`."""

    def __init__(self, model: SelfModel, library, beliefs: Optional[State] = None,
                 objects: Optional[dict] = None, reconfigurator=None,
                 functional: Iterable[str] = FUNCTIONAL_PREDICATES):
        self.model = model
        self.library = list(library)
        self.beliefs = beliefs or State.of()
        self.objects = dict(objects or {})
        self.reconfigurator = reconfigurator
        self.functional = frozenset(functional)
        self.goals: list = []
        self.intentions: dict = {}
        self.records: dict = {}
        self.pre_states: dict = {}
        self.episodes_log: list = []  # ExecutionTrace per resolved episode
        self.failures: list = []  # (tick, action_id, reason)
        self.trace: list = []
        self.tick = 0
        self.counter = 0
        self.outbox: list = []
        self.safety_violation = None

    # -- bookkeeping ------------------------------------------------------
    def emit(self, kind: str, payload: dict) -> None:
        self.trace.append(TraceRecord(self.tick, kind, payload))

    def adopt(self, goal: Literal, parent: Optional[int] = None) -> int:
        self.goals.append(GoalEntry(goal, parent=parent))
        return len(self.goals) - 1

    def send_halt(self, action_id: str) -> None:
        cmd = ActionCommand(f"halt-{action_id}", HALT, (action_id,), self.tick)
        self.outbox.append(cmd)
        self.emit("Command", {"action_id": cmd.action_id, "name": HALT, "args": [action_id]})

    def intention_for(self, action_id: str) -> Optional[Intention]:
        for it in self.intentions.values():
            if it.active_action == action_id:
                return it
        return None

    def fail_goal(self, index: int, diagnostic: str) -> None:
        entry = self.goals[index]
        if is_terminal(entry.status):
            return
        entry.status = ExecStatus.FAILED
        entry.diagnostic = diagnostic
        it = self.intentions.get(index)
        if it is not None:
            it.status = ExecStatus.FAILED
        if entry.parent is not None:
            self.fail_goal(entry.parent, f"subgoal {entry.goal} failed: {diagnostic}")

    def execution_trace(self, record: ActionExecutionRecord, outcome: ExecStatus) -> ExecutionTrace:
        energy_now = self.beliefs.fluent(ENERGY, record.energy_at_start)
        trace = ExecutionTrace(
            record.name, record.args, self.pre_states.get(record.action_id, self.beliefs), self.beliefs,
            duration=self.tick - record.start_tick, energy=max(record.energy_at_start - energy_now, 0),
            outcome=outcome, trace_id=record.action_id)
        self.episodes_log.append(trace)
        return trace

    def record_health(self, record: ActionExecutionRecord, outcome: ExecStatus, **extra) -> HealthStatus:
        health = self.model.record_outcome(record.name, outcome, self.tick)
        desc = self.model.lookup(record.name)
        payload = {"name": desc.name, "version": desc.version, "outcome": outcome.value,
                   "health": health.value, "window": [o.value for o in desc.outcome_window],
                   "action_id": record.action_id}
        payload.update(extra)
        self.emit("Health", payload)
        return health

    # -- the cycle --------------------------------------------------------
    def step(self, percepts: Percepts) -> list:
        self.outbox = []
        self.beliefs = update_beliefs(self.beliefs, percepts, self.functional)
        clock = self.beliefs.fluent(CLOCK)
        if clock is not None:
            self.tick = int(clock)
        self._monitor(percepts)
        if self.reconfigurator is not None:
            self.reconfigurator.poll(self, percepts)
        for index in range(len(self.goals)):
            if self.safety_violation is not None:
                break
            self._service(index)
        return list(self.outbox)

    def _monitor(self, percepts: Percepts) -> None:
        changes = monitor_records(self.records, self.beliefs, self.tick, percepts)
        for aid, _, _, verdict in changes:
            self.emit("Verdict", verdict_payload(aid, verdict))
        for aid, old, new, verdict in changes:
            if new.status is ExecStatus.ABORTED:
                it = self.intention_for(aid)
                if it is not None:
                    it.active_action = None
                    self.fail_goal(it.goal_index, f"action {aid} aborted")
            elif new.status is ExecStatus.ABORTING and old.status is ExecStatus.ACTIVE:
                self.send_halt(aid)
            elif new.status is ExecStatus.SUCCEEDED:
                self._on_success(new)
            elif new.status is ExecStatus.FAILED:
                self._on_failure(new, verdict)

    def _on_success(self, rec: ActionExecutionRecord) -> None:
        self.record_health(rec, ExecStatus.SUCCEEDED)
        self.execution_trace(rec, ExecStatus.SUCCEEDED)
        it = self.intention_for(rec.action_id)
        if it is not None:
            it.active_action = None
            it.pc += 1
            it.status = ExecStatus.ACTIVE

    def _on_failure(self, rec: ActionExecutionRecord, verdict: MonitorVerdict) -> None:
        self.failures.append((self.tick, rec.action_id, verdict.reason.value))
        it = self.intention_for(rec.action_id)
        if it is None:
            return
        it.active_action = None
        it.status = ExecStatus.PENDING
        if self.reconfigurator is None:
            self.record_health(rec, ExecStatus.FAILED)
            self.execution_trace(rec, ExecStatus.FAILED)
            self.fail_goal(it.goal_index, f"{rec.name} failed: {verdict.reason.value}")
            return
        self.reconfigurator.on_failure(self, it, rec, verdict)

    def _service(self, index: int) -> None:
        entry = self.goals[index]
        if is_terminal(entry.status):
            return
        it = self.intentions.get(index)
        if it is None:
            try:
                inst = select_plan(entry.goal, self.beliefs, self.library)
            except NoApplicablePlan as exc:
                self.fail_goal(index, str(exc))
                return
            it = Intention(index, inst, list(inst.body))
            self.intentions[index] = it
            entry.status = ExecStatus.ACTIVE
        # belief steps take no time, so run them until an action, subgoal or plan end
        while it.status is ExecStatus.ACTIVE and self._execute(it):
            pass

    def _execute(self, it: Intention) -> bool:
        """Run the next step; True when another step may follow in this cycle."""
        if it.pc >= len(it.body):
            it.status = ExecStatus.SUCCEEDED
            entry = self.goals[it.goal_index]
            entry.status = ExecStatus.SUCCEEDED
            if entry.parent is not None:
                parent = self.intentions.get(entry.parent)
                if parent is not None and parent.waiting_on == it.goal_index:
                    parent.waiting_on = None
                    parent.pc += 1
                    parent.status = ExecStatus.ACTIVE
            return False
        step = it.body[it.pc]
        if isinstance(step, AddBelief):
            self.beliefs = self.beliefs.apply(adds=[step.literal])
            it.pc += 1
            return True
        elif isinstance(step, DropBelief):
            self.beliefs = self.beliefs.apply(deletes=[step.literal])
            it.pc += 1
            return True
        elif isinstance(step, SubGoal):
            it.waiting_on = self.adopt(step.goal, parent=it.goal_index)
            it.status = ExecStatus.PENDING
        else:
            self._dispatch(it, step)
        return False

    def _dispatch(self, it: Intention, step: Act) -> None:
        try:
            desc = self.model.lookup(step.name)
        except UnknownAction as exc:
            self.fail_goal(it.goal_index, str(exc))
            return
        ground = desc.ground(step.args)
        if desc.health is HealthStatus.DEPRECATED or not ground.applicable(self.beliefs):
            why = "deprecated" if desc.health is HealthStatus.DEPRECATED else "preconditions do not hold"
            if self.reconfigurator is None:
                self.fail_goal(it.goal_index, f"{step.name}: {why}")
                return
            it.status = ExecStatus.PENDING
            self.reconfigurator.on_dispatch_problem(self, it, why)
            return
        self.counter += 1
        aid = f"a{self.counter}"
        rec = ActionExecutionRecord(
            action_id=aid, name=desc.name, args=ground.args, start_tick=self.tick,
            expected_adds=ground.adds, expected_deletes=ground.deletes, d_max=desc.d_max, e_max=desc.e_max,
            energy_at_start=self.beliefs.fluent(ENERGY, 0), version=desc.version)
        self.records[aid] = rec
        self.pre_states[aid] = self.beliefs
        it.active_action = aid
        it.status = ExecStatus.SUSPENDED
        self.outbox.append(ActionCommand(aid, desc.name, ground.args, self.tick))
        self.emit("Command", command_payload(rec, it.reattempt))
        it.reattempt = False

    # -- plan surgery used by reconfiguration -----------------------------
    def remaining_plan(self, it: Intention, model: Optional[SelfModel] = None) -> list:
        model = model or self.model
        out = []
        for step in it.body[it.pc:]:
            if isinstance(step, Act):
                out.append(model.lookup(step.name).ground(step.args))
        return out

    def splice(self, it: Intention, subplan) -> None:
        acts = [Act(s.name, tuple(s.args)) for s in subplan]
        it.body = it.body[:it.pc] + acts + it.body[it.pc + 1:]
        it.status = ExecStatus.ACTIVE


def deliberate(agent: Agent, percepts: Percepts) -> tuple:
    """Pure form of one cycle: returns (new_agent, commands) and leaves `agent` untouched."""
    nxt = copy.deepcopy(agent)
    commands = nxt.step(percepts)
    return nxt, commands
