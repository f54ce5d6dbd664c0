"""Orchestration: run a scenario through agent and simulator, write trace and report, replay traces."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

from .adaptation import Reconfigurator
from .bdi_core import FUNCTIONAL_PREDICATES, Agent, TraceRecord, load_plan_library, monitor_records, \
    update_beliefs, verdict_payload
from .errors import AdaptiveBDIError
from .learner import write_traces
from .lifecycle import ExecStatus
from .logic import CLOCK, Condition, NumericConstraint, State, as_number, json_number
from .messages import HALT, Percepts
from .monitor import ActionExecutionRecord
from .pddl_io import load_domain_file, parse_condition_item
from .planner import NO_NEGATIVE_ENERGY, SafetyProperty
from .sim_env import initial_percepts, load_scenario, tick

ACHIEVED = "Achieved"
FAILED = "Failed"
SAFETY_VIOLATION = "SafetyViolation"
EXIT_CODES = {ACHIEVED: 0, FAILED: 1, SAFETY_VIOLATION: 3}
EXIT_INVALID = 2
DEFAULT_TICK_LIMIT = 10_000


class InputError(AdaptiveBDIError):
    """Input files that cannot be read or parsed."""


@dataclass
class RunReport:
    mission_outcome: str
    ticks_elapsed: int
    energy_used: object
    failures_detected: list = field(default_factory=list)
    repairs: list = field(default_factory=list)
    learned: list = field(default_factory=list)
    final_health: dict = field(default_factory=dict)
    diagnostic: str = ""

    def to_dict(self) -> dict:
        return {
            "mission_outcome": self.mission_outcome,
            "ticks_elapsed": self.ticks_elapsed,
            "energy_used": json_number(self.energy_used),
            "failures_detected": [{"tick": t, "action_id": a, "reason": r} for t, a, r in self.failures_detected],
            "repairs": [{"tick": t, "result": r} for t, r in self.repairs],
            "learned": [{"name": n, "version": v} for n, v in self.learned],
            "final_health": dict(sorted(self.final_health.items())),
            "diagnostic": self.diagnostic,
        }


@dataclass
class RunResult:
    exit_code: int
    report: RunReport
    trace: list
    episodes: list


def load_safety(path: Union[str, Path, None]) -> SafetyProperty:
    """Safety file: {"forbidden": [[condition, ...], ...]}; each inner list is one conjunction."""
    if path is None:
        return NO_NEGATIVE_ENERGY
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    conjuncts = []
    for conj in data.get("forbidden", []):
        lits, cons = set(), set()
        for item in conj:
            parsed = parse_condition_item(item)
            (cons if isinstance(parsed, NumericConstraint) else lits).add(parsed)
        conjuncts.append(Condition(frozenset(lits), frozenset(cons)))
    return SafetyProperty(tuple(conjuncts))


def _load_inputs(domain_path, plans_path, scenario_path, safety_path):
    try:
        _, model = load_domain_file(domain_path)
        library = load_plan_library(plans_path)
        scenario = load_scenario(scenario_path)
        safety = load_safety(safety_path)
    except (OSError, ValueError, KeyError, TypeError, AdaptiveBDIError) as exc:
        raise InputError(f"{type(exc).__name__}: {exc}") from exc
    if not scenario.goals:
        raise InputError("scenario declares no goal")
    return model, library, scenario, safety


def run_scenario(domain_path, plans_path, scenario_path, *, tick_limit: int = DEFAULT_TICK_LIMIT,
                 learning: bool = True, safety_path=None, trace_out=None, report_out=None,
                 episodes_out=None) -> RunResult:
    model, library, scenario, safety = _load_inputs(domain_path, plans_path, scenario_path, safety_path)
    world = scenario.world
    recon = Reconfigurator(budget=scenario.budget, learning=learning, safety=safety)
    agent = Agent(model, library, objects=scenario.objects, reconfigurator=recon)
    start_energy = world.energy
    percepts = initial_percepts(world)
    queue = list(scenario.goals)
    current = agent.adopt(queue.pop(0))
    outcome, diagnostic = None, ""
    while outcome is None:
        agent.tick = int(dict(percepts.fluents).get(CLOCK, agent.tick))
        agent.emit("Percept", percepts.to_dict())
        commands = agent.step(percepts)
        goal = agent.goals[current]
        if agent.safety_violation is not None:
            outcome, diagnostic = SAFETY_VIOLATION, "patched plan violates the safety property"
        elif goal.status is ExecStatus.FAILED:
            outcome, diagnostic = FAILED, goal.diagnostic
        elif goal.status is ExecStatus.SUCCEEDED:
            if queue:
                current = agent.adopt(queue.pop(0))
            else:
                outcome = ACHIEVED
        if outcome is None and world.energy < 0:
            outcome, diagnostic = FAILED, "energy exhausted"
        if outcome is None and world.clock >= tick_limit:
            outcome, diagnostic = FAILED, f"tick limit {tick_limit} reached"
        if outcome is None:
            world, percepts, _ = tick(world, commands)
    report = RunReport(
        mission_outcome=outcome, ticks_elapsed=world.clock, energy_used=start_energy - world.energy,
        failures_detected=list(agent.failures), repairs=list(recon.repairs), learned=list(recon.learned),
        final_health={name: d.health.value for name, d in agent.model.actions.items()}, diagnostic=diagnostic)
    if trace_out is not None:
        write_trace(trace_out, agent.trace)
    if report_out is not None:
        Path(report_out).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if episodes_out is not None:
        write_traces(episodes_out, agent.episodes_log)
    return RunResult(EXIT_CODES[outcome], report, list(agent.trace), list(agent.episodes_log))


# ---------------------------------------------------------------------------
# trace files


def trace_lines(records: Iterable[TraceRecord]) -> str:
    return "".join(r.to_json() + "\n" for r in records)


def write_trace(path, records: Iterable[TraceRecord]) -> None:
    Path(path).write_text(trace_lines(records), encoding="utf-8")


def read_trace(path) -> list:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            raw = json.loads(line)
            out.append(TraceRecord(raw["tick"], raw["kind"], raw["payload"]))
    return out


def record_from_command(payload: dict) -> ActionExecutionRecord:
    from .pddl_io import parse_literal

    return ActionExecutionRecord(
        action_id=payload["action_id"], name=payload["name"], args=tuple(payload["args"]),
        start_tick=payload["start_tick"],
        expected_adds=frozenset(parse_literal(t, ground=True) for t in payload["expected_adds"]),
        expected_deletes=frozenset(parse_literal(t, ground=True) for t in payload["expected_deletes"]),
        d_max=as_number(payload["d_max"]), e_max=as_number(payload["e_max"]),
        energy_at_start=as_number(payload["energy_at_start"]), version=payload.get("version", 1))


def replay(records: Iterable[TraceRecord], functional: Iterable[str] = FUNCTIONAL_PREDICATES) -> list:
    """Recompute the Verdict records of a run from its Percept and Command records."""
    beliefs = State.of()
    live: dict = {}
    out = []
    tick_now = 0
    for rec in records:
        if rec.kind == "Percept":
            percepts = Percepts.from_dict(rec.payload)
            beliefs = update_beliefs(beliefs, percepts, functional)
            tick_now = int(beliefs.fluent(CLOCK, rec.tick))
            for aid, _, _, verdict in monitor_records(live, beliefs, tick_now, percepts):
                out.append(TraceRecord(tick_now, "Verdict", verdict_payload(aid, verdict)))
        elif rec.kind == "Command" and rec.payload.get("name") != HALT:
            r = record_from_command(rec.payload)
            live[r.action_id] = r
    return out


def verdict_records(records: Iterable[TraceRecord]) -> list:
    return [r for r in records if r.kind == "Verdict"]
