"""Failure recovery for the agent.

After a Failed verdict the outcome is recorded against the action's health
and the failure is classified.  An anomalous failure is watched for a late
success and otherwise re-attempted.  A persistent failure triggers plan
repair around the action.  A repair that only finds over-budget detours
falls back to learning a replacement description from recovery traces,
which are episodes that achieved their effects after the monitor had given
up on them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import EmptyEffects, InconsistentSchema, InsufficientData, VocabularyViolation
from .learner import commit, propose_on_copy, synthesize_description
from .lifecycle import ExecStatus
from .logic import json_number
from .messages import FINISHED, HALTED
from .monitor import ActionExecutionRecord, FailureClassification, MonitorVerdict, Reason, \
    classify_failure, postconditions_hold
from .planner import (
    MAX_BRANCH_BOUND,
    NO_NEGATIVE_ENERGY,
    Counterexample,
    NeedLearning,
    Patched,
    SafetyProperty,
    check_safety,
    plan_to_json,
    repair_plan,
    validate_plan,
)

WATCH = "watch"  # anomalous failure: wait for a late success, else re-attempt
LEARN = "learn"  # over-budget repair: wait for a recovery trace, then learn
PATCH = "patch"  # repaired: stop the rover, then adopt the patch


@dataclass
class Episode:
    record: ActionExecutionRecord
    goal_index: int
    mode: str
    deadline: int
    halt_sent: bool = False
    patch: Optional[Patched] = None


@dataclass
class Reconfigurator:
    budget: Optional[tuple] = None
    learning: bool = True
    safety: SafetyProperty = NO_NEGATIVE_ENERGY
    watch_factor: int = 2
    cost_weights: tuple = (1, 1)
    episodes: list = field(default_factory=list)
    recovery_traces: dict = field(default_factory=dict)
    repairs: list = field(default_factory=list)  # (tick, result kind)
    learned: list = field(default_factory=list)  # (name, version)

    # -- entry points called by the agent ---------------------------------
    def on_failure(self, agent, it, rec: ActionExecutionRecord, verdict: MonitorVerdict) -> None:
        window_health = agent.model.record_outcome(rec.name, ExecStatus.FAILED, agent.tick)
        desc = agent.model.lookup(rec.name)
        cls = classify_failure(desc.outcome_window, agent.model.policy)
        agent.emit("Health", {"name": desc.name, "version": desc.version, "outcome": "Failed",
                              "health": window_health.value,
                              "window": [o.value for o in desc.outcome_window],
                              "action_id": rec.action_id, "classification": cls.value})
        if cls is FailureClassification.PERSISTENT:
            self._repair(agent, it, rec, exclude={(rec.name, rec.version)})
            return
        if verdict.reason is Reason.CONTRADICTION_OBSERVED:
            # the activity already ended without its effect; nothing to wait for
            agent.execution_trace(rec, ExecStatus.FAILED)
            self._reattempt(it)
            return
        ep = Episode(rec, it.goal_index, WATCH, rec.start_tick + self.watch_factor * int(rec.d_max))
        self.episodes.append(ep)
        if verdict.reason is Reason.ENERGY_THRESHOLD:
            self._halt(agent, ep)

    def on_dispatch_problem(self, agent, it, why: str) -> None:
        self._repair(agent, it, None, exclude=set())

    def poll(self, agent, percepts) -> None:
        halted = percepts.notice_ids(HALTED)
        finished = percepts.notice_ids(FINISHED)
        for ep in list(self.episodes):
            if agent.safety_violation is not None:
                return
            rec = ep.record
            it = agent.intentions[ep.goal_index]
            achieved = postconditions_hold(rec, agent.beliefs)
            stopped = rec.action_id in halted or (rec.action_id in finished and not achieved)
            if ep.mode == PATCH:
                if stopped or achieved:
                    self.episodes.remove(ep)
                    agent.execution_trace(rec, ExecStatus.SUCCEEDED if achieved else ExecStatus.FAILED)
                    self._adopt_patch(agent, it, ep.patch)
                continue
            if achieved:
                self.episodes.remove(ep)
                trace = agent.execution_trace(rec, ExecStatus.SUCCEEDED)
                self.recovery_traces.setdefault(rec.name, []).append(trace)
                if ep.mode == WATCH:
                    it.pc += 1
                    it.status = ExecStatus.ACTIVE
                else:
                    self._learn(agent, it, rec.name)
                continue
            if stopped:
                self.episodes.remove(ep)
                agent.execution_trace(rec, ExecStatus.FAILED)
                if ep.mode == WATCH:
                    self._reattempt(it)
                else:
                    agent.fail_goal(ep.goal_index, f"{rec.name} did not recover; nothing to learn from")
                continue
            if agent.tick >= ep.deadline and not ep.halt_sent:
                self._halt(agent, ep)

    # -- helpers ----------------------------------------------------------
    def _halt(self, agent, ep: Episode) -> None:
        ep.halt_sent = True
        agent.send_halt(ep.record.action_id)

    @staticmethod
    def _reattempt(it) -> None:
        it.status = ExecStatus.ACTIVE
        it.reattempt = True

    def _emit_plan(self, agent, source: str, result, steps) -> None:
        agent.emit("Plan", {"source": source, "result": type(result).__name__,
                            "steps": plan_to_json(steps),
                            "cost": json_number(getattr(result, "cost", 0))})

    def _safe(self, agent, steps, model) -> bool:
        checked = list(steps)[:MAX_BRANCH_BOUND]
        verdict = check_safety(checked, agent.beliefs, model, self.safety, branch_bound=MAX_BRANCH_BOUND)
        payload = {"plan_length": len(steps), "checked": len(checked),
                   "result": type(verdict).__name__}
        if isinstance(verdict, Counterexample):
            payload["counterexample"] = verdict.to_dict()
        agent.emit("Safety", payload)
        if isinstance(verdict, Counterexample):
            agent.safety_violation = verdict
            return False
        return True

    def _repair(self, agent, it, rec: Optional[ActionExecutionRecord], exclude: set) -> None:
        plan = agent.remaining_plan(it)
        result = repair_plan(plan, 0, agent.beliefs, agent.model, self.budget, objects=agent.objects,
                             exclude=exclude, cost_weights=self.cost_weights)
        self.repairs.append((agent.tick, type(result).__name__))
        if isinstance(result, Patched):
            self._emit_plan(agent, "repair", result, result.steps)
            if not self._safe(agent, result.steps, agent.model):
                return
            if rec is None:
                agent.splice(it, result.subplan)
                return
            ep = Episode(rec, it.goal_index, PATCH, agent.tick, patch=result)
            self.episodes.append(ep)
            self._halt(agent, ep)
            return
        if isinstance(result, NeedLearning):
            self._emit_plan(agent, "repair", result, result.subplan)
            if not self.learning:
                self._abandon(agent, it, rec, f"repair needs learning ({result.reason}) but learning is disabled")
                return
            if rec is None:
                self._learn(agent, it, plan[0].name)
                return
            self.episodes.append(Episode(rec, it.goal_index, LEARN,
                                         rec.start_tick + self.watch_factor * int(rec.d_max)))
            return
        self._emit_plan(agent, "repair", result, ())
        self._abandon(agent, it, rec, result.reason)

    def _abandon(self, agent, it, rec, reason: str) -> None:
        if rec is not None:
            agent.send_halt(rec.action_id)
            agent.execution_trace(rec, ExecStatus.FAILED)
        agent.fail_goal(it.goal_index, reason)

    def _adopt_patch(self, agent, it, patch: Patched) -> None:
        ground = list(patch.steps)
        if validate_plan(ground, agent.beliefs).valid:
            agent.splice(it, patch.subplan)
            return
        # the world moved on while stopping; plan again from what is believed now
        self._repair(agent, it, None, exclude=set())

    def _learn(self, agent, it, name: str) -> None:
        traces = self.recovery_traces.get(name, [])
        try:
            learned = synthesize_description(name, traces, agent.model)
            trial = propose_on_copy(agent.model, learned)
        except (InsufficientData, EmptyEffects, InconsistentSchema, VocabularyViolation) as exc:
            agent.emit("Learn", {"name": name, "status": "Rejected", "reason": str(exc)})
            agent.fail_goal(it.goal_index, f"learning {name} failed: {exc}")
            return
        plan = agent.remaining_plan(it, trial)
        result = repair_plan(plan, 0, agent.beliefs, trial, self.budget, objects=agent.objects,
                             cost_weights=self.cost_weights)
        self.repairs.append((agent.tick, type(result).__name__))
        steps = result.steps if isinstance(result, Patched) else getattr(result, "subplan", ())
        self._emit_plan(agent, "learned", result, steps)
        if not isinstance(result, Patched):
            agent.emit("Learn", {"name": name, "status": "Rejected", "reason": type(result).__name__})
            agent.fail_goal(it.goal_index, f"re-planning with learned {name} failed")
            return
        if not self._safe(agent, result.steps, trial):
            return
        desc = learned.description
        commit(agent.model, learned)
        self.learned.append((desc.name, desc.version))
        agent.emit("Learn", {
            "name": desc.name, "version": desc.version, "status": "Committed",
            "support": learned.support, "provenance": list(learned.provenance),
            "duration_bound": [json_number(v) for v in desc.duration_bound],
            "energy_bound": [json_number(v) for v in desc.energy_bound],
            "adds": sorted(str(l) for l in desc.adds), "deletes": sorted(str(l) for l in desc.deletes),
        })
        agent.splice(it, result.subplan)
