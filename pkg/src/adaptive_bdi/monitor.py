"""Per-tick surveillance of executing durative actions.

A record is checked once per deliberation cycle.  Postconditions of a
durative action cannot hold mid-execution, so comparing actual against
expected postconditions is realised as a priority-ordered set of checks:
abort request, threshold breach, observed contradiction, achieved
postconditions, and otherwise still running.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Optional

from .errors import EmptyWindow
from .lifecycle import ExecEvent, ExecStatus, step_exec
from .logic import ENERGY, State, json_number
from .self_model import DEFAULT_POLICY, HealthPolicy


class Reason(enum.Enum):
    POSTCONDITIONS_ACHIEVED = "PostconditionsAchieved"
    TIME_THRESHOLD = "TimeThreshold"
    ENERGY_THRESHOLD = "EnergyThreshold"
    CONTRADICTION_OBSERVED = "ContradictionObserved"
    ABORT_REQUESTED = "AbortRequested"


class FailureClassification(enum.Enum):
    ANOMALOUS = "Anomalous"
    PERSISTENT = "Persistent"


@dataclass(frozen=True)
class ActionExecutionRecord:
    action_id: str
    name: str
    args: tuple
    start_tick: int
    expected_adds: frozenset
    expected_deletes: frozenset
    d_max: Fraction
    e_max: Fraction
    energy_at_start: Fraction
    version: int = 1
    status: ExecStatus = ExecStatus.ACTIVE
    abort_requested: bool = False
    reason: Optional[Reason] = None  # last verdict reason once terminal
    contradiction: bool = False  # environment finished the activity without the expected effect

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(self, "expected_adds", frozenset(self.expected_adds))
        object.__setattr__(self, "expected_deletes", frozenset(self.expected_deletes))

    def transition(self, event: ExecEvent, reason: Optional[Reason] = None) -> "ActionExecutionRecord":
        return replace(self, status=step_exec(self.status, event), reason=reason)

    def to_dict(self) -> dict:
        return {
            "action_id": self.action_id,
            "name": self.name,
            "version": self.version,
            "args": list(self.args),
            "start_tick": self.start_tick,
            "expected_adds": sorted(str(l) for l in self.expected_adds),
            "expected_deletes": sorted(str(l) for l in self.expected_deletes),
            "d_max": json_number(self.d_max),
            "e_max": json_number(self.e_max),
            "energy_at_start": json_number(self.energy_at_start),
        }


@dataclass(frozen=True)
class MonitorVerdict:
    status: ExecStatus
    reason: Optional[Reason] = None

    def __post_init__(self):
        running = self.status in (ExecStatus.PENDING, ExecStatus.ACTIVE, ExecStatus.SUSPENDED)
        if running != (self.reason is None):
            raise ValueError(f"verdict {self.status.value} inconsistent with reason {self.reason}")


def postconditions_hold(record: ActionExecutionRecord, observed: State) -> bool:
    return all(a in observed.literals for a in record.expected_adds) and not any(
        d in observed.literals for d in record.expected_deletes)


def threshold_breach(record: ActionExecutionRecord, observed: State, tick: int) -> Optional[Reason]:
    if tick - record.start_tick > record.d_max:
        return Reason.TIME_THRESHOLD
    energy = observed.fluent(ENERGY)
    if energy is not None and record.energy_at_start - energy > record.e_max:
        return Reason.ENERGY_THRESHOLD
    return None


def monitor(record: ActionExecutionRecord, observed: State, tick: int) -> MonitorVerdict:
    """Evaluate one execution record against the current snapshot."""
    if record.status is not ExecStatus.ACTIVE:
        if record.status is ExecStatus.ABORTING:
            return MonitorVerdict(record.status, Reason.ABORT_REQUESTED)
        if record.status in (ExecStatus.PENDING, ExecStatus.SUSPENDED):
            return MonitorVerdict(record.status)
        return MonitorVerdict(record.status, record.reason or _terminal_default(record.status))
    if record.abort_requested:
        return MonitorVerdict(ExecStatus.ABORTING, Reason.ABORT_REQUESTED)
    breach = threshold_breach(record, observed, tick)
    if breach is not None:
        return MonitorVerdict(ExecStatus.FAILED, breach)
    achieved = postconditions_hold(record, observed)
    if record.contradiction and not achieved:
        return MonitorVerdict(ExecStatus.FAILED, Reason.CONTRADICTION_OBSERVED)
    if achieved:
        return MonitorVerdict(ExecStatus.SUCCEEDED, Reason.POSTCONDITIONS_ACHIEVED)
    return MonitorVerdict(ExecStatus.ACTIVE)


def _terminal_default(status: ExecStatus) -> Reason:
    return {
        ExecStatus.SUCCEEDED: Reason.POSTCONDITIONS_ACHIEVED,
        ExecStatus.ABORTED: Reason.ABORT_REQUESTED,
        ExecStatus.FAILED: Reason.CONTRADICTION_OBSERVED,
    }[status]


def apply_verdict(record: ActionExecutionRecord, verdict: MonitorVerdict) -> ActionExecutionRecord:
    """Advance the record's status through the execution life-cycle to match `verdict`."""
    if verdict.status is record.status:
        return record
    event = {
        ExecStatus.SUCCEEDED: ExecEvent.SUCCESS_OBSERVED,
        ExecStatus.FAILED: ExecEvent.FAILURE_OBSERVED,
        ExecStatus.ABORTING: ExecEvent.ABORT_REQUEST,
        ExecStatus.ABORTED: ExecEvent.ABORT_COMPLETE,
    }[verdict.status]
    return record.transition(event, verdict.reason)


def classify_failure(window: Iterable[ExecStatus], policy: HealthPolicy = DEFAULT_POLICY) -> FailureClassification:
    window = list(window)
    if not window:
        raise EmptyWindow("cannot classify a failure without an outcome window")
    if policy.failures(window[-policy.window:]) < policy.suspect_threshold:
        return FailureClassification.ANOMALOUS
    return FailureClassification.PERSISTENT

