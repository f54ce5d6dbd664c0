"""Execution and health life-cycles as explicit transition tables.

Execution status tracks one running action (or the goal that waits on it);
health status tracks an action description across many executions.
"""
from __future__ import annotations

import enum

from .errors import IllegalTransition


class ExecStatus(enum.Enum):
    PENDING = "Pending"
    ACTIVE = "Active"
    SUSPENDED = "Suspended"
    ABORTING = "Aborting"
    ABORTED = "Aborted"
    SUCCEEDED = "Succeeded"
    FAILED = "Failed"


class ExecEvent(enum.Enum):
    START = "Start"
    SUCCESS_OBSERVED = "SuccessObserved"
    FAILURE_OBSERVED = "FailureObserved"
    SUSPEND_REQUEST = "SuspendRequest"
    RESUME_REQUEST = "ResumeRequest"
    ABORT_REQUEST = "AbortRequest"
    ABORT_COMPLETE = "AbortComplete"


class HealthStatus(enum.Enum):
    FUNCTIONAL = "Functional"
    SUSPECT = "Suspect"
    DEPRECATED = "Deprecated"


class HealthEvent(enum.Enum):
    PERSISTENT_FAILURE = "PersistentFailure"
    REPEATED_FAILURE = "RepeatedFailure"
    RECOVERY_OBSERVED = "RecoveryObserved"


TERMINAL = frozenset({ExecStatus.ABORTED, ExecStatus.SUCCEEDED, ExecStatus.FAILED})

EXEC_TRANSITIONS = {
    (ExecStatus.PENDING, ExecEvent.START): ExecStatus.ACTIVE,
    (ExecStatus.ACTIVE, ExecEvent.SUCCESS_OBSERVED): ExecStatus.SUCCEEDED,
    (ExecStatus.ACTIVE, ExecEvent.FAILURE_OBSERVED): ExecStatus.FAILED,
    (ExecStatus.ACTIVE, ExecEvent.SUSPEND_REQUEST): ExecStatus.SUSPENDED,
    (ExecStatus.SUSPENDED, ExecEvent.RESUME_REQUEST): ExecStatus.ACTIVE,
    (ExecStatus.ACTIVE, ExecEvent.ABORT_REQUEST): ExecStatus.ABORTING,
    (ExecStatus.SUSPENDED, ExecEvent.ABORT_REQUEST): ExecStatus.ABORTING,
    (ExecStatus.ABORTING, ExecEvent.ABORT_COMPLETE): ExecStatus.ABORTED,
}

HEALTH_TRANSITIONS = {
    (HealthStatus.FUNCTIONAL, HealthEvent.PERSISTENT_FAILURE): HealthStatus.SUSPECT,
    (HealthStatus.SUSPECT, HealthEvent.REPEATED_FAILURE): HealthStatus.DEPRECATED,
    (HealthStatus.SUSPECT, HealthEvent.RECOVERY_OBSERVED): HealthStatus.FUNCTIONAL,
}


def step_exec(status: ExecStatus, event: ExecEvent) -> ExecStatus:
    try:
        return EXEC_TRANSITIONS[(status, event)]
    except KeyError:
        raise IllegalTransition(status, event) from None


def step_health(health: HealthStatus, event: HealthEvent) -> HealthStatus:
    try:
        return HEALTH_TRANSITIONS[(health, event)]
    except KeyError:
        raise IllegalTransition(health, event) from None


def is_terminal(status: ExecStatus) -> bool:
    return status in TERMINAL
