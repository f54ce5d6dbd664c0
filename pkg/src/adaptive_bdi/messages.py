"""Immutable messages exchanged between the agent and the environment."""
from __future__ import annotations

from dataclasses import dataclass

from .logic import json_number

FINISHED = "finished"
HALTED = "halted"
HALT = "halt"


@dataclass(frozen=True)
class ActionCommand:
    action_id: str
    name: str
    args: tuple = ()
    issued_tick: int = 0

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def is_halt(self) -> bool:
        return self.name == HALT


@dataclass(frozen=True)
class Notice:
    kind: str  # finished | halted
    action_id: str


@dataclass(frozen=True)
class Percepts:
    """Changed literals (negative ones retract beliefs), fluent readings and notices."""

    literals: tuple = ()
    fluents: tuple = ()  # ((name, value), ...)
    notices: tuple = ()
    abort_requests: tuple = ()

    @property
    def fluent_map(self) -> dict:
        return dict(self.fluents)

    def notice_ids(self, kind: str) -> set:
        return {n.action_id for n in self.notices if n.kind == kind}

    def to_dict(self) -> dict:
        return {
            "literals": [str(l) for l in self.literals],
            "fluents": {k: json_number(v) for k, v in self.fluents},
            "notices": [{"kind": n.kind, "action_id": n.action_id} for n in self.notices],
            "abort_requests": list(self.abort_requests),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Percepts":
        from .logic import as_number
        from .pddl_io import parse_literal

        return cls(
            literals=tuple(parse_literal(t, ground=True) for t in data.get("literals", [])),
            fluents=tuple(sorted((k, as_number(v)) for k, v in data.get("fluents", {}).items())),
            notices=tuple(Notice(n["kind"], n["action_id"]) for n in data.get("notices", [])),
            abort_requests=tuple(data.get("abort_requests", [])),
        )
