"""Deterministic discrete-time Mars-rover world with scheduled fault injection.

One call to `tick` processes the incoming commands, activates due faults,
advances the running activity by one tick and increments the clock.  A
blocked edge stalls the rover while its energy keeps draining; a halted
move reverses toward its origin at one tick per step.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

from .errors import CommandWhileBusy, InvalidCommand, UnknownEdge
from .logic import CLOCK, ENERGY, Literal, State, as_number, format_number
from .messages import FINISHED, HALTED, ActionCommand, Notice, Percepts

ROVER = "rover"
COLLECT_TICKS = 2
ANALYSE_TICKS = 3
ACTIVITY_RATE = Fraction(1)


def edge_key(a: str, b: str) -> frozenset:
    return frozenset((a, b))


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    length: int
    energy: Fraction = Fraction(1)  # drained per tick while traversing


@dataclass(frozen=True)
class BlockEdge:
    a: str
    b: str
    until_tick: Optional[int] = None  # None = permanent


@dataclass(frozen=True)
class DegradeEdge:
    a: str
    b: str
    factor: Fraction

    def __post_init__(self):
        object.__setattr__(self, "factor", as_number(self.factor))
        if self.factor < 1:
            raise ValueError("degradation factor must be at least 1")


@dataclass(frozen=True)
class Fault:
    kind: Union[BlockEdge, DegradeEdge]
    at_tick: int


@dataclass(frozen=True)
class InTransit:
    origin: str
    dest: str
    progress: int
    length: int


@dataclass(frozen=True)
class Activity:
    action_id: str
    kind: str  # move | collect | analyse
    args: tuple
    remaining: int = 0  # ticks left for collect/analyse
    halting: bool = False


@dataclass(frozen=True)
class WorldModel:
    waypoints: tuple
    edges: tuple
    rover_at: Union[str, InTransit]
    samples: tuple = ()  # ((sample, waypoint), ...) still on the ground
    sample_names: tuple = ()
    carried: frozenset = frozenset()
    analysed: frozenset = frozenset()
    energy: Fraction = Fraction(100)
    clock: int = 0
    scheduled: tuple = ()  # Faults not yet active
    blocked: tuple = ()  # ((edge_key, until_tick or None), ...)
    activity: Optional[Activity] = None
    abort_schedule: tuple = ()  # ticks at which an external abort is requested

    def edge(self, a: str, b: str) -> Edge:
        for e in self.edges:
            if edge_key(e.a, e.b) == edge_key(a, b):
                return e
        raise UnknownEdge(f"no edge between {a} and {b}")

    def has_edge(self, a: str, b: str) -> bool:
        return any(edge_key(e.a, e.b) == edge_key(a, b) for e in self.edges)

    def is_blocked(self, a: str, b: str) -> bool:
        return any(k == edge_key(a, b) for k, _ in self.blocked)

    @property
    def sample_locations(self) -> dict:
        return dict(self.samples)


def make_world(waypoints, edges, rover_start, samples=None, energy=100) -> WorldModel:
    wps = tuple(sorted(waypoints))
    es = []
    for e in edges:
        if isinstance(e, Edge):
            es.append(e)
        else:
            es.append(Edge(e["a"], e["b"], int(e["length"]), as_number(e.get("energy", 1))))
    for e in es:
        if e.a not in wps or e.b not in wps or e.a == e.b:
            raise ValueError(f"edge {e.a}-{e.b} references unknown waypoints")
        if e.length < 1:
            raise ValueError(f"edge {e.a}-{e.b} must have positive length")
    if rover_start not in wps:
        raise ValueError(f"rover start {rover_start!r} is not a waypoint")
    samples = dict(samples or {})
    for s, w in samples.items():
        if w not in wps:
            raise ValueError(f"sample {s} placed at unknown waypoint {w}")
    return WorldModel(wps, tuple(sorted(es, key=lambda e: (e.a, e.b))), rover_start,
                      tuple(sorted(samples.items())), tuple(sorted(samples)), energy=as_number(energy))


def inject_fault(world: WorldModel, fault: Fault) -> WorldModel:
    k = fault.kind
    if not world.has_edge(k.a, k.b):
        raise UnknownEdge(f"no edge between {k.a} and {k.b}")
    if fault.at_tick < world.clock:
        raise ValueError(f"fault scheduled in the past (tick {fault.at_tick} < {world.clock})")
    if fault in world.scheduled:
        return world
    return replace(world, scheduled=world.scheduled + (fault,))


# ---------------------------------------------------------------------------
# command catalogue


def command_catalogue(world: WorldModel) -> dict:
    """Zero-argument aliases understood by the environment, mapped to (kind, args)."""
    cat = {}
    for e in world.edges:
        cat[f"move_{e.a}_{e.b}"] = ("move", (e.a, e.b))
        cat[f"move_{e.b}_{e.a}"] = ("move", (e.b, e.a))
    for s, w in world.samples:
        cat[f"collect_{s}"] = ("collect", (s, w))
    for s in world.sample_names:
        cat[f"analyse_{s}"] = ("analyse", (s,))
    return cat


def resolve_command(world: WorldModel, name: str, args: tuple) -> tuple:
    if not args:
        cat = command_catalogue(world)
        if name in cat:
            return cat[name]
    if name == "move" and len(args) == 2:
        a, b = args
        if a in world.waypoints and b in world.waypoints and world.has_edge(a, b):
            return ("move", (a, b))
    if name == "collect" and len(args) in (1, 2) and args[0] in world.sample_names:
        if len(args) == 1 or args[1] in world.waypoints:
            return ("collect", tuple(args))
    if name == "analyse" and len(args) == 1 and args[0] in world.sample_names:
        return ("analyse", tuple(args))
    raise InvalidCommand(f"unknown command {name}({', '.join(args)})")


# ---------------------------------------------------------------------------
# simulation


def at_literal(w: str) -> Literal:
    return Literal("at", (ROVER, w))


def snapshot(world: WorldModel) -> State:
    lits = set()
    if isinstance(world.rover_at, str):
        lits.add(at_literal(world.rover_at))
    for s in world.carried:
        lits.add(Literal("have_sample", (s,)))
    for s in world.analysed:
        lits.add(Literal("analysed", (s,)))
    for s, w in world.samples:
        lits.add(Literal("sample_at", (s, w)))
    return State.of(lits, {ENERGY: world.energy, CLOCK: world.clock})


def initial_percepts(world: WorldModel) -> Percepts:
    snap = snapshot(world)
    return Percepts(tuple(snap.sorted_literals()), snap.fluent_items)


def _activate_faults(world: WorldModel, events: list) -> WorldModel:
    blocked = [(k, u) for k, u in world.blocked if u is None or world.clock < u]
    for k, u in world.blocked:
        if (k, u) not in blocked:
            events.append({"event": "unblocked", "edge": sorted(k), "tick": world.clock})
    edges = list(world.edges)
    rover = world.rover_at
    pending = []
    for fault in world.scheduled:
        if fault.at_tick > world.clock:
            pending.append(fault)
            continue
        k = fault.kind
        key = edge_key(k.a, k.b)
        if isinstance(k, BlockEdge):
            if not any(bk == key for bk, _ in blocked):
                blocked.append((key, k.until_tick))
            events.append({"event": "blocked", "edge": sorted(key), "tick": world.clock})
        else:
            for i, e in enumerate(edges):
                if edge_key(e.a, e.b) == key:
                    edges[i] = replace(e, length=math.ceil(e.length * k.factor))
            if isinstance(rover, InTransit) and edge_key(rover.origin, rover.dest) == key:
                remaining = math.ceil((rover.length - rover.progress) * k.factor)
                rover = replace(rover, length=rover.progress + remaining)
            events.append({"event": "degraded", "edge": sorted(key), "factor": format_number(k.factor),
                           "tick": world.clock})
    return replace(world, blocked=tuple(blocked), edges=tuple(edges), rover_at=rover, scheduled=tuple(pending))


def _start(world: WorldModel, cmd: ActionCommand, notices: list) -> WorldModel:
    kind, args = resolve_command(world, cmd.name, cmd.args)
    if kind == "move":
        a, b = args
        if world.rover_at != a:
            notices.append(Notice(FINISHED, cmd.action_id))
            return world
        e = world.edge(a, b)
        return replace(world, rover_at=InTransit(a, b, 0, e.length), activity=Activity(cmd.action_id, kind, args))
    ticks = COLLECT_TICKS if kind == "collect" else ANALYSE_TICKS
    return replace(world, activity=Activity(cmd.action_id, kind, args, remaining=ticks))


def _advance(world: WorldModel, literals: list, notices: list) -> WorldModel:
    act = world.activity
    if act is None:
        return world
    if act.kind == "move":
        rover = world.rover_at
        rate = world.edge(rover.origin, rover.dest).energy
        energy = world.energy - rate
        if act.halting:
            progress = rover.progress - 1
            if progress <= 0:
                literals.append(at_literal(rover.origin))
                notices.append(Notice(HALTED, act.action_id))
                return replace(world, rover_at=rover.origin, activity=None, energy=energy)
            return replace(world, rover_at=replace(rover, progress=progress), energy=energy)
        if world.is_blocked(rover.origin, rover.dest):
            return replace(world, energy=energy)
        progress = rover.progress + 1
        if progress >= rover.length:
            literals.append(at_literal(rover.dest))
            notices.append(Notice(FINISHED, act.action_id))
            return replace(world, rover_at=rover.dest, activity=None, energy=energy)
        return replace(world, rover_at=replace(rover, progress=progress), energy=energy)
    energy = world.energy - ACTIVITY_RATE
    remaining = act.remaining - 1
    if remaining > 0:
        return replace(world, activity=replace(act, remaining=remaining), energy=energy)
    world = replace(world, activity=None, energy=energy)
    notices.append(Notice(FINISHED, act.action_id))
    if act.kind == "collect":
        s = act.args[0]
        here = world.sample_locations.get(s)
        w = act.args[1] if len(act.args) > 1 else here
        if here is not None and here == w and world.rover_at == w:
            literals.extend([Literal("have_sample", (s,)), Literal("sample_at", (s, w), positive=False)])
            samples = tuple((k, v) for k, v in world.samples if k != s)
            return replace(world, samples=samples, carried=world.carried | {s})
        return world
    s = act.args[0]
    if s in world.carried and s not in world.analysed:
        literals.append(Literal("analysed", (s,)))
        return replace(world, analysed=world.analysed | {s})
    return world


def tick(world: WorldModel, commands=()) -> tuple:
    """Advance one tick; returns (world, percepts, events)."""
    literals: list = []
    notices: list = []
    events: list = []
    for cmd in commands:
        if cmd.is_halt:
            target = cmd.args[0] if cmd.args else None
            act = world.activity
            if act is None or act.action_id != target:
                notices.append(Notice(HALTED, target))
                continue
            if act.kind == "move" and world.rover_at.progress > 0:
                world = replace(world, activity=replace(act, halting=True))
            else:
                origin = world.rover_at.origin if act.kind == "move" else None
                world = replace(world, activity=None,
                                rover_at=origin if origin is not None else world.rover_at)
                if origin is not None:
                    literals.append(at_literal(origin))
                notices.append(Notice(HALTED, target))
            continue
        if world.activity is not None:
            raise CommandWhileBusy(f"command {cmd.name} issued while {world.activity.action_id} is running")
        world = _start(world, cmd, notices)
    world = _activate_faults(world, events)
    world = _advance(world, literals, notices)
    aborts = ()
    if world.clock in world.abort_schedule and world.activity is not None:
        aborts = (world.activity.action_id,)
    world = replace(world, clock=world.clock + 1)
    percepts = Percepts(tuple(literals), ((CLOCK, Fraction(world.clock)), (ENERGY, world.energy)),
                        tuple(notices), aborts)
    return world, percepts, events


# ---------------------------------------------------------------------------
# scenario files


@dataclass(frozen=True)
class Scenario:
    world: WorldModel
    goals: tuple
    budget: Optional[tuple] = None
    seed: int = 0

    @property
    def objects(self) -> dict:
        return objects(self.world)


def objects(world: WorldModel) -> dict:
    out = {w: "waypoint" for w in world.waypoints}
    out.update({s: "sample" for s in world.sample_names})
    return out


def _fault(raw: dict) -> Fault:
    kind = raw["kind"]
    args = raw.get("args", [])
    if kind == "BlockEdge":
        a, b = args
        return Fault(BlockEdge(a, b, raw.get("until_tick")), int(raw.get("at_tick", 0)))
    if kind == "DegradeEdge":
        a, b, factor = args
        return Fault(DegradeEdge(a, b, as_number(factor)), int(raw.get("at_tick", 0)))
    raise ValueError(f"unknown fault kind {kind!r}")


def parse_scenario(data: dict) -> Scenario:
    from .pddl_io import parse_literal

    try:
        world = make_world(data["waypoints"], data["edges"], data["rover_start"], data.get("samples"),
                           data.get("energy", 100))
        for raw in data.get("faults", []):
            world = inject_fault(world, _fault(raw))
        world = replace(world, abort_schedule=tuple(int(t) for t in data.get("abort_at", [])))
        goal = data.get("goal", [])
        if isinstance(goal, str):
            goal = [goal]
        goals = tuple(parse_literal(g, ground=True) for g in goal)
        budgets = data.get("budgets")
        budget = None
        if budgets:
            tb, eb = budgets.get("time"), budgets.get("energy")
            budget = (None if tb is None else as_number(tb), None if eb is None else as_number(eb))
        return Scenario(world, goals, budget, int(data.get("seed", 0)))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed scenario: {exc!r}") from None


def load_scenario(path: Union[str, Path]) -> Scenario:
    return parse_scenario(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# matching self-model


def rover_domain_text(world: WorldModel, name: str = "rover") -> str:
    """PDDL domain whose per-route moves and sampling actions match `world`."""
    lines = [
        f"(define (domain {name})",
        "  (:requirements :strips :typing :fluents :durative-actions)",
        "  (:types rover waypoint sample)",
        f"  (:constants {ROVER} - rover {' '.join(world.waypoints)} - waypoint)",
        "  (:predicates",
        "    (at ?r - rover ?w - waypoint)",
        "    (sample_at ?s - sample ?w - waypoint)",
        "    (have_sample ?s - sample)",
        "    (analysed ?s - sample))",
        "  (:functions (energy))",
    ]
    for e in world.edges:
        for a, b in ((e.a, e.b), (e.b, e.a)):
            cost = e.length * e.energy
            lines += [
                f"  (:durative-action move_{a}_{b}",
                "    :parameters ()",
                f"    :duration (= ?duration {e.length})",
                f"    (:duration-bound {e.length} {e.length + 1})",
                f"    (:energy-bound {format_number(cost)} {format_number(cost + 1)})",
                f"    :condition (and (at start (at {ROVER} {a})))",
                f"    :effect (and (at end (not (at {ROVER} {a}))) (at end (at {ROVER} {b}))",
                f"                 (at end (decrease (energy) {format_number(cost)}))))",
            ]
    c = COLLECT_TICKS * ACTIVITY_RATE
    an = ANALYSE_TICKS * ACTIVITY_RATE
    lines += [
        "  (:durative-action collect",
        "    :parameters (?s - sample ?w - waypoint)",
        f"    :duration (= ?duration {COLLECT_TICKS})",
        f"    (:duration-bound {COLLECT_TICKS} {COLLECT_TICKS + 1})",
        f"    (:energy-bound {format_number(c)} {format_number(c + 1)})",
        f"    :condition (and (at start (at {ROVER} ?w)) (at start (sample_at ?s ?w)))",
        "    :effect (and (at end (not (sample_at ?s ?w))) (at end (have_sample ?s))",
        f"                 (at end (decrease (energy) {format_number(c)}))))",
        "  (:durative-action analyse",
        "    :parameters (?s - sample)",
        f"    :duration (= ?duration {ANALYSE_TICKS})",
        f"    (:duration-bound {ANALYSE_TICKS} {ANALYSE_TICKS + 1})",
        f"    (:energy-bound {format_number(an)} {format_number(an + 1)})",
        "    :condition (and (at start (have_sample ?s)))",
        "    :effect (and (at end (analysed ?s))",
        f"                 (at end (decrease (energy) {format_number(an)}))))",
        ")",
    ]
    return "\n".join(lines) + "\n"
