"""Small constructors shared by the planner, safety and acceptance tests."""
from fractions import Fraction

from adaptive_bdi.logic import ENERGY, Literal, NumericEffect, State
from adaptive_bdi.self_model import ActionDescription, GroundAction, SelfModel

ROVER = "rover"


def at(w: str) -> Literal:
    return Literal("at", (ROVER, w))


def lifted_move(duration=1, energy=0) -> ActionDescription:
    return ActionDescription(
        name="move", params=(("?a", "waypoint"), ("?b", "waypoint")),
        pre={at("?a"), Literal("connected", ("?a", "?b"))},
        adds={at("?b")}, deletes={at("?a")}, distinct={("?a", "?b")},
        duration_bound=(duration, duration), energy_bound=(energy, energy))


def graph_model(desc: ActionDescription = None) -> SelfModel:
    model = SelfModel(types=["waypoint"], predicates=[("at", 2), ("connected", 2)], fluents=[ENERGY],
                      constants={ROVER: "object"})
    model.register_action(desc or lifted_move())
    return model


def graph_state(edges, start, energy=None) -> State:
    lits = {at(start)}
    for a, b in edges:
        lits |= {Literal("connected", (a, b)), Literal("connected", (b, a))}
    return State.of(lits, None if energy is None else {ENERGY: energy})


def waypoints(names) -> dict:
    return {w: "waypoint" for w in names}


def route_model(routes) -> SelfModel:
    """Zero-parameter per-route moves: routes maps (a, b) to duration (energy equals duration)."""
    names = sorted({w for r in routes for w in r})
    model = SelfModel(types=["rover", "waypoint"], predicates=[("at", 2)], fluents=[ENERGY],
                      constants={ROVER: "rover", **waypoints(names)})
    for (a, b), length in sorted(routes.items()):
        model.register_action(ActionDescription(
            name=f"move_{a}_{b}", pre={at(a)}, adds={at(b)}, deletes={at(a)},
            numeric_effects={NumericEffect(ENERGY, "decrease", Fraction(length))},
            duration_bound=(length, length + 1), energy_bound=(length, length + 1)))
    return model


def energy_step(name, nominal, e_max, adds=(), deletes=()) -> GroundAction:
    """Unconditional step draining `nominal` energy on success and `e_max` on failure."""
    return GroundAction(name=name, args=(), adds=frozenset(adds), deletes=frozenset(deletes),
                        deltas=((ENERGY, -Fraction(nominal)),), d_max=Fraction(1), e_max=Fraction(e_max))
