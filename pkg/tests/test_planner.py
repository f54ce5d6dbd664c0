import random
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import at, energy_step, graph_model, graph_state, lifted_move, route_model, waypoints
from oracles import bfs_distance, enumerate_safety
from adaptive_bdi.errors import BoundExceeded, IndexOutOfRange, Unsolvable
from adaptive_bdi.lifecycle import HealthStatus
from adaptive_bdi.logic import ENERGY, Condition, Literal, NumericConstraint, State
from adaptive_bdi.planner import (
    NO_NEGATIVE_ENERGY,
    Certified,
    Counterexample,
    NeedLearning,
    Patched,
    PlanningProblem,
    SafetyProperty,
    Unrepairable,
    check_safety,
    ground_actions,
    plan_cost,
    repair_plan,
    solve,
    validate_plan,
)

UNIT = (1, 0)


def problem(edges, start, goal, names):
    model = graph_model()
    acts = ground_actions(model, waypoints(names))
    return PlanningProblem(graph_state(edges, start), {at(goal)}, tuple(acts), UNIT)


# -- grounding -----------------------------------------------------------------


def test_ground_three_waypoints():
    assert len(ground_actions(graph_model(), waypoints(["A", "B", "C"]))) == 6


def test_ground_without_objects():
    assert ground_actions(graph_model(), {}) == []


def test_ground_skips_deprecated():
    model = graph_model()
    model.set_health("move", HealthStatus.DEPRECATED)
    assert ground_actions(model, waypoints(["A", "B", "C"])) == []


def test_ground_exclude_by_key():
    assert ground_actions(graph_model(), waypoints("AB"), exclude={("move", 1)}) == []


# -- solve ---------------------------------------------------------------------


def test_goal_already_holds():
    result = solve(problem([("A", "B")], "A", "A", "AB"))
    assert result.steps == () and result.cost == 0


def test_line_graph():
    result = solve(problem([("A", "B"), ("B", "C")], "A", "C", "ABC"))
    assert [(s.name, s.args) for s in result.steps] == [("move", ("A", "B")), ("move", ("B", "C"))]
    assert result.cost == 2


def test_disconnected_goal():
    with pytest.raises(Unsolvable):
        solve(problem([("A", "B")], "A", "Z", "ABZ"))


def test_tie_break_is_lexicographic():
    # A-B-D and A-C-D both cost 2; the (name, args) sequence decides
    result = solve(problem([("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")], "A", "D", "ABCD"))
    assert [s.args for s in result.steps] == [("A", "B"), ("B", "D")]


def test_weighted_cost_prefers_cheaper_route():
    model = route_model({("A", "B"): 10, ("A", "C"): 2, ("C", "B"): 3})
    acts = ground_actions(model, {})
    result = solve(PlanningProblem(State.of({at("A")}, {ENERGY: 100}), {at("B")}, tuple(acts)))
    assert [s.name for s in result.steps] == ["move_A_C", "move_C_B"]
    assert result.cost == plan_cost(result.steps)


def test_greedy_finds_a_plan():
    result = solve(problem([("A", "B"), ("B", "C")], "A", "C", "ABC"), greedy=True)
    assert validate_plan(result.steps, graph_state([("A", "B"), ("B", "C")], "A"))


def test_expansion_limit():
    p = problem([("A", "B"), ("B", "C")], "A", "C", "ABC")
    limited = PlanningProblem(p.init, p.goal, p.actions, UNIT, max_expansions=1)
    with pytest.raises(Unsolvable):
        solve(limited)


@st.composite
def graphs(draw):
    n = draw(st.integers(2, 6))
    names = [f"w{i}" for i in range(n)]
    pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    edges = [p for p in pairs if draw(st.booleans())]
    return names, edges, draw(st.sampled_from(names))


@settings(max_examples=150, deadline=None)
@given(graphs())
def test_solve_matches_bfs(graph):
    names, edges, goal = graph
    adj = {w: set() for w in names}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    expected = bfs_distance(adj, names[0], goal)
    p = problem(edges, names[0], goal, names)
    if expected is None:
        with pytest.raises(Unsolvable):
            solve(p)
    else:
        result = solve(p)
        assert result.cost == expected
        assert validate_plan(result.steps, p.init)


@settings(max_examples=60, deadline=None)
@given(graphs(), st.data())
def test_no_deprecated_action_in_plans(graph, data):
    names, edges, goal = graph
    model = graph_model()
    model.register_action(replace(lifted_move(), name="hop"))
    dead = data.draw(st.sampled_from(["move", "hop"]))
    model.set_health(dead, HealthStatus.DEPRECATED)
    acts = ground_actions(model, waypoints(names))
    try:
        result = solve(PlanningProblem(graph_state(edges, names[0]), {at(goal)}, tuple(acts), UNIT))
    except Unsolvable:
        return
    assert all(s.name != dead for s in result.steps)


# -- validation ----------------------------------------------------------------

LINE = [("A", "B"), ("B", "C")]


def test_validate_two_step_route():
    model = graph_model()
    steps = [model.lookup("move").ground(("A", "B")), model.lookup("move").ground(("B", "C"))]
    assert validate_plan(steps, graph_state(LINE, "A")).valid


def test_validate_reports_hole():
    model = graph_model()
    steps = [model.lookup("move").ground(("A", "B")), model.lookup("move").ground(("C", "B"))]
    result = validate_plan(steps, graph_state(LINE, "A"))
    assert not result.valid and result.first_violation == 1


def test_validate_empty():
    assert validate_plan([], State.of()).valid


def test_validate_regrounds_names():
    model = graph_model()
    assert validate_plan([("move", ("A", "B"))], graph_state(LINE, "A"), model).valid


# -- repair --------------------------------------------------------------------

DETOUR = {("A", "B"): 5, ("B", "C"): 4, ("A", "D"): 6, ("D", "B"): 6}


def test_repair_around_deprecated_move():
    model = route_model(DETOUR)
    plan = [model.lookup("move_A_B").ground(()), model.lookup("move_B_C").ground(())]
    model.set_health("move_A_B", HealthStatus.DEPRECATED)
    result = repair_plan(plan, 0, State.of({at("A")}, {ENERGY: 100}), model)
    assert isinstance(result, Patched)
    assert [s.name for s in result.steps] == ["move_A_D", "move_D_B", "move_B_C"]
    assert [s.name for s in result.subplan] == ["move_A_D", "move_D_B"]


def test_repair_over_budget_needs_learning():
    model = route_model({("A", "B"): 5, ("A", "D"): 14, ("D", "B"): 14})
    plan = [model.lookup("move_A_B").ground(())]
    result = repair_plan(plan, 0, State.of({at("A")}, {ENERGY: 100}), model, (20, None),
                         exclude={("move_A_B", 1)})
    assert isinstance(result, NeedLearning)
    assert [s.name for s in result.subplan] == ["move_A_D", "move_D_B"]


def test_repair_unreachable():
    model = route_model({("A", "B"): 5, ("B", "C"): 4})
    plan = [model.lookup("move_A_B").ground(())]
    result = repair_plan(plan, 0, State.of({at("A")}, {ENERGY: 100}), model, exclude={("move_A_B", 1)})
    assert isinstance(result, Unrepairable)


def test_repair_index_guard():
    model = route_model(DETOUR)
    with pytest.raises(IndexOutOfRange):
        repair_plan([], 0, State.of(), model)


# -- safety --------------------------------------------------------------------


def test_planted_underflow():
    steps = [energy_step("s1", 4, 6), energy_step("s2", 4, 6)]
    verdict = check_safety(steps, State.of((), {ENERGY: 10}))
    assert isinstance(verdict, Counterexample)
    assert verdict.outcomes == (False, False)
    assert [s.fluent(ENERGY) for s in verdict.states] == [10, 4, -2]


def test_certified_when_worst_case_fits():
    steps = [energy_step(f"s{i}", 5, 10) for i in range(4)]
    assert isinstance(check_safety(steps, State.of((), {ENERGY: 100})), Certified)


def test_empty_plan_certified():
    assert isinstance(check_safety([], State.of((), {ENERGY: 1})), Certified)


def test_branch_bound_guard():
    with pytest.raises(BoundExceeded):
        check_safety([], State.of(), branch_bound=13)
    with pytest.raises(BoundExceeded):
        check_safety([energy_step("s", 1, 1)] * 3, State.of(), branch_bound=2)


def test_literal_safety_property():
    hot = Literal("hot")
    prop = SafetyProperty((Condition(frozenset({hot}), frozenset({NumericConstraint(ENERGY, "<", 5)})),))
    steps = [energy_step("heat", 1, 1, adds={hot}), energy_step("drain", 4, 6)]
    verdict = check_safety(steps, State.of((), {ENERGY: 8}), props=prop)
    assert verdict.outcomes == (True, False)


def random_plan(rng: random.Random, length: int):
    steps = []
    for i in range(length):
        nominal = rng.randint(0, 6)
        steps.append(energy_step(f"s{i}", nominal, nominal + rng.randint(0, 4),
                                 adds={Literal("flag")} if rng.random() < 0.2 else ()))
    return steps


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 8), st.integers(0, 40))
def test_safety_matches_enumeration(seed, length, energy):
    steps = random_plan(random.Random(seed), length)
    init = State.of((), {ENERGY: energy})
    verdict = check_safety(steps, init)
    expected = enumerate_safety(steps, init, NO_NEGATIVE_ENERGY.forbidden)
    if expected is None:
        assert isinstance(verdict, Certified)
    else:
        assert (verdict.outcomes, verdict.states) == expected


def test_counterexample_serialises():
    verdict = check_safety([energy_step("s", 1, 3)], State.of((), {ENERGY: 2}))
    data = verdict.to_dict()
    assert data["outcomes"] == ["Failed"]
    assert data["states"][-1]["fluents"][ENERGY] == -1
    assert Fraction(-1) == verdict.states[-1].fluent(ENERGY)
