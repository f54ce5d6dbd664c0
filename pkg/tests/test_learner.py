import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import at, route_model
from oracles import brute_effects, sympy_ceiling
from adaptive_bdi.errors import EmptyEffects, InconsistentSchema, InsufficientData, UnknownAction
from adaptive_bdi.learner import (
    ExecutionTrace,
    ceil_mean_plus_k_std,
    commit,
    estimate_thresholds,
    learn_effects,
    learn_preconditions,
    propose_on_copy,
    read_traces,
    synthesize_description,
    write_traces,
)
from adaptive_bdi.lifecycle import ExecStatus, HealthStatus
from adaptive_bdi.logic import ENERGY, Literal, State

OK, FAIL = ExecStatus.SUCCEEDED, ExecStatus.FAILED


def trace(args, pre, post, duration=5, energy=5, outcome=OK, name="move"):
    return ExecutionTrace(name, tuple(args), State.of(pre), State.of(post), duration, energy, outcome)


def move_trace(a, b, extra_pre=(), extra_post=(), **kw):
    return trace((a, b), {at(a), *extra_pre}, {at(b), *extra_post}, **kw)


def test_move_effects():
    traces = [move_trace("wpA", "wpB"), move_trace("wpB", "wpC")]
    adds, deletes = learn_effects(traces, ["?from", "?to"], ["rover"])
    assert adds == {Literal("at", ("rover", "?to"))}
    assert deletes == {Literal("at", ("rover", "?from"))}


def test_inconsistent_literal_excluded():
    dusty = Literal("dusty", ("wpB",))
    traces = [move_trace("wpA", "wpB", extra_post={dusty}), move_trace("wpB", "wpC")]
    adds, _ = learn_effects(traces, ["?from", "?to"], ["rover"])
    assert Literal("dusty", ("?to",)) not in adds


def test_single_trace_is_insufficient():
    with pytest.raises(InsufficientData):
        learn_effects([move_trace("wpA", "wpB")])


def test_failed_traces_ignored():
    traces = [move_trace("wpA", "wpB"), move_trace("wpB", "wpC"), trace(("wpC", "wpD"), {at("wpC")}, {at("wpC")},
                                                                          outcome=FAIL)]
    adds, _ = learn_effects(traces, ["?f", "?t"], ["rover"])
    assert adds == {Literal("at", ("rover", "?t"))}


def test_schema_checks():
    with pytest.raises(InconsistentSchema):
        learn_effects([move_trace("a", "b"), trace(("a",), {at("a")}, {at("b")})])
    with pytest.raises(InconsistentSchema):
        learn_effects([move_trace("a", "b"), move_trace("a", "b", name="other")])


def test_learn_preconditions():
    pres = learn_preconditions([move_trace("wpA", "wpB"), move_trace("wpC", "wpB")], ["?f", "?t"], ["rover"])
    assert pres == {Literal("at", ("rover", "?f"))}


def test_zero_variance():
    assert ceil_mean_plus_k_std([5, 5, 5]) == 5


def test_four_five_six():
    assert ceil_mean_plus_k_std([4, 5, 6]) == 7


def test_nine_ten_nine():
    assert ceil_mean_plus_k_std([9, 10, 9]) == 11


def test_estimate_thresholds():
    assert estimate_thresholds([(4, 1), (5, 1), (6, 1)]) == (7, 1)
    with pytest.raises(InsufficientData):
        estimate_thresholds([(5, 5)])


def test_ceiling_exact_at_integer_boundary():
    # mean 1, pstdev 1 -> exactly 3, must not round up to 4
    assert ceil_mean_plus_k_std([0, 2]) == 3
    assert sympy_ceiling([0, 2]) == 3


@settings(max_examples=300)
@given(st.lists(st.fractions(min_value=0, max_value=50, max_denominator=7), min_size=1, max_size=8),
       st.sampled_from([0, 1, 2, Fraction(3, 2)]))
def test_ceiling_matches_sympy(values, k):
    assert ceil_mean_plus_k_std(values, k) == sympy_ceiling(values, k)


def detour_traces(durations):
    return [ExecutionTrace("move_A_B", (), State.of({at("A")}, {ENERGY: 100}), State.of({at("B")}, {ENERGY: 100 - d}),
                           d, d, OK, f"t{i}") for i, d in enumerate(durations)]


def test_synthesize_from_detour_traces():
    model = route_model({("A", "B"): 5, ("B", "C"): 4})
    learned = synthesize_description("move_A_B", detour_traces([9, 10, 9]), model)
    desc = learned.description
    old = model.lookup("move_A_B")
    assert desc.d_max == 11
    assert desc.duration_bound == (9, 11)
    assert (desc.adds, desc.deletes) == (old.adds, old.deletes)
    assert desc.version == 2
    assert learned.support == 3 and learned.provenance == ("t0", "t1", "t2")


def test_synthesize_rejects_empty_effects():
    model = route_model({("A", "B"): 5})
    still = [ExecutionTrace("move_A_B", (), State.of({at("A")}), State.of({at("A")}), 5, 5, OK) for _ in range(2)]
    with pytest.raises(EmptyEffects):
        synthesize_description("move_A_B", still, model)


def test_commit_and_propose():
    model = route_model({("A", "B"): 5})
    learned = synthesize_description("move_A_B", detour_traces([9, 10]), model)
    trial = propose_on_copy(model, learned)
    assert trial.lookup("move_A_B").version == 2
    assert model.lookup("move_A_B").version == 1
    commit(model, learned)
    assert model.lookup("move_A_B", 1).health is HealthStatus.DEPRECATED
    assert model.lookup("move_A_B").d_max == learned.description.d_max


def test_commit_vanished_action():
    model = route_model({("A", "B"): 5})
    learned = synthesize_description("move_A_B", detour_traces([9, 10]), model)
    empty = route_model({("C", "D"): 1})
    with pytest.raises(UnknownAction):
        commit(empty, learned)


def test_trace_file_round_trip(tmp_path):
    traces = detour_traces([9, 10])
    path = tmp_path / "t.jsonl"
    write_traces(path, traces)
    back = read_traces(path)
    assert [(t.pre, t.post, t.duration, t.energy, t.outcome) for t in back] == \
        [(t.pre, t.post, t.duration, t.energy, t.outcome) for t in traces]
    assert back[0].trace_id == "t.jsonl:1"


def test_trace_validation():
    with pytest.raises(ValueError):
        trace((), set(), set(), duration=-1)
    with pytest.raises(ValueError):
        trace((), set(), set(), outcome=ExecStatus.ACTIVE)


# -- randomized corpora against the brute-force oracle -------------------------

CORPUS_PREDICATES = (("on", 2), ("clear", 1), ("lit", 1), ("near", 2), ("ready", 0))
CONSTANTS = ("base",)


def random_corpus(seed: int):
    rng = random.Random(seed)
    arity = rng.randint(0, 3)
    objects = [f"o{i}" for i in range(6)]
    variables = [f"?p{i}" for i in range(arity)]
    terms = variables + list(CONSTANTS)

    def lifted():
        pred, n = rng.choice(CORPUS_PREDICATES)
        return Literal(pred, tuple(rng.choice(terms) for _ in range(n)))

    planted_adds = {lifted() for _ in range(rng.randint(0, 2))}
    planted_dels = {lifted() for _ in range(rng.randint(0, 2))} - planted_adds
    traces = []
    for _ in range(rng.randint(2, 6)):
        args = rng.sample(objects, arity)
        b = dict(zip(variables, args))
        universe = objects + list(CONSTANTS)
        noise = {Literal(p, tuple(rng.choice(universe) for _ in range(n)))
                 for p, n in CORPUS_PREDICATES for _ in range(2)}
        pre = {l for l in noise if rng.random() < 0.5}
        adds = {l.substitute(b) for l in planted_adds}
        dels = {l.substitute(b) for l in planted_dels} - adds
        pre = (pre - adds) | dels
        post = (pre - dels) | adds
        post ^= {l for l in noise if rng.random() < 0.2}
        outcome = OK if rng.random() < 0.8 else FAIL
        traces.append(ExecutionTrace("act", tuple(args), State.of(pre), State.of(post), rng.randint(1, 9),
                                     rng.randint(0, 9), outcome))
    return traces, variables


@pytest.mark.parametrize("seed", range(120))
def test_effects_match_brute_force(seed):
    traces, variables = random_corpus(seed)
    good = [t for t in traces if t.outcome is OK]
    if len(good) < 2:
        with pytest.raises(InsufficientData):
            learn_effects(traces, variables, CONSTANTS)
        return
    expected = brute_effects(traces, variables, CONSTANTS, CORPUS_PREDICATES)
    assert learn_effects(traces, variables, CONSTANTS) == expected
