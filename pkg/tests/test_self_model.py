from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_bdi.errors import DuplicateAction, InvalidDescription, StaleVersion, UnknownAction, \
    VocabularyViolation
from adaptive_bdi.lifecycle import ExecStatus, HealthStatus
from adaptive_bdi.logic import Literal, NumericEffect
from adaptive_bdi.self_model import ActionDescription, SelfModel, replay_history

OK, FAIL = ExecStatus.SUCCEEDED, ExecStatus.FAILED


def vocab_model() -> SelfModel:
    return SelfModel(types=["waypoint"], predicates=[("at", 2), ("dusty", 1)], fluents=["energy"],
                     constants={"rover": "object"})


def move(d_max=5, version=1, name="move") -> ActionDescription:
    return ActionDescription(
        name=name, params=(("?a", "waypoint"), ("?b", "waypoint")),
        pre={Literal("at", ("rover", "?a"))},
        adds={Literal("at", ("rover", "?b"))}, deletes={Literal("at", ("rover", "?a"))},
        duration_bound=(d_max, d_max), version=version)


def test_register_first_insert():
    m = vocab_model()
    assert m.register_action(move()) == 1
    assert m.lookup("move").name == "move"


def test_register_duplicate():
    m = vocab_model()
    m.register_action(move())
    with pytest.raises(DuplicateAction):
        m.register_action(move())


def test_register_vocabulary_violation():
    m = vocab_model()
    bad = ActionDescription("teleport", params=(("?x", "waypoint"),), adds={Literal("teleported", ("?x",))})
    with pytest.raises(VocabularyViolation):
        m.register_action(bad)


def test_register_rejects_unknown_fluent_and_type():
    m = vocab_model()
    with pytest.raises(VocabularyViolation):
        m.register_action(ActionDescription("heat", numeric_effects={NumericEffect("temp", "increase", 1)}))
    with pytest.raises(VocabularyViolation):
        m.register_action(ActionDescription("go", params=(("?x", "crater"),)))


def test_description_validation():
    with pytest.raises(InvalidDescription):
        ActionDescription("x", duration_bound=(5, 3))
    with pytest.raises(InvalidDescription):
        ActionDescription("x", params=(), adds={Literal("p", ("?v",))})
    with pytest.raises(InvalidDescription):
        ActionDescription("x", adds={Literal("p")}, deletes={Literal("p")})


def with_window(window, health=HealthStatus.FUNCTIONAL) -> SelfModel:
    m = vocab_model()
    m.register_action(move())
    m.set_health("move", health, window)
    return m


def test_record_outcome_one_failure_stays_functional():
    m = with_window([OK, OK, OK, OK])
    assert m.record_outcome("move", FAIL) is HealthStatus.FUNCTIONAL


def test_record_outcome_two_failures_suspect():
    m = with_window([OK, FAIL, OK, OK])
    assert m.record_outcome("move", FAIL) is HealthStatus.SUSPECT


def test_record_outcome_suspect_failure_deprecates():
    m = with_window([OK, FAIL, OK, FAIL], HealthStatus.SUSPECT)
    assert m.record_outcome("move", FAIL) is HealthStatus.DEPRECATED


def test_suspect_recovers_after_three_successes():
    m = with_window([FAIL, FAIL], HealthStatus.SUSPECT)
    assert m.record_outcome("move", OK) is HealthStatus.SUSPECT
    assert m.record_outcome("move", OK) is HealthStatus.SUSPECT
    assert m.record_outcome("move", OK) is HealthStatus.FUNCTIONAL


def test_window_capacity():
    m = with_window([])
    for _ in range(8):
        m.record_outcome("move", OK)
    assert len(m.lookup("move").outcome_window) == 5


def test_record_outcome_rejects_non_outcomes():
    m = with_window([])
    with pytest.raises(ValueError):
        m.record_outcome("move", ExecStatus.ACTIVE)


def test_functional_actions_filter():
    m = vocab_model()
    m.register_action(move(name="move"))
    m.register_action(move(name="scoop"))
    m.set_health("scoop", HealthStatus.DEPRECATED)
    assert [d.name for d in m.functional_actions()] == ["move"]
    assert vocab_model().functional_actions() == []


def test_functional_actions_keep_suspect_in_name_order():
    m = vocab_model()
    m.register_action(move(name="b"))
    m.register_action(move(name="a"))
    m.set_health("a", HealthStatus.SUSPECT)
    assert [d.name for d in m.functional_actions()] == ["a", "b"]


def test_replace_description():
    m = vocab_model()
    m.register_action(move(5))
    m.replace_description("move", move(9, version=2))
    assert m.lookup("move", 1).health is HealthStatus.DEPRECATED
    assert m.lookup("move", 2).health is HealthStatus.FUNCTIONAL
    assert [(d.name, d.version, d.d_max) for d in m.functional_actions()] == [("move", 2, Fraction(9))]


def test_replace_guards():
    m = vocab_model()
    m.register_action(move())
    with pytest.raises(StaleVersion):
        m.replace_description("move", move(version=1))
    with pytest.raises(UnknownAction):
        m.replace_description("drill", move(name="drill", version=2))


def test_copy_is_independent():
    m = vocab_model()
    m.register_action(move())
    c = m.copy()
    c.record_outcome("move", FAIL)
    assert m.lookup("move").outcome_window == ()


def test_replay_history_reproduces_health():
    m = with_window([])
    for o in (OK, FAIL, OK, FAIL, FAIL, OK):
        m.record_outcome("move", o)
    again = replay_history(with_window([]), m.history)
    assert again.lookup("move") == m.lookup("move")


def reference_health(outcomes):
    """Straight-line restatement of the window policy."""
    health, window = HealthStatus.FUNCTIONAL, []
    for o in outcomes:
        window = (window + [o])[-5:]
        if health is HealthStatus.DEPRECATED:
            continue
        if o is FAIL:
            if health is HealthStatus.SUSPECT:
                health = HealthStatus.DEPRECATED
            elif window.count(FAIL) >= 2:
                health = HealthStatus.SUSPECT
        elif health is HealthStatus.SUSPECT and window[-3:] == [OK, OK, OK]:
            health = HealthStatus.FUNCTIONAL
    return health


@settings(max_examples=200)
@given(st.lists(st.sampled_from([OK, FAIL]), max_size=30))
def test_health_matches_reference_policy(outcomes):
    m = with_window([])
    for o in outcomes:
        m.record_outcome("move", o)
    assert m.lookup("move").health is reference_health(outcomes)


@settings(max_examples=200)
@given(st.lists(st.sampled_from([OK, FAIL]), max_size=30), st.integers(0, 29))
def test_deprecation_is_permanent(outcomes, cut):
    m = with_window([])
    seen_deprecated = False
    for i, o in enumerate(outcomes):
        if i == cut and seen_deprecated:
            with pytest.raises(StaleVersion):
                m.replace_description("move", move(version=1))
        h = m.record_outcome("move", o)
        if seen_deprecated:
            assert h is HealthStatus.DEPRECATED
        seen_deprecated = seen_deprecated or h is HealthStatus.DEPRECATED
