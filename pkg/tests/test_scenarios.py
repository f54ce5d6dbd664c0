"""End-to-end runs of the shipped scenarios, with tick counts frozen from hand simulation."""
import json

import pytest

from conftest import SCENARIOS, run_named, scenario_files
from adaptive_bdi.learner import read_traces
from adaptive_bdi.runner import InputError, load_safety, read_trace, replay, run_scenario, trace_lines, \
    verdict_records

NAMES = ["fault_free", "blocked_detour", "health_lifecycle", "anomalous", "learned_replacement"]


def kinds(trace, kind):
    return [r for r in trace if r.kind == kind]


def failed_verdicts(trace):
    return [(r.tick, r.payload["action_id"], r.payload["reason"]) for r in kinds(trace, "Verdict")
            if r.payload["status"] == "Failed"]


@pytest.mark.parametrize("name", NAMES)
def test_scenario_achieved(scenario_runs, name):
    r = scenario_runs(name)
    assert r.exit_code == 0 and r.report.mission_outcome == "Achieved"


def test_fault_free(scenario_runs):
    # move 5 + collect 2 + move 4 + analyse 3
    r = scenario_runs("fault_free")
    assert r.report.ticks_elapsed == 14 and r.report.energy_used == 14
    assert r.report.repairs == [] and r.report.failures_detected == []


def test_blocked_detour(scenario_runs):
    r = scenario_runs("blocked_detour")
    assert failed_verdicts(r.trace) == [(7, "a1", "TimeThreshold")]
    assert r.report.repairs == [(7, "Patched")]
    plan = kinds(r.trace, "Plan")[0].payload
    assert [s["name"] for s in plan["steps"]][:2] == ["move_wpA_wpD", "move_wpD_wpB"]
    halts = [c for c in kinds(r.trace, "Command") if c.payload["name"] == "halt"]
    assert [h.payload["args"] for h in halts] == [["a1"]]
    assert r.report.ticks_elapsed == 30


def test_health_lifecycle(scenario_runs):
    r = scenario_runs("health_lifecycle")
    assert r.report.final_health["move_wpA_wpB"] == "Deprecated"
    assert r.report.repairs == [(21, "Patched"), (56, "Patched"), (80, "Patched")]
    states = [h.payload["health"] for h in kinds(r.trace, "Health") if h.payload["name"] == "move_wpA_wpB"]
    assert "Suspect" in states and states[-1] == "Deprecated"


def test_anomalous(scenario_runs):
    r = scenario_runs("anomalous")
    (health,) = [h for h in kinds(r.trace, "Health") if h.payload.get("classification")]
    assert health.payload["classification"] == "Anomalous"
    assert r.report.repairs == []
    commands = kinds(r.trace, "Command")
    retry = [c for c in commands if c.payload.get("reattempt")]
    assert [(c.tick, c.payload["name"]) for c in retry] == [(14, "move_wpA_wpB")]
    assert kinds(r.trace, "Plan") == []


def test_learned_replacement(scenario_runs):
    r = scenario_runs("learned_replacement")
    assert r.report.repairs == [(33, "NeedLearning"), (36, "Patched")]
    assert r.report.learned == [("move_wpA_wpB", 2)]
    (learn,) = kinds(r.trace, "Learn")
    assert learn.payload["status"] == "Committed" and learn.payload["support"] >= 2
    assert kinds(r.trace, "Safety")[-1].payload["result"] == "Certified"


def test_learning_disabled_fails(tmp_path):
    r = run_named("learned_replacement", learning=False)
    assert r.exit_code == 1 and "learning is disabled" in r.report.diagnostic


@pytest.mark.parametrize("name", NAMES)
def test_replay_reproduces_verdicts(scenario_runs, name, tmp_path):
    path = tmp_path / "trace.jsonl"
    path.write_text(trace_lines(scenario_runs(name).trace))
    records = read_trace(path)
    again = replay(records)
    assert [(r.tick, r.payload) for r in again] == [(r.tick, r.payload) for r in verdict_records(records)]
    assert again


def test_trace_lines_are_sorted_json(scenario_runs):
    for line in trace_lines(scenario_runs("blocked_detour").trace).splitlines():
        raw = json.loads(line)
        assert set(raw) == {"tick", "kind", "payload"}
        assert line == json.dumps(raw, sort_keys=True)


def test_outputs_written(tmp_path):
    out = {k: tmp_path / f"{k}.out" for k in ("trace", "report", "episodes")}
    r = run_named("blocked_detour", trace_out=out["trace"], report_out=out["report"], episodes_out=out["episodes"])
    assert json.loads(out["report"].read_text()) == r.report.to_dict()
    assert len(read_trace(out["trace"])) == len(r.trace)
    assert len(read_traces(out["episodes"])) == len(r.episodes)


def test_safety_violation_exit(tmp_path):
    path = tmp_path / "safety.json"
    path.write_text(json.dumps({"forbidden": [["(< (energy) 95)"]]}))
    r = run_named("blocked_detour", safety_path=path)
    assert r.exit_code == 3 and r.report.mission_outcome == "SafetyViolation"
    assert kinds(r.trace, "Safety")[-1].payload["result"] == "Counterexample"


def test_load_safety(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"forbidden": [["(hot)", "(< (energy) 5)"]]}))
    (conj,) = load_safety(path).forbidden
    assert len(conj.literals) == 1 and len(conj.constraints) == 1


def test_tick_limit():
    r = run_named("fault_free", tick_limit=5)
    assert r.exit_code == 1 and "tick limit" in r.report.diagnostic


def test_malformed_scenario(tmp_path):
    bad = tmp_path / "scenario.json"
    bad.write_text("{not json")
    domain, plans, _ = scenario_files("fault_free")
    with pytest.raises(InputError):
        run_scenario(domain, plans, bad)
    bad.write_text(json.dumps({**json.loads((SCENARIOS / "fault_free" / "scenario.json").read_text()), "goal": []}))
    with pytest.raises(InputError):
        run_scenario(domain, plans, bad)


def test_deterministic_repeat():
    first = trace_lines(run_named("anomalous").trace)
    assert trace_lines(run_named("anomalous").trace) == first
