"""Command-line entry point: run, plan, replay, learn and check."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import AdaptiveBDIError, BoundExceeded, EmptyEffects, InconsistentSchema, InsufficientData, \
    UnknownAction, Unsolvable
from .learner import read_traces, synthesize_description
from .logic import json_number
from .pddl_io import format_action, load_domain_file, parse_problem
from .planner import Counterexample, PlanningProblem, check_safety, ground_actions, plan_to_json, solve
from .runner import DEFAULT_TICK_LIMIT, EXIT_INVALID, InputError, load_safety, read_trace, replay, \
    run_scenario, verdict_records

INPUT_ERRORS = (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError, AdaptiveBDIError)


def _error(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_INVALID


def _print(data) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def _load_problem(domain: str, problem: str):
    doc, model = load_domain_file(domain)
    prob = parse_problem(Path(problem).read_text(encoding="utf-8"), constants=[c for c, _ in doc.constants])
    return model, prob


def cmd_run(args) -> int:
    try:
        result = run_scenario(args.domain, args.plans, args.scenario, tick_limit=args.tick_limit,
                              learning=not args.no_learning, safety_path=args.safety,
                              trace_out=args.trace_out, report_out=args.report_out,
                              episodes_out=args.episodes_out)
    except InputError as exc:
        return _error(str(exc))
    _print(result.report.to_dict())
    return result.exit_code


def cmd_plan(args) -> int:
    try:
        model, prob = _load_problem(args.domain, args.problem)
        problem = PlanningProblem(prob.state(), prob.goal, tuple(ground_actions(model, prob.object_types())))
    except INPUT_ERRORS as exc:
        return _error(str(exc))
    try:
        result = solve(problem, greedy=args.greedy)
    except Unsolvable as exc:
        print(f"unsolvable: {exc}", file=sys.stderr)
        return 1
    _print(plan_to_json(result.steps))
    return 0


def _parse_plan_file(path: str, model) -> list:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    steps = []
    for entry in data:
        desc = model.lookup(entry["name"], entry.get("version"))
        steps.append(desc.ground(tuple(entry.get("args", ()))))
    return steps


def cmd_check(args) -> int:
    try:
        model, prob = _load_problem(args.domain, args.problem)
        steps = _parse_plan_file(args.plan, model)
        props = load_safety(args.safety)
        verdict = check_safety(steps, prob.state(), model, props, branch_bound=args.branch_bound)
    except BoundExceeded as exc:
        return _error(str(exc))
    except (UnknownAction,) + INPUT_ERRORS as exc:
        return _error(str(exc))
    if isinstance(verdict, Counterexample):
        _print({"result": "Counterexample", **verdict.to_dict()})
        return 1
    _print({"result": "Certified", "explored": verdict.explored})
    return 0


def cmd_replay(args) -> int:
    try:
        records = read_trace(args.trace)
        functional = args.functional.split(",") if args.functional else None
        reproduced = replay(records, functional) if functional else replay(records)
    except INPUT_ERRORS as exc:
        return _error(str(exc))
    recorded = [(r.tick, r.payload) for r in verdict_records(records)]
    again = [(r.tick, r.payload) for r in reproduced]
    match = recorded == again
    _print({"verdicts_recorded": len(recorded), "verdicts_reproduced": len(again), "match": match})
    return 0 if match else 1


def cmd_learn(args) -> int:
    try:
        _, model = load_domain_file(args.domain)
        traces = read_traces(args.traces)
        learned = synthesize_description(args.action, traces, model, k=args.k)
    except (InsufficientData, InconsistentSchema, EmptyEffects) as exc:
        return _error(f"{type(exc).__name__}: {exc}")
    except INPUT_ERRORS as exc:
        return _error(str(exc))
    desc = learned.description
    _print({
        "name": desc.name,
        "version": desc.version,
        "support": learned.support,
        "provenance": list(learned.provenance),
        "duration_bound": [json_number(v) for v in desc.duration_bound],
        "energy_bound": [json_number(v) for v in desc.energy_bound],
        "pddl": format_action(desc),
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptive-bdi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario end to end")
    run.add_argument("--domain", required=True)
    run.add_argument("--plans", required=True)
    run.add_argument("--scenario", required=True)
    run.add_argument("--trace-out")
    run.add_argument("--report-out")
    run.add_argument("--episodes-out", help="write per-episode execution traces (JSON lines)")
    run.add_argument("--tick-limit", type=int, default=DEFAULT_TICK_LIMIT)
    run.add_argument("--no-learning", action="store_true")
    run.add_argument("--safety", help="safety properties file (JSON)")
    run.set_defaults(func=cmd_run)

    plan = sub.add_parser("plan", help="solve a planning problem")
    plan.add_argument("--domain", required=True)
    plan.add_argument("--problem", required=True)
    plan.add_argument("--greedy", action="store_true", help="goal-count greedy search (not optimal)")
    plan.set_defaults(func=cmd_plan)

    rep = sub.add_parser("replay", help="recompute monitor verdicts from a trace")
    rep.add_argument("--trace", required=True)
    rep.add_argument("--functional", help="comma-separated functional predicates")
    rep.set_defaults(func=cmd_replay)

    learn = sub.add_parser("learn", help="synthesize a replacement action description")
    learn.add_argument("--domain", required=True)
    learn.add_argument("--traces", required=True)
    learn.add_argument("--action", required=True)
    learn.add_argument("--k", type=float, default=2)
    learn.set_defaults(func=cmd_learn)

    check = sub.add_parser("check", help="exhaustively safety-check a plan")
    check.add_argument("--domain", required=True)
    check.add_argument("--problem", required=True)
    check.add_argument("--plan", required=True)
    check.add_argument("--safety")
    check.add_argument("--branch-bound", type=int, default=12)
    check.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
