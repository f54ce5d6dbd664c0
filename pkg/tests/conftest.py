from pathlib import Path

import pytest

from adaptive_bdi.pddl_io import load_domain_file
from adaptive_bdi.runner import run_scenario

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"
PDDL = Path(__file__).resolve().parent / "data" / "pddl"


def scenario_files(name: str) -> tuple:
    d = SCENARIOS / name
    return d / "domain.pddl", d / "plans.json", d / "scenario.json"


def run_named(name: str, **kwargs):
    return run_scenario(*scenario_files(name), **kwargs)


@pytest.fixture
def rover_model():
    _, model = load_domain_file(PDDL / "rover_domain.pddl")
    return model


@pytest.fixture(scope="session")
def scenario_runs():
    """Each shipped scenario run once per session; tests inspect the result read-only."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = run_named(name)
        return cache[name]

    return get


# acceptance criteria report one line each; echoed after the run even when output is captured
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
