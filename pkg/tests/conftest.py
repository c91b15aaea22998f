from __future__ import annotations

import pytest

from cped.space import EvaluationSet, Trial, parse_space

# acceptance outcomes, filled in by test_acceptance.py and echoed in the terminal summary
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")


DISJOINT_DOC = {
    "parameters": [
        {"name": "c", "regimes": [{"conditions": [], "domain": {"kind": "continuous", "lo": 0.0, "hi": 1.0}}]},
        {
            "name": "x",
            "regimes": [
                {
                    "conditions": [{"parent": "c", "in": [0.0, 0.5]}],
                    "domain": {"kind": "continuous", "lo": -5.0, "hi": -2.0},
                },
                {"conditions": [{"parent": "c", "in": [0.5, 1.0]}], "domain": {"kind": "inactive"}},
            ],
        },
        {
            "name": "y",
            "regimes": [
                {"conditions": [{"parent": "c", "in": [0.0, 0.5]}], "domain": {"kind": "inactive"}},
                {
                    "conditions": [{"parent": "c", "in": [0.5, 1.0]}],
                    "domain": {"kind": "continuous", "lo": 2.0, "hi": 5.0},
                },
            ],
        },
    ]
}

# c in {0, 1}; x in {0, 1} is active only when c is 0
FOUR_TRIAL_DOC = {
    "parameters": [
        {"name": "c", "regimes": [{"conditions": [], "domain": {"kind": "categorical", "labels": ["0", "1"]}}]},
        {
            "name": "x",
            "regimes": [
                {
                    "conditions": [{"parent": "c", "equals": "0"}],
                    "domain": {"kind": "categorical", "labels": ["0", "1"]},
                },
                {"conditions": [{"parent": "c", "equals": "1"}], "domain": {"kind": "inactive"}},
            ],
        },
    ]
}


@pytest.fixture
def disjoint_space():
    return parse_space(DISJOINT_DOC)


@pytest.fixture
def four_trials():
    space = parse_space(FOUR_TRIAL_DOC)
    trials = [
        Trial({"c": "0", "x": "0"}, 0.0),
        Trial({"c": "0", "x": "1"}, 1.0),
        Trial({"c": "1", "x": None}, 2.0),
        Trial({"c": "1", "x": None}, 3.0),
    ]
    return EvaluationSet(space, tuple(trials))
