"""Acceptance criteria 1-10, one summary line each.

Lines are printed as the criteria run and repeated in the pytest terminal
summary (see conftest.py) so they survive output capture.
"""

import json
import subprocess
import sys

import pytest

from kron import acceptance

RESULTS: dict[int, str] = {}


def record(number: int, title: str, passed: bool) -> None:
    line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}"
    RESULTS[number] = line
    print(line)


@pytest.fixture(scope="module")
def first_two():
    return acceptance.criterion_1_2()


def test_criterion_01_constant_term(first_two):
    c1, _ = first_two
    record(1, c1.title, c1.passed)
    assert c1.passed, c1.details
    assert c1.details["inputs"] >= 200 and c1.details["q"] == [2, 3, 4] and c1.details["r"] == [1, 2, 3]


def test_criterion_02_first_limit_formula(first_two):
    _, c2 = first_two
    record(2, c2.title, c2.passed)
    assert c2.passed, c2.details


@pytest.mark.parametrize("number,func", [
    (3, acceptance.criterion_3),
    (4, acceptance.criterion_4),
    (5, acceptance.criterion_5),
    (6, acceptance.criterion_6),
    (7, acceptance.criterion_7),
    (8, acceptance.criterion_8),
    (9, acceptance.criterion_9),
])
def test_criteria_3_to_9(number, func):
    res = func()
    assert res.number == number
    record(number, res.title, res.passed)
    assert res.passed, res.details


def _selftest_bytes(tmp_path, tag):
    out = tmp_path / f"selftest_{tag}.json"
    proc = subprocess.run([sys.executable, "-m", "kron.cli", "selftest", "--quick", "--out", str(out)],
                          capture_output=True, text=True)
    return proc.returncode, out.read_bytes()


def test_criterion_10_determinism_and_precision(tmp_path):
    code_a, first = _selftest_bytes(tmp_path, "a")
    code_b, second = _selftest_bytes(tmp_path, "b")
    identical = first == second
    monotone = acceptance.precision_monotonicity()
    report = json.loads(first)
    passed = identical and monotone.passed and code_a == code_b == 0 and report["ok"]
    record(10, "selftest reruns are byte-identical and precision doubling changes no exact value", passed)
    assert identical
    assert monotone.passed, monotone.details
    assert code_a == 0 and report["ok"], report["checks"]
