"""Acceptance criteria 1-9 at their pinned tolerances.

Each test prints one PASS/FAIL line; the lines are repeated in the terminal summary."""
from __future__ import annotations

import pytest

from bwulab import suite


@pytest.fixture(scope="module")
def corpus():
    return suite.default_corpus()


@pytest.fixture
def report(acceptance_log):
    def _report(result):
        print(result.line())
        acceptance_log.append(result.line())
        assert result.passed, result.line()
    return _report


def test_criterion_1_reduction(corpus, report):
    report(suite.criterion_1(corpus))


def test_criterion_2_closed_forms(report):
    report(suite.criterion_2())


def test_criterion_3_brute_force_maximal(report):
    report(suite.criterion_3(20))


@pytest.mark.slow
def test_criterion_4_decomposition(corpus, report):
    report(suite.criterion_4(corpus))


def test_criterion_5_embedding(corpus, report):
    report(suite.criterion_5(corpus))


def test_criterion_6_sandwich(corpus, report):
    report(suite.criterion_6(corpus))


def test_criterion_7_hardy(report):
    report(suite.criterion_7())


def test_criterion_8_operators(corpus, report):
    report(suite.criterion_8(corpus))


def test_criterion_9_negative_fixture(corpus, report):
    report(suite.criterion_9(corpus))
