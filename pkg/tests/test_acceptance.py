"""The twelve acceptance criteria, one test each.

A pass/fail line per criterion is printed in the terminal summary.
"""
import pytest

from polyspec import validation

CHECKS = validation.ALL


@pytest.mark.parametrize("check", CHECKS, ids=[c.title for c in CHECKS])
def test_criterion(check, request):
    res = check()
    request.config.stash.setdefault(LINES, []).append(res.line())
    assert res.passed, res.line()


LINES = pytest.StashKey[list]()
