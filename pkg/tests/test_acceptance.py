"""Acceptance criteria 1-10 at their stated sample sizes, tolerances and
runtime budgets. Each criterion prints one PASS/FAIL line, repeated in the
terminal summary."""

import pytest

from yuletree import acceptance

RESULTS = []


@pytest.mark.acceptance
@pytest.mark.parametrize("number", [c[0] for c in acceptance.CRITERIA])
def test_criterion(number):
    res = acceptance.run_criterion(number)
    RESULTS.append(res)
    for r in res.reports:
        print("    " + r.line())
    print(res.line())
    failed = [r.line() for r in res.reports if not r.passed]
    assert res.passed, "\n".join(failed) or f"over the {res.budget:.0f}s budget ({res.seconds:.1f}s)"
