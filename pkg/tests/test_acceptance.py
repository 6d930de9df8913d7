"""The twelve acceptance gates at their stated tolerances.

Each result line is collected and printed in the terminal summary under
"acceptance criteria", so a plain ``pytest tests/test_acceptance.py`` shows
one PASS/FAIL line per criterion.
"""
import pytest

from rittlab.acceptance import CRITERIA, run_criterion

from conftest import ACCEPTANCE_KEY


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, corpus, request):
    result = run_criterion(number, corpus)
    request.config.stash[ACCEPTANCE_KEY][number] = result
    print(result.line())
    assert result.passed, result.line()
