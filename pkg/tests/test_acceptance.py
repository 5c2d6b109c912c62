"""Acceptance suite: every check at its stated tolerance, one PASS/FAIL line each."""

import pytest

from tensorbodies.reproduce import CHECKS, run_check


@pytest.mark.parametrize("check_id", list(CHECKS))
def test_acceptance(check_id, capsys):
    result = run_check(check_id)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
