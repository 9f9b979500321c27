"""Acceptance gate: every criterion at its stated size and tolerance."""

import pytest

from brownmeasure.acceptance import CRITERIA, format_line


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    res = CRITERIA[number]("full")
    with capsys.disabled():
        print("\n" + format_line(res))
    assert res.passed, format_line(res)
