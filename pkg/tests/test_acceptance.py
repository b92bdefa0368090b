"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import pytest

from addcomb import harmonic
from addcomb.acceptance import CRITERIA, crit_harmonic, run_criterion, select


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    res = run_criterion(number)
    print(res.line)
    assert res.passed, res.line


def test_sign_flipped_convolution_is_caught():
    def flipped(f, g):
        out = harmonic.convolve(f, g)
        return harmonic.DenseFunction(out.group, -out.values)

    worst = crit_harmonic(trials=5, convolve=flipped)
    assert worst["adjoint"] > 1e-10 and worst["convolution"] > 1e-10


def test_scope_selection():
    assert select(["bohr"]) == [2, 3]
    assert select(["7"]) == [7]
    assert select(None) == sorted(CRITERIA)
