"""Acceptance battery: one parametrized case per criterion, tolerances pinned inside each check."""

import pytest

from dobrushin.suite import CHECKS, run_check


@pytest.mark.parametrize("cid", [c[0] for c in CHECKS], ids=[f"{c[0]:02d}-{c[1].replace(' ', '-')}" for c in CHECKS])
def test_acceptance(cid):
    res = run_check(cid)
    print(res.line())
    assert res.passed, res.detail
