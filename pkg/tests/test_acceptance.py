"""Acceptance suite: one printed pass/fail line per criterion.

Tolerances are pinned in :mod:`hicontrast.acceptance`.  Run directly with
``python3 tests/test_acceptance.py`` or ``hicontrast --seed-check`` for the
summary without pytest.
"""

import pytest

from hicontrast.acceptance import CHECKS, format_line, run_all


@pytest.mark.parametrize("check", CHECKS, ids=lambda f: f.__name__.removeprefix("check_"))
def test_criterion(check, capsys):
    c = check()
    with capsys.disabled():
        print("\n" + format_line(c))
    assert c.passed, format_line(c)


if __name__ == "__main__":
    results = run_all(echo=print)
    print(f"{sum(c.passed for c in results)}/{len(results)} criteria passed")
