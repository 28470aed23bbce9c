"""Reference-value acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured values,
even when output capture is on.
"""
import pytest

from upbdimer import acceptance


@pytest.mark.parametrize("key", list(acceptance.CHECKS))
def test_criterion(key, capsys):
    result = acceptance.CHECKS[key]()
    with capsys.disabled():
        print(f"\n[{'PASS' if result.passed else 'FAIL'}] {result.name}: {result.detail}")
    assert result.passed, result.detail
