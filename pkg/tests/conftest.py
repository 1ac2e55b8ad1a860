import os

import pytest

# acceptance results collected by test_acceptance.py: {index: (ok, message)}
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {msg}")


@pytest.fixture
def golden_regen():
    return bool(os.environ.get("FRACGEOM_REGEN_GOLDEN"))
