import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# criterion number -> list of (label, passed, detail); filled by test_acceptance
ACCEPTANCE = {}


class AcceptanceRecorder:
    def __call__(self, criterion, label, passed, detail=""):
        ACCEPTANCE.setdefault(criterion, []).append((label, bool(passed), detail))
        return bool(passed)


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        for label, passed, detail in ACCEPTANCE[criterion]:
            tag = "PASS" if passed else "FAIL"
            tr.write_line(f"[{tag}] criterion {criterion}: {label}" + (f" -- {detail}" if detail else ""))
