import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from chainlat import analysis, check_witness  # noqa: E402

WITNESSES = {"checked": 0, "rejected": []}
REPORT = []


@pytest.fixture(autouse=True)
def _check_every_witness(monkeypatch):
    """Every witness any analysis returns must pass the independent checker."""
    real = analysis.solve_max

    def checked(cs, config=None):
        res = real(cs, config)
        if res.witness is not None:
            WITNESSES["checked"] += 1
            if not check_witness(cs, res.witness):
                WITNESSES["rejected"].append(cs.chain)
                raise AssertionError(f"witness for chain {cs.chain} fails check_witness")
        return res
    monkeypatch.setattr(analysis, "solve_max", checked)
    yield


def report(line):
    REPORT.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not REPORT and not WITNESSES["checked"]:
        return
    terminalreporter.section("acceptance")
    for line in REPORT:
        terminalreporter.write_line(line)
    ok = not WITNESSES["rejected"]
    terminalreporter.write_line(
        f"witnesses over the whole run: {'PASS' if ok else 'FAIL'} "
        f"({WITNESSES['checked']} checked, {len(WITNESSES['rejected'])} rejected)")
