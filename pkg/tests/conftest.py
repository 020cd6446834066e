import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def criterion(record_property):
    """Tag an acceptance test; the line is printed in the terminal summary."""

    def tag(number, text):
        record_property("criterion", f"{number:>2}. {text}")

    return tag


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" in props and rep.when in ("call", "setup"):
                if rep.when == "setup" and outcome != "skipped":
                    continue
                lines.append((props["criterion"], outcome.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for text, outcome in sorted(lines):
            terminalreporter.write_line(f"[{'PASS' if outcome == 'PASSED' else outcome}] {text}")
