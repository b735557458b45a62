import sys
from pathlib import Path

# make the oracles module importable regardless of the pytest invocation dir
sys.path.insert(0, str(Path(__file__).parent))

# acceptance criterion lines collected by tests/test_acceptance.py; printed
# after the run so they are visible whatever the capture mode
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
