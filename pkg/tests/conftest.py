"""Shared test plumbing: collect acceptance-criterion verdict lines and
print them as a scoreboard after the run (pytest's capture would otherwise
swallow writes made while a test is executing)."""

SCOREBOARD: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not SCOREBOARD:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in SCOREBOARD:
        terminalreporter.write_line(line)
