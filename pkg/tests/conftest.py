"""Shared test plumbing.

The acceptance tests register one line per criterion; the summary hook
prints them after the run so the verdicts are visible in plain pytest
output without -s.
"""

_CRITERION_LINES = {}


def record_criterion(number: int, passed: bool, detail: str = ""):
    verdict = "PASS" if passed else "FAIL"
    line = f"[criterion {number:2d}] {verdict}"
    if detail:
        line += f"  {detail}"
    _CRITERION_LINES[number] = line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERION_LINES):
        terminalreporter.write_line(_CRITERION_LINES[number])
