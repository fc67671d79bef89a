import sys


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance checklist after the run, one line per criterion."""
    module = sys.modules.get("tests.test_acceptance")
    if module is not None and module.VERDICTS:
        terminalreporter.section("acceptance")
        for line in module.VERDICTS:
            terminalreporter.write_line(line)
