from tests import acceptance_report


def pytest_terminal_summary(terminalreporter):
    if acceptance_report.LINES:
        terminalreporter.section('acceptance criteria')
        for line in sorted(acceptance_report.LINES):
            terminalreporter.write_line(line)
