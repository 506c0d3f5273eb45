def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay the one-line-per-criterion acceptance checklist."""
    try:
        from test_acceptance import REPORT_LINES
    except ImportError:
        return
    if REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(REPORT_LINES):
            terminalreporter.write_line(line)
