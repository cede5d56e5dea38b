def pytest_terminal_summary(terminalreporter, exitstatus, config):
    import helpers

    if helpers.criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in helpers.criterion_lines:
            terminalreporter.write_line(line)
