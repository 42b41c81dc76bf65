def pytest_terminal_summary(terminalreporter, config):
    import test_acceptance

    lines = config.stash.get(test_acceptance.LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
