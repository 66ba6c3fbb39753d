import hypothesis

hypothesis.settings.register_profile(
    "default", deadline=None, max_examples=25, derandomize=True)
hypothesis.settings.load_profile("default")

# acceptance tests append (criterion, passed, detail) here; the summary
# is echoed at the end of the run so one line per criterion is always
# visible regardless of capture settings
ACCEPTANCE_LOG: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LOG:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status} {name}: {detail}")
