import pytest

ACCEPTANCE_RESULTS = {}


@pytest.fixture
def acceptance(request):
    """Record one acceptance criterion; the outcome is printed in the terminal summary."""

    def record(number: int, title: str):
        ACCEPTANCE_RESULTS[number] = [title, False, request.node.nodeid]
        return ACCEPTANCE_RESULTS[number]

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        for entry in ACCEPTANCE_RESULTS.values():
            if entry[2] == item.nodeid:
                entry[1] = rep.passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, passed, _ = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}")
