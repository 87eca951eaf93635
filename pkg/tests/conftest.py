import pytest

_CRITERIA = []


@pytest.fixture
def criterion(request):
    """Record an acceptance criterion's outcome for the terminal summary.

    Usage: ``criterion(3, "oracle equivalence")`` at the top of the test;
    the verdict is taken from the test outcome itself.
    """
    entry = {}

    def declare(number, title):
        entry.update(number=number, title=title, nodeid=request.node.nodeid)
        _CRITERIA.append(entry)

    yield declare


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call":
        return
    for entry in _CRITERIA:
        if entry.get("nodeid") == item.nodeid:
            entry.setdefault("passed", True)
            entry["passed"] = entry["passed"] and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for e in sorted(_CRITERIA, key=lambda e: (e["number"], e["nodeid"])):
        verdict = "PASS" if e.get("passed") else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {e['number']:>2}. {e['title']}")
