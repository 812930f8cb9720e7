import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion number")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _CRITERIA.setdefault(mark.args[0], {"title": mark.args[1], "ok": True, "ran": False})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call" and report.passed:
        return
    entry = _CRITERIA[mark.args[0]]
    entry["ran"] = entry["ran"] or report.when == "call"
    if report.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        entry = _CRITERIA[num]
        status = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {status}  {entry['title']}")
