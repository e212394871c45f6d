import pytest

from fundus_select.io import fixture_text, read_runs


@pytest.fixture
def table1_records():
    return read_runs(fixture_text("table1_runs.csv"))


@pytest.fixture
def table2_records():
    return read_runs(fixture_text("table2_runs.csv"))


@pytest.fixture
def baseline_record():
    return read_runs(fixture_text("baseline.csv"))[0]


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the status follows the test outcome."""
    entry = {"name": request.node.name, "detail": ""}
    ACCEPTANCE_LINES.append(entry)

    def note(detail):
        entry["detail"] = detail

    yield note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call":
        for entry in ACCEPTANCE_LINES:
            if entry["name"] == item.name and "status" not in entry:
                entry["status"] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    lines = [e for e in ACCEPTANCE_LINES if "status" in e]
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for e in lines:
        terminalreporter.write_line(f"{e['status']}  {e['name']}  {e['detail']}")
