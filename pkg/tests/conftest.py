import pytest

from cpsres import from_coefficients, point_mass


@pytest.fixture
def z2():
    return point_mass(2)


@pytest.fixture
def z3():
    return point_mass(3)


@pytest.fixture
def mixed():
    return from_coefficients({1: 0.5, 2: 0.4, 3: 0.1})


# One PASS/FAIL line per acceptance criterion in the terminal summary.
_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number n")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    n, title = mark.args
    entry = _criteria.setdefault(n, {"title": title, "failed": [], "ran": 0})
    entry["ran"] += 1
    if call.excinfo is not None:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        status = "FAIL" if e["failed"] else "PASS"
        line = f"criterion {n:2d}: {status}  {e['title']}"
        if e["failed"]:
            line += f"  (failing: {', '.join(e['failed'])})"
        tr.write_line(line)
