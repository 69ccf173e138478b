import pytest

CRITERIA = {
    "A1": "Lax identity",
    "A2": "normalization calibration",
    "A3": "degenerate integrability",
    "A4": "angle linearity",
    "A5": "degeneration slope",
    "A6": "order of accuracy",
    "A7": "KKS identities",
    "A8": "RS reconstruction",
    "A9": "fiber dimensions and commutation",
    "A10": "flow commutation and group law",
}

_outcomes = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when == "teardown":
        return
    if call.when == "setup" and call.excinfo is None:
        return
    ok = call.excinfo is None
    key = marker.args[0]
    _outcomes[key] = _outcomes.get(key, True) and ok


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for key, name in CRITERIA.items():
        if key in _outcomes:
            status = "PASS" if _outcomes[key] else "FAIL"
        else:
            status = "NOT RUN"
        terminalreporter.write_line(f"{key:>3} {name}: {status}")
