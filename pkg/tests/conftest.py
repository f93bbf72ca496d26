import copy

import pytest
import yaml

from beaconsync.experiment.config import bundled_path, scenario_from_dict


def bundled_dict(name: str) -> dict:
    with open(bundled_path(name), encoding="utf-8") as f:
        return yaml.safe_load(f)


def scenario(name: str, **overrides):
    """Bundled scenario with top-level keys replaced."""
    data = copy.deepcopy(bundled_dict(name))
    data.update(overrides)
    return scenario_from_dict(data, base_dir=str(bundled_path(name).parent))


@pytest.fixture
def ap1():
    from beaconsync.frames import MacAddress

    return MacAddress("02:00:00:00:00:01")


@pytest.fixture
def ap2():
    from beaconsync.frames import MacAddress

    return MacAddress("02:00:00:00:00:02")


# -- acceptance reporting -----------------------------------------------------
# Tests marked ``criterion(n, label)`` get one PASS/FAIL line in the terminal
# summary, derived from the test outcome itself.

_criteria: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    number, label = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    _criteria[number] = (label, "PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        label, verdict, detail = _criteria[number]
        line = f"criterion {number}: {verdict}  {label}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
