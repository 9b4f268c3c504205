import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=400, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for name, value in report.user_properties:
        if name == "criterion":
            number, title = value
            entry = _CRITERIA.setdefault(number, {"title": title, "outcomes": []})
            entry["outcomes"].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        outcomes = entry["outcomes"]
        if all(o == "passed" for o in outcomes):
            status = "PASS"
        elif any(o == "failed" for o in outcomes):
            status = "FAIL"
        else:
            status = "SKIP"
        terminalreporter.write_line(f"criterion {number:2d} {status}  {entry['title']}")
