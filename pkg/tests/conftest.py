import pytest

from sffbound.syk import build_syk_model, subsystem_fock_projectors

_CRITERIA = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    cid = getattr(report, "criterion", None)
    if cid is None:
        return
    key, text = cid
    ok = report.outcome == "passed"
    prev_ok, failed = _CRITERIA.get(key, (text, True, []))[1:]
    if not ok and "[" in report.nodeid:
        failed.append(report.nodeid.rsplit("[", 1)[1].rstrip("]"))
    _CRITERIA[key] = (text, prev_ok and ok, failed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = (str(m.args[0]), m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")

    def order(k):
        num = "".join(ch for ch in k if ch.isdigit())
        return (int(num) if num else 0, k)

    for key in sorted(_CRITERIA, key=order):
        text, ok, failed = _CRITERIA[key]
        extra = f"  (failing cases: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {key:<4} {'PASS' if ok else 'FAIL'}  {text}{extra}")


@pytest.fixture(scope="session")
def syk10():
    """The N=10, q=4, J=1, seed-0 realization used throughout."""
    return build_syk_model(10, 4, 1.0, 0)


@pytest.fixture(scope="session")
def syk10_fock(syk10):
    return subsystem_fock_projectors(syk10, 7)
