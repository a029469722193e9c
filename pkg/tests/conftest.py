import pytest

from gapwatch.simulator import LeadConfig, SimConfig, run

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def default_result():
    """One run of the default oscillation scenario, shared across modules."""
    return run(SimConfig())


@pytest.fixture
def report(request):
    """Record a pass/fail line for an acceptance criterion."""

    def _report(number, title, ok, detail=""):
        _ACCEPTANCE[number] = (title, bool(ok), detail)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE, key=lambda n: (isinstance(n, str), str(n))):
        title, ok, detail = _ACCEPTANCE[number]
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {number}. {title}" if isinstance(number, int) else f"[{number}] {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def constant_lead(tmp_path_factory):
    """Leader cruising at 20 m/s: a single zero-acceleration sample, padded by the simulator."""
    path = tmp_path_factory.mktemp("lead") / "constant.csv"
    path.write_text("t,a\n0,0\n")
    return LeadConfig(profile=str(path), v0=20.0, x0=0.0)
