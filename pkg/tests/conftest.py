import pytest

from tmecor import build_kuhn


@pytest.fixture(scope="session")
def k3():
    return build_kuhn(3, 3)


@pytest.fixture(scope="session")
def k4():
    return build_kuhn(3, 4)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def acceptance():
    """Record one PASS/FAIL/SKIPPED line per acceptance criterion."""
    def record(n: int, status, detail: str):
        if not isinstance(status, str):
            status = "PASS" if status else "FAIL"
        _ACCEPTANCE[n] = f"criterion {n}: {status}  {detail}"
        print(_ACCEPTANCE[n])
        return status == "PASS"
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[n])
