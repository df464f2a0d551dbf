import contextlib

import pytest


def pytest_configure(config):
    config._acceptance = []


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for one acceptance criterion."""

    @contextlib.contextmanager
    def check(label: str):
        try:
            yield
        except BaseException as exc:
            request.config._acceptance.append(f"FAIL  {label}  ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})")
            raise
        request.config._acceptance.append(f"PASS  {label}")

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance", [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: s.split("AC", 1)[1]):
        terminalreporter.write_line(line)
