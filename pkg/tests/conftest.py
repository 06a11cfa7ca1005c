import ipaddress
import socket
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# The suite must pass offline: refuse any connection that is not loopback.
_real_connect = socket.socket.connect


def _guarded_connect(self, address):
    host = address[0] if isinstance(address, tuple) else address
    try:
        loopback = isinstance(host, str) and (host == "localhost" or ipaddress.ip_address(host).is_loopback)
    except ValueError:
        loopback = False
    if self.family == getattr(socket, "AF_UNIX", None) or loopback:
        return _real_connect(self, address)
    raise OSError(f"network access blocked during tests: {address!r}")


socket.socket.connect = _guarded_connect


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def golden(fixtures):
    d = fixtures / "golden"
    return (d / "travis.yml").read_text(), (d / "workflow.yml").read_text()


# --- acceptance summary --------------------------------------------------------

_acceptance: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion check")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    failed = call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception)
    if call.when == "call" or failed:
        previous = _acceptance.get(number, (title, "PASS"))[1]
        _acceptance[number] = (title, "FAIL" if failed or previous == "FAIL" else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, verdict = _acceptance[number]
        terminalreporter.write_line(f"{verdict} criterion {number}: {title}")
