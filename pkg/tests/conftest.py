import pytest

from entswap.protocols import ProtocolConfig, run_qss_rounds
from entswap.qstate import RngStream, bell_pair_register

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load cached) numba kernels before anything is timed."""
    st = bell_pair_register([0, 0])
    st.measure_bell(0, 3, RngStream(0))
    st.project(1, 1, 0)
    run_qss_rounds(3, 4, ProtocolConfig(check_probability=0.5), RngStream(0))


@pytest.fixture
def rng():
    return RngStream(12345)


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
