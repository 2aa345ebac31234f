import pytest

from ndr_stats import GammaPairParams

_ACCEPTANCE = []


@pytest.fixture
def acceptance_log():
    """Record one line per acceptance criterion for the terminal summary."""

    def record(criterion: str, passed: bool, detail: str = ""):
        _ACCEPTANCE.append((criterion, passed, detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}  {detail}")


@pytest.fixture
def illustration_gamma():
    """k = 12, sigma = 2.88, rho = 0.64: the Gamma-case illustration values."""
    return GammaPairParams(sigma=2.88, rho=0.64, k=12)
