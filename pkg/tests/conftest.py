import pytest

from bandlab import isotropic_gaussian, synth_strict

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def band_half_target():
    """K=1 strict cosine mixture with B=0.5, J=8, H=1."""
    return synth_strict(1, 0.5, 8, 1.0, seed=0)


@pytest.fixture(scope="session")
def std_normal():
    return isotropic_gaussian(1, 1.0)
