import numpy as np
import pytest

from senescent_ga.tsp import TspInstance, generate_instance


@pytest.fixture(scope="session")
def inst100():
    return generate_instance(1, 100, 1000.0)


@pytest.fixture(scope="session")
def small_inst():
    return generate_instance(11, 12, 100.0)


@pytest.fixture
def circle_inst():
    # the identity tour is optimal for cities on a circle
    theta = np.linspace(0, 2 * np.pi, 40, endpoint=False)
    return TspInstance(np.column_stack([100 * np.cos(theta), 100 * np.sin(theta)]), name="circle40")


def pytest_configure(config):
    config._criteria_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criteria_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for the terminal summary, then assert."""
    def check(label: str, passed: bool, detail: str):
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        request.config._criteria_lines.append(line)
        print(line)
        assert passed, line
    return check
