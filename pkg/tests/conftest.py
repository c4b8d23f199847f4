import pytest

from hpm_ocp import HpmConfig, solve_hpm, spacecraft_problem

_acceptance_key = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_acceptance_key, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """``acceptance(label, ok, detail)`` prints and records one verdict line."""
    lines = request.config.stash.setdefault(_acceptance_key, [])

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        print(line)
        lines.append(line)
        return ok

    return record


@pytest.fixture(scope="session")
def spacecraft():
    return spacecraft_problem()


@pytest.fixture(scope="session")
def spacecraft_solution(spacecraft):
    return solve_hpm(spacecraft, HpmConfig(epsilon=1e-12, grid_intervals=1000))
