import pytest

from rggloc import ModelParams, Norm, build_grid, derived_scales, tiny_grid

# one pass/fail line per acceptance criterion, echoed after the test summary so
# they are visible even when pytest captures stdout
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def l2_params():
    return ModelParams(150.0, 0.1, Norm("l2", 2))


@pytest.fixture(scope="session")
def l2_grid(l2_params):
    # m=50, |N_I|=109, tau_s=32, mu_s=490.5
    return build_grid(l2_params, s=5)


@pytest.fixture(scope="session")
def l2_scales(l2_grid):
    return derived_scales(l2_grid, delta_tilde=1.0)


@pytest.fixture(scope="session")
def tiny():
    # d=1, m=4, s=3 wrapped grid: every cell pair is adjacent
    return tiny_grid(Norm("linf", 1), m=4, s=3, n=4.0)
