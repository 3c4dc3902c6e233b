import pytest

from coordnet.evaluation import SynthConfig, generate_planted


@pytest.fixture(scope="session")
def planted():
    """Criterion-2 dataset: 1000 background, 5 x 20 planted, p_copy 0.9."""
    return generate_planted(SynthConfig(seed=0))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
