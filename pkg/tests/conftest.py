import pytest

from dpstats.privacy import RandomSource

GOLDEN_SEED = 20240601


@pytest.fixture
def rng():
  return RandomSource(12345)


# Acceptance criteria report one line each at the end of the run.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
  if ACCEPTANCE_LINES:
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
      terminalreporter.write_line(line)
