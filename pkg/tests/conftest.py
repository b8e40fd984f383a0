import sys
from pathlib import Path

# make the shared oracle helpers importable as a plain module
sys.path.insert(0, str(Path(__file__).parent))

import pytest

from rnns.corpus import corpus_from_names, mine_names
from rnns.datasets import generate_dataset
from rnns.victim import TrainConfig, train_toy


@pytest.fixture(scope="session")
def small_data():
    return generate_dataset(4, 20, "java", 5)


@pytest.fixture(scope="session")
def small_model(small_data):
    return train_toy(small_data, TrainConfig(epochs=200))


@pytest.fixture(scope="session")
def small_corpus():
    return corpus_from_names(mine_names(generate_dataset(4, 60, "java", 6), "java"), "java")


# acceptance verdicts, one line per criterion, repeated in the terminal summary
# so they are visible even when test output is captured
CRITERIA: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
