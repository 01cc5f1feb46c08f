import numpy as np
import pytest

from prefspace.datagen import SyntheticSpec, generate
from prefspace.embedding import EmbeddingConfig, embed_dataset
from prefspace.evaluation import estimate_sigma
from prefspace.models import sample_pool

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def small_scene():
    """Two-line scene with 80 genuine points and 80 anomalies, embedded continuously."""
    data = generate(SyntheticSpec(points_per_structure=40, seed=11))
    pool = sample_pool(data, 10 * data.n, np.random.default_rng(5))
    P = embed_dataset(data, pool, EmbeddingConfig(estimate_sigma(data), 3.0))
    return data, P


@pytest.fixture
def acceptance_log():
    def log(number, passed, detail):
        ACCEPTANCE_LINES.append(f"[criterion {number:>2}] {'PASS' if passed else 'FAIL'}  {detail}")

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("]")[0].split()[-1])):
            terminalreporter.write_line(line)
