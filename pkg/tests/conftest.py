import numpy as np
import pytest

from ditraffic import EventDataset, JointDistribution, generate, paper_scenario_config

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def window_joint(rows):
    """Exact 4-variable table from {(x1, x2, y1, y2): prob}."""
    p = np.zeros(16)
    for (x1, x2, y1, y2), v in rows.items():
        p[x1 | x2 << 1 | y1 << 2 | y2 << 3] += v
    return JointDistribution(p)


def random_joint(rng, arity=4, sparse=False):
    alpha = rng.choice([0.1, 0.5, 1.0, 5.0])
    p = rng.dirichlet(np.full(2**arity, alpha))
    if sparse:
        p[rng.random(2**arity) < 0.5] = 0.0
        if p.sum() == 0:
            p[0] = 1.0
        p /= p.sum()
    return JointDistribution(p)


def random_dataset(rng, devices=3, events=40, slots=6, p=0.5):
    cube = (rng.random((devices, events, slots)) < p).astype(np.uint8)
    return EventDataset.from_array([f"d{m}" for m in range(devices)], cube)


@pytest.fixture(scope="session")
def paper_dataset():
    return generate(paper_scenario_config(10_000, seed=7))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
