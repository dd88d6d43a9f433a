import numpy as np
import pytest

from skillforge.corpus import skill
from skillforge.trajectory import DemoSet, Trajectory


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def sine_demo():
    return skill("sine", 100)


@pytest.fixture
def noisy_sines():
    rng = np.random.default_rng(3)
    return DemoSet([skill("sine", 80, rng, noise=0.01) for _ in range(3)])


def line(n=50, slope=0.5):
    s = np.linspace(0.0, 1.0, n)
    return Trajectory(np.c_[s, slope * s], s)
