import sys
from pathlib import Path

import numpy as np
import pytest

# Add repository root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from markov.chain import TransitionMatrix


def two_state(epsilon: float) -> TransitionMatrix:
    return TransitionMatrix([[1 - epsilon, epsilon], [epsilon, 1 - epsilon]])


@pytest.fixture
def lazy_cycle_chain():
    """4-state cycle 0 -> 2 -> 1 -> 3 -> 0 with self-loops, every transition 0.5"""
    P = np.zeros((4, 4))
    for x, successor in [(0, 2), (2, 1), (1, 3), (3, 0)]:
        P[x, x] = 0.5
        P[x, successor] = 0.5
    return TransitionMatrix(P)


@pytest.fixture
def eps_chain():
    return two_state


@pytest.fixture
def golden_mean_chain():
    return TransitionMatrix([[0.5, 0.5], [1.0, 0.0]])


@pytest.fixture
def permutation_chain():
    return TransitionMatrix(np.eye(3)[[1, 2, 0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def leaky_cycle_chain(lazy_cycle_chain):
    """Lazy cycle with a transition 0 -> 1 below the positivity threshold"""
    P = lazy_cycle_chain.rows.copy()
    P[0, 0] = 0.5 - 9e-13
    P[0, 1] = 9e-13
    return TransitionMatrix(P)
