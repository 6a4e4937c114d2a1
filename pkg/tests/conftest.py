import numpy as np
import pytest

from gwcrt.offspring import geometric_offspring, stable_offspring
from gwcrt.rng import make_rng


@pytest.fixture
def geo():
    return geometric_offspring()


@pytest.fixture
def st15():
    return stable_offspring(1.5)


@pytest.fixture
def rng(request):
    # one stream per test, stable across runs
    key = sum(ord(c) for c in request.node.name)
    return make_rng(20240611, key)


def random_tree_counts(rng, n):
    """Random valid children-count sequence of size n (cycle lemma)."""
    k = rng.multinomial(n - 1, np.ones(n) / n)
    w = np.concatenate([[0], np.cumsum(k - 1)])
    g = int(np.argmin(w))
    return np.roll(k, -g)
