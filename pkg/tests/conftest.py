import numpy as np
import pytest

from kernel_pe.kernel import KernelSpec, StateAction


@pytest.fixture
def spec():
    return KernelSpec(h=5.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_points(rng, n, dim=2, n_actions=2):
    return [StateAction.make(rng.uniform(size=dim), rng.integers(n_actions)) for _ in range(n)]
