import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kernel_pe.kernel import (
    DimensionMismatchError,
    EmptyDictionaryError,
    KernelSpec,
    StateAction,
    eval_kernel,
    eval_kernel_vector,
    gram_matrix,
    kernel_row,
)

from conftest import random_points

coords = st.floats(-3, 3, allow_nan=False)


def state_actions(dim=2):
    return st.builds(StateAction.make, arrays(np.float64, dim, elements=coords),
                     st.integers(0, 2))


def test_identity_is_one(spec):
    x = StateAction.make([0.3, -1.2], 1)
    assert eval_kernel(spec, x, x) == 1.0


def test_different_actions_give_zero(spec):
    assert eval_kernel(spec, StateAction.make([0.1], 0), StateAction.make([0.1], 1)) == 0.0


def test_lengthscale_example():
    spec = KernelSpec(h=5.0)
    v = eval_kernel(spec, StateAction.make([0.0], 0), StateAction.make([0.2], 0))
    assert v == pytest.approx(np.exp(-0.2), rel=1e-15)


def test_bad_spec():
    with pytest.raises(ValueError):
        KernelSpec(h=0.0)
    with pytest.raises(ValueError):
        KernelSpec(kind="polynomial")


def test_dimension_mismatch(spec):
    with pytest.raises(DimensionMismatchError):
        eval_kernel(spec, StateAction.make([0.0], 0), StateAction.make([0.0, 1.0], 0))
    with pytest.raises(DimensionMismatchError):
        kernel_row(5.0, np.zeros((2, 1)), np.zeros(2, dtype=int), np.zeros(2), 0)


def test_vector_examples(spec):
    x = StateAction.make([0.4, 0.4], 0)
    assert eval_kernel_vector(spec, [x], x).tolist() == [1.0]
    other = StateAction.make([0.4, 0.4], 1)
    assert eval_kernel_vector(spec, [x, other], x).tolist() == [1.0, 0.0]
    with pytest.raises(EmptyDictionaryError):
        eval_kernel_vector(spec, [], x)


def test_vector_matches_loop(spec, rng):
    centers = random_points(rng, 3)
    q = random_points(rng, 1)[0]
    expected = [eval_kernel(spec, c, q) for c in centers]
    np.testing.assert_allclose(eval_kernel_vector(spec, centers, q), expected, rtol=1e-14)


@given(state_actions(), state_actions())
def test_symmetric_and_bounded(x, y):
    spec = KernelSpec(h=5.0)
    kxy = eval_kernel(spec, x, y)
    assert kxy == eval_kernel(spec, y, x)
    assert 0.0 <= kxy <= 1.0
    if kxy == 1.0 and x.action == y.action:
        # exp underflows to exactly 1 only for tiny distances
        assert np.sum((x.state - y.state) ** 2) < 1e-15


@settings(max_examples=50)
@given(st.lists(state_actions(), min_size=1, max_size=10), st.floats(0.1, 20))
def test_gram_psd(points, h):
    G = gram_matrix(KernelSpec(h=h), points)
    np.testing.assert_array_equal(G, G.T)
    assert np.linalg.eigvalsh(G).min() >= -1e-10
