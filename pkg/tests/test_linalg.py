import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernel_pe.linalg import (
    SingularGrowthError,
    SingularUpdateError,
    grow_inverse,
    grow_inverse_asym,
    inverse_drift,
    singularity_floor,
    sm_update,
)


def well_conditioned(rng, n):
    A = rng.normal(size=(n, n))
    return A @ A.T + n * np.eye(n)


def test_sm_example():
    out = sm_update(np.eye(2), np.array([1.0, 0.0]))
    np.testing.assert_allclose(out, np.diag([0.5, 1.0]))


def test_sm_zero_vector_is_noop(rng):
    B_inv = np.linalg.inv(well_conditioned(rng, 3))
    np.testing.assert_array_equal(sm_update(B_inv, np.zeros(3)), B_inv)


def test_sm_matches_dense(rng):
    B = well_conditioned(rng, 4)
    u, v = rng.normal(size=4), rng.normal(size=4)
    got = sm_update(np.linalg.inv(B), u, v)
    np.testing.assert_allclose(got, np.linalg.inv(B + np.outer(u, v)), atol=1e-10)


def test_sm_singular():
    # I - e1 e1^T is singular
    with pytest.raises(SingularUpdateError):
        sm_update(np.eye(2), np.array([1.0, 0.0]), np.array([-1.0, 0.0]))


def test_sm_shape_check():
    with pytest.raises(ValueError):
        sm_update(np.eye(2), np.ones(3))


def test_asym_form_agrees_with_symmetric(rng):
    B_inv = np.linalg.inv(well_conditioned(rng, 5))
    u = rng.normal(size=5)
    np.testing.assert_allclose(sm_update(B_inv, u, u.copy()), sm_update(B_inv, u), rtol=0, atol=0)


@settings(max_examples=40)
@given(st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_sm_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    B = well_conditioned(rng, n)
    u, v = rng.normal(size=n) / np.sqrt(n), rng.normal(size=n) / np.sqrt(n)
    M = B + np.outer(u, v)
    if abs(1 + v @ np.linalg.solve(B, u)) < 1e-3:
        return
    out = sm_update(np.linalg.inv(B), u, v)
    assert np.linalg.norm(M @ out - np.eye(n)) <= 1e-8


def test_grow_example():
    inv, delta_b = grow_inverse(np.array([[1.0]]), np.array([0.0]), 2.0)
    np.testing.assert_allclose(inv, np.diag([1.0, 0.5]))
    assert delta_b == 2.0


def test_grow_degenerate_border():
    B_inv = np.array([[0.5]])
    b = np.array([1.0])
    with pytest.raises(SingularGrowthError):
        grow_inverse(B_inv, b, float(b @ B_inv @ b))


def test_grow_matches_dense(rng):
    B = well_conditioned(rng, 3)
    b = rng.normal(size=3)
    b_star = b @ np.linalg.solve(B, b) + 0.5
    inv, delta_b = grow_inverse(np.linalg.inv(B), b, b_star)
    full = np.block([[B, b[:, None]], [b[None, :], np.array([[b_star]])]])
    assert delta_b > 0.1
    np.testing.assert_allclose(inv, np.linalg.inv(full), atol=1e-10)


def test_grow_asym_matches_dense(rng):
    B = rng.normal(size=(4, 4)) + 4 * np.eye(4)
    c, r = rng.normal(size=4), rng.normal(size=4)
    inv, _ = grow_inverse_asym(np.linalg.inv(B), c, r, 3.0)
    full = np.block([[B, c[:, None]], [r[None, :], np.array([[3.0]])]])
    np.testing.assert_allclose(inv, np.linalg.inv(full), atol=1e-10)


@settings(max_examples=30)
@given(st.integers(1, 8), st.floats(0.01, 5.0), st.integers(0, 2**32 - 1))
def test_grow_keeps_spd(n, excess, seed):
    rng = np.random.default_rng(seed)
    B = well_conditioned(rng, n)
    b = rng.normal(size=n)
    inv, delta_b = grow_inverse(np.linalg.inv(B), b, b @ np.linalg.solve(B, b) + excess)
    assert delta_b > 0
    assert np.linalg.eigvalsh((inv + inv.T) / 2).min() > 0


def test_floor_and_drift():
    assert singularity_floor(np.eye(3)) == pytest.approx(4e-12)
    assert singularity_floor(np.empty((0, 0))) == 1e-12
    assert inverse_drift(np.eye(2), np.eye(2)) == 0.0
