import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernel_pe.dictionary import Dictionary, Projection, is_novel
from kernel_pe.kernel import EmptyDictionaryError, KernelSpec, StateAction, gram_matrix
from kernel_pe.linalg import NumericalDriftError, SingularGrowthError

from conftest import random_points


def test_self_projection(spec):
    d = Dictionary(spec)
    x = StateAction.make([0.2, 0.7], 1)
    d.seed(x)
    p = d.project(x)
    np.testing.assert_allclose(p.a, [1.0])
    assert p.delta == 0.0


def test_half_correlated_projection():
    # choose the distance so that k = 0.5 exactly
    h = 5.0
    dist = np.sqrt(np.log(2.0) / h)
    d = Dictionary(KernelSpec(h))
    d.seed(StateAction.make([0.0], 0))
    p = d.project(StateAction.make([dist], 0))
    np.testing.assert_allclose(p.a, [0.5], rtol=1e-12)
    assert p.delta == pytest.approx(0.75, rel=1e-12)


def test_projection_matches_dense(spec, rng):
    d = Dictionary(spec, tol1=0.0)
    pts = random_points(rng, 3)
    for x in pts:
        d.grow(x)
    q = random_points(rng, 1)[0]
    G = gram_matrix(spec, pts)
    k = gram_matrix(spec, pts, [q])[:, 0]
    p = d.project(q)
    assert p.delta == pytest.approx(1.0 - k @ np.linalg.solve(G, k), abs=1e-12)


def test_novelty_is_strict():
    mk = lambda delta: Projection(np.zeros(1), delta, np.zeros(1))
    assert not is_novel(mk(0.0), 0.1)
    assert is_novel(mk(0.75), 0.1)
    assert not is_novel(mk(0.1), 0.1)


def test_orthogonal_growth(spec):
    d = Dictionary(spec)
    d.seed(StateAction.make([0.5], 0))
    d.grow(StateAction.make([0.5], 1))
    np.testing.assert_array_equal(d.kmm_inv, np.eye(2))


def test_growth_with_cross_term():
    h = 5.0
    dist = np.sqrt(np.log(2.0) / h)
    d = Dictionary(KernelSpec(h))
    d.seed(StateAction.make([0.0], 0))
    d.grow(StateAction.make([dist], 0))
    np.testing.assert_allclose(d.kmm_inv, np.linalg.inv([[1.0, 0.5], [0.5, 1.0]]), atol=1e-12)


def test_sequential_growth_rebuilds(spec, rng):
    d = Dictionary(spec, tol1=0.0)
    for x in random_points(rng, 5):
        d.grow(x)
    np.testing.assert_allclose(d.kmm_inv @ d.gram(), np.eye(5), atol=1e-8)
    assert d.rebuild_check() < 1e-8


def test_rebuild_check_detects_drift(spec, rng):
    d = Dictionary(spec)
    for x in random_points(rng, 3):
        d.grow(x)
    d.kmm_inv = d.kmm_inv + 1e-3
    with pytest.raises(NumericalDriftError):
        d.rebuild_check()


def test_duplicate_is_rejected(spec):
    d = Dictionary(spec)
    x = StateAction.make([0.1, 0.1], 0)
    d.seed(x)
    with pytest.raises(SingularGrowthError):
        d.grow(StateAction.make([0.1, 0.1], 0))
    assert d.m == 1


def test_empty_dictionary(spec):
    d = Dictionary(spec)
    with pytest.raises(EmptyDictionaryError):
        d.project(StateAction.make([0.0], 0))
    d.seed(StateAction.make([0.0], 0))
    with pytest.raises(ValueError):
        d.seed(StateAction.make([1.0], 0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.9))
def test_invariants_along_a_stream(seed, tol1):
    rng = np.random.default_rng(seed)
    spec = KernelSpec(5.0)
    d = Dictionary(spec, tol1=tol1)
    sizes = []
    for x in random_points(rng, 40):
        if d.m == 0:
            d.seed(x)
        else:
            p = d.project(x)
            assert 0.0 <= p.delta <= 1.0
            if d.is_novel(p):
                assert p.delta > tol1
                d.grow(x, p)
                assert d.project(x).delta <= 1e-8
        sizes.append(d.m)
    assert sizes == sorted(sizes)
    for c in d.centers:
        assert d.project(c).delta <= 1e-8


def test_csv_and_copy(spec, tmp_path):
    d = Dictionary(spec)
    d.seed(StateAction.make([0.0, 1.0], 1), step=0)
    d.grow(StateAction.make([1.0, 0.0], 0), step=7)
    d.to_csv(tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "index,step,action,s0,s1"
    assert lines[2] == "1,7,0,1.0,0.0"
    c = d.copy()
    c.grow(StateAction.make([0.5, 0.5], 0))
    assert d.m == 2 and c.m == 3
