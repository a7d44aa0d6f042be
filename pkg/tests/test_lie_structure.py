import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from flagcontrol import weyl
from flagcontrol.flag_manifold import FlagSignature, act, distance, weyl_point
from flagcontrol.lie_structure import (CartanElement, ChamberError, LabelError, NotSplitError, eval_root,
                                       fixed_components, flag_type_of, simple_roots, split_decompose)


def traceless_symmetric(rng, n):
    x = rng.standard_normal((n, n))
    x = x + x.T
    return x - np.trace(x) / n * np.eye(n)


def test_roots():
    simple, positive = simple_roots(4)
    assert simple == [(1, 2), (2, 3), (3, 4)]
    assert len(positive) == 6
    H = CartanElement((3.0, 1.0, -1.0, -3.0))
    assert eval_root((1, 3), H) == 4.0


def test_cartan_validation():
    with pytest.raises(ValueError):
        CartanElement((1.0, 1.0))
    assert CartanElement((1.0, 0.0, -1.0)).in_closed_chamber()
    assert not CartanElement((0.0, 1.0, -1.0)).in_closed_chamber()


def test_flag_type_of():
    assert flag_type_of(CartanElement((1.0, 1.0, -2.0))) == {1}
    assert flag_type_of(CartanElement((2.0, -1.0, -1.0))) == {2}
    assert flag_type_of(CartanElement((0.0, 0.0, 0.0))) == {1, 2}
    assert flag_type_of(CartanElement((1.0, 0.0, -1.0))) == frozenset()
    with pytest.raises(ChamberError):
        flag_type_of(CartanElement((-1.0, 0.0, 1.0)))


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_split_round_trip_symmetric(n, seed):
    X = traceless_symmetric(np.random.default_rng(seed), n)
    dec = split_decompose(X)
    assert np.linalg.norm(dec.recompose() - X) <= 1e-9
    assert dec.H.in_closed_chamber()
    assert np.linalg.det(dec.g) > 0
    assert np.allclose(np.linalg.norm(dec.g, axis=0), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_split_round_trip_conjugated(n, seed):
    rng = np.random.default_rng(seed)
    vals = np.sort(rng.uniform(-3, 3, n))[::-1]
    vals -= vals.mean()
    P = rng.standard_normal((n, n)) + 3 * np.eye(n)
    X = P @ np.diag(vals) @ np.linalg.inv(P)
    dec = split_decompose(X)
    assert np.linalg.norm(dec.recompose() - X) <= 1e-8 * max(1, np.linalg.norm(X))
    assert np.allclose(dec.H.diag, vals, atol=1e-8)


def test_not_split():
    with pytest.raises(NotSplitError):
        split_decompose(np.array([[0.0, -1.0], [1.0, 0.0]]))
    with pytest.raises(NotSplitError):
        split_decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_regularity():
    assert split_decompose(np.diag([1.0, -1.0])).regular
    assert not split_decompose(np.diag([1.0, 1.0, -2.0])).regular


def test_fixed_points_projective_plane():
    # diag(2, 0, -2) on RP^2: the three coordinate axes
    dec = split_decompose(np.diag([2.0, 0.0, -2.0]))
    theta = [2]
    reps = weyl.coset_representatives(3, theta)
    comps = fixed_components(dec, theta, reps)
    sig = FlagSignature.from_theta(3, theta)
    lines = sorted(int(np.argmax(np.abs(c.point.frame[:, 0]))) for c in comps)
    assert lines == [0, 1, 2]
    for c in comps:
        assert c.dimension == 0
        assert distance(c.point, weyl_point(c.weyl_label, sig)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fixed_points_are_fixed(seed):
    rng = np.random.default_rng(seed)
    X = traceless_symmetric(rng, 3)
    dec = split_decompose(X)
    for theta in ([], [1], [2]):
        reps = weyl.coset_representatives(3, theta)
        for c in fixed_components(dec, theta, reps):
            assert distance(act(expm(0.7 * X), c.point), c.point) <= 1e-9
            assert c.contains(c.point)


def test_nonregular_components():
    # H = diag(1, 1, -2): Theta(H) = {1}, components indexed by W_H \ W
    X = np.diag([1.0, 1.0, -2.0])
    dec = split_decompose(X)
    blocks = weyl.double_cosets(3, [1], [])
    reps = [weyl.minimal_representative(b) for b in blocks]
    comps = fixed_components(dec, [], reps)
    assert len(comps) == 3
    assert sorted(c.dimension for c in comps) == [1, 1, 1]
    # rotating inside the eigenplane keeps a point in its component, and fixed
    c = comps[0]
    t = 0.4
    R = np.array([[np.cos(t), -np.sin(t), 0], [np.sin(t), np.cos(t), 0], [0, 0, 1]])
    moved = act(R, c.point)
    assert c.contains(moved)
    assert distance(act(expm(X), moved), moved) <= 1e-9
    assert sum(comp.contains(moved) for comp in comps) == 1


def test_label_mismatch():
    dec = split_decompose(np.diag([1.0, 0.0, -1.0]))
    with pytest.raises(LabelError):
        fixed_components(dec, [2], [weyl.identity(3)])
