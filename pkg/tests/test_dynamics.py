import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flagcontrol.dynamics import (BilinearSystem, ConfigError, ControlRange, RangeError, accessibility_diagnostic,
                                  backward_system, control_samples, control_word, drift_matrix, flow_point,
                                  lie_algebra_basis, load_system, transition_matrix)
from flagcontrol.flag_manifold import FlagPoint, FlagSignature, base_point, distance, random_frames

from oracles import rk4_word

A2 = np.diag([1.0, -1.0])
B2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def hyperbolic(U=0.3):
    return BilinearSystem(A2, (B2,), ControlRange([-U], [U]))


def test_range_validation():
    with pytest.raises(ConfigError):
        ControlRange([0.0], [1.0])
    with pytest.raises(ConfigError):
        ControlRange([-1.0, -1.0], [1.0])
    r = ControlRange([-1.0], [2.0])
    assert r.contains([2.0]) and not r.contains([2.1])
    assert r.is_interior([0.5]) and not r.is_interior([2.0])


def test_system_validation():
    with pytest.raises(ConfigError, match="traceless"):
        BilinearSystem(np.eye(2), (B2,), ControlRange([-1], [1]))
    with pytest.raises(ConfigError, match=r"B\[0\]"):
        BilinearSystem(A2, (np.eye(3),), ControlRange([-1], [1]))
    with pytest.raises(ConfigError, match="components"):
        BilinearSystem(A2, (B2,), ControlRange([-1, -1], [1, 1]))


@pytest.mark.parametrize("missing", ["A", "B", "range"])
def test_load_system_names_missing_field(missing):
    data = {"n": 2, "A": A2.tolist(), "B": [B2.tolist()], "range": {"lo": [-1], "hi": [1]}}
    del data[missing]
    with pytest.raises(ConfigError, match=f"'{missing}'"):
        load_system(data)


def test_load_system_bare_matrix_and_n_check():
    sys = load_system({"A": A2.tolist(), "B": B2.tolist(), "range": {"lo": [-1], "hi": [1]}})
    assert sys.m == 1 and sys.n == 2
    with pytest.raises(ConfigError, match="'n'"):
        load_system({"n": 3, "A": A2.tolist(), "B": B2.tolist(), "range": {"lo": [-1], "hi": [1]}})
    assert load_system(sys.to_json()).to_json() == sys.to_json()


def test_drift_and_range():
    sys = hyperbolic()
    assert np.allclose(drift_matrix(sys, 0.3), A2 + 0.3 * B2)
    with pytest.raises(RangeError):
        drift_matrix(sys, 0.31)


def test_control_samples():
    r = ControlRange([-1.0], [2.0])
    s1 = control_samples(r, 1)
    assert [float(c.u[0]) for c in s1] == [-1.0, 0.0, 2.0]
    assert [c.interior for c in s1] == [False, True, False]
    s3 = control_samples(r, 3)
    assert len(s3) == 7 and sum(c.interior for c in s3) == 5
    two = control_samples(ControlRange([-1, -1], [1, 1]), 1)
    assert len(two) == 9 and sum(c.interior for c in two) == 1
    with pytest.raises(ValueError):
        control_samples(r, 0)


def test_control_word_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        control_word([(0.0, 0.0)])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_flow_matches_rk4(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((3, 3))
    A -= np.trace(A) / 3 * np.eye(3)
    B = rng.standard_normal((3, 3))
    B -= np.trace(B) / 3 * np.eye(3)
    sys = BilinearSystem(A, (B,), ControlRange([-1], [1]))
    word = [(rng.uniform(-1, 1), rng.uniform(0.1, 0.8)) for _ in range(3)]
    x = FlagPoint(random_frames(3, 1, rng)[0], FlagSignature.from_theta(3, []))
    y = flow_point(sys, x, word)
    ref = rk4_word(A, (B,), word, x.frame, dt=2e-3)
    assert np.linalg.norm(y.frame - ref) <= 1e-8


def test_transition_composes_and_backward_inverts():
    sys = hyperbolic()
    w1, w2 = [(0.2, 0.3)], [(-0.1, 0.5)]
    g = transition_matrix(sys, w1 + w2)
    assert np.allclose(g, transition_matrix(sys, w2) @ transition_matrix(sys, w1))
    back = backward_system(sys)
    x = base_point(FlagSignature.from_theta(2, []))
    y = flow_point(sys, x, [(0.3, 1.0)])
    assert distance(flow_point(back, y, [(0.3, 1.0)]), x) <= 1e-12


def test_lie_algebra_basis():
    assert len(lie_algebra_basis([A2, B2])) == 3
    assert len(lie_algebra_basis([np.diag([1.0, 0, -1]), np.diag([0.0, 1, -1])])) == 2


def test_accessibility_diagnostic():
    rep = accessibility_diagnostic(hyperbolic(), FlagSignature.from_theta(2, []))
    assert rep.accessible and rep.lie_algebra_dim == 3 and rep.min_rank == 1
    # two commuting diagonal fields still span the tangent plane of RP^2 at generic lines
    diag = BilinearSystem(np.diag([2.0, 0, -2]), (np.diag([1.0, -2, 1]),), ControlRange([-1], [1]))
    assert accessibility_diagnostic(diag, FlagSignature.from_theta(3, [2])).accessible
    # a one-dimensional Lie algebra cannot
    flat = BilinearSystem(np.diag([2.0, 0, -2]), (np.diag([1.0, 0, -1]),), ControlRange([-1], [1]))
    rep = accessibility_diagnostic(flat, FlagSignature.from_theta(3, [2]))
    assert not rep.accessible and rep.min_rank == 1 and rep.manifold_dim == 2
