import logging

import numpy as np
import pytest

from flagcontrol import weyl
from flagcontrol.dynamics import BilinearSystem, ControlRange, control_samples
from flagcontrol.flag_manifold import FlagSignature, discretize
from flagcontrol.setfinder import (CellGraph, LabeledSet, LabelingError, SetFinderError, StructureError,
                                   build_graph, chain_control_sets, control_sets, core_points,
                                   domain_of_attraction, effective, equilibrium_points, flag_type_from_partial, label_sets,
                                   semigroup_flag_type, sink_sets)

A2 = np.diag([1.0, -1.0])
B2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def system(U):
    return BilinearSystem(A2, (B2,), ControlRange([-U], [U]))


@pytest.fixture(scope="module")
def rp1():
    return discretize(FlagSignature.from_theta(2, []), 180)


def fake_graph(cx, edges, tau=0.5, eps=0.0):
    src, dst = zip(*edges) if edges else ((), ())
    z = np.array(src, dtype=np.int64)
    return CellGraph(cx, tau, eps, [np.zeros(1)], 1, 0, z, np.zeros(len(z), dtype=np.int64),
                     np.array(dst, dtype=np.int64))


def test_zero_dynamics_self_loops(rp1):
    sys = BilinearSystem(np.zeros((2, 2)), (np.zeros((2, 2)),), ControlRange([-1], [1]))
    g = build_graph(sys, rp1, 0.5, 0.0, control_samples(sys.range, 1), 3)
    assert all(s == d for s, _, d in g.edge_set())
    assert len(g.adjacency.nonzero()[0]) == len(rp1)


def test_edges_monotone_in_epsilon(rp1):
    sys = system(0.3)
    ctr = control_samples(sys.range, 1)
    sizes = []
    prev = set()
    for eps in (0.0, rp1.radius, 3 * rp1.radius):
        edges = build_graph(sys, rp1, 0.5, eps, ctr, 3).edge_set()
        assert prev <= edges
        prev = edges
        sizes.append(len(edges))
    assert sizes == sorted(sizes)


def test_build_graph_validation(rp1):
    sys = system(0.3)
    with pytest.raises(SetFinderError):
        build_graph(sys, rp1, 0.5, 0.0, [], 3)
    with pytest.raises(SetFinderError):
        build_graph(sys, rp1, 0.0, 0.0, [0.0], 3)
    with pytest.raises(SetFinderError):
        build_graph(sys, rp1, 0.5, -1.0, [0.0], 3)
    with pytest.raises(SetFinderError):
        build_graph(sys, rp1, 0.5, 0.0, [0.0], 0)


def test_deterministic_and_worker_independent(rp1):
    sys = system(0.3)
    ctr = control_samples(sys.range, 2)
    a = build_graph(sys, rp1, 0.5, rp1.radius, ctr, 4, seed=5)
    b = build_graph(sys, rp1, 0.5, rp1.radius, ctr, 4, seed=5, workers=3)
    assert np.array_equal(a.src, b.src) and np.array_equal(a.dst, b.dst) and np.array_equal(a.ctrl, b.ctrl)


def test_hyperbolic_cells_near_e1_self_loop(rp1):
    # the fixed points of all controls stay well inside cell 0
    sys = system(0.01)
    ctr = control_samples(sys.range, 1)
    g = build_graph(sys, rp1, 0.5, 0.0, ctr, 1)
    loops = {(s, k) for s, k, d in g.edge_set() if s == d}
    assert all((0, k) in loops for k in range(len(ctr)))


def test_rotation_single_control_set(rp1, caplog):
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    sys = BilinearSystem(rot, (rot,), ControlRange([-0.05], [0.05]))
    ctr = control_samples(sys.range, 1)
    sets = control_sets(build_graph(sys, rp1, 0.5, 0.0, ctr, 2))
    assert len(sets) == 1 and sets[0].cells == frozenset(range(len(rp1)))
    with caplog.at_level(logging.WARNING):
        assert core_points(sys, [], ctr) == []
    assert "no interior control" in caplog.text


def test_core_points_sl2():
    cores = core_points(system(0.3), [], control_samples(system(0.3).range, 1))
    assert len(cores) == 2
    by_label = {c.label: c.point.frame[:, 0] for c in cores}
    assert np.allclose(np.abs(by_label[weyl.identity(2)]), [1, 0])
    assert np.allclose(np.abs(by_label[weyl.longest_element(2)]), [0, 1])


def test_core_points_projective_plane():
    sys = BilinearSystem(np.diag([2.0, 0, -2]), (np.zeros((3, 3)),), ControlRange([-1], [1]))
    cores = core_points(sys, [2], [0.0])
    axes = sorted(int(np.argmax(np.abs(c.point.frame[:, 0]))) for c in cores)
    assert axes == [0, 1, 2]
    assert {c.label for c in cores} == set(weyl.coset_representatives(3, [2]))
    assert len(equilibrium_points(sys, FlagSignature.from_theta(3, [2]), [-1.0, 0.0, 1.0])) == 3


def test_labels_and_flag_types(rp1):
    for U, count, theta_s in ((0.3, 2, set()), (2.0, 1, {1})):
        sys = system(U)
        ctr = control_samples(sys.range, 1)
        cores = core_points(sys, [], ctr)
        g = build_graph(sys, rp1, 0.5, 0.0, ctr, 4, extra_points=[c.point for c in cores])
        conf = build_graph(sys, rp1, 2.0, 0.0, ctr, 4, extra_points=[c.point for c in cores])
        found = label_sets(control_sets(g, conf), cores, rp1)
        sets = effective(found)
        assert len(sets) == count
        # unlabeled leftovers are boundary-layer cells next to a labeled set
        for extra in found:
            if not extra.weyl_labels:
                near = rp1.dilate(extra.cells, 2.0 * rp1.radius * (1 + 1e-6))
                assert any(near & s.cells for s in sets)
        assert semigroup_flag_type(sets, 2) == theta_s
        labels = set().union(*(s.weyl_labels for s in sets))
        assert labels == set(weyl.all_elements(2))
        for i, a in enumerate(sets):
            for b in sets[i + 1:]:
                assert not a.cells & b.cells


def test_persistence_filter(rp1):
    g = fake_graph(rp1, [(0, 0), (1, 1), (2, 3), (3, 2)])
    assert [set(s.cells) for s in control_sets(g)] == [{0}, {1}, {2, 3}]
    conf = fake_graph(rp1, [(0, 0), (2, 2)], tau=2.0)
    assert [set(s.cells) for s in control_sets(g, conf)] == [{0}, {2, 3}]
    with pytest.raises(SetFinderError):
        control_sets(g, fake_graph(rp1, [], tau=0.5))
    with pytest.raises(SetFinderError):
        chain_control_sets(g)


def test_labeling_error(rp1):
    cores = core_points(system(0.3), [], [0.0])
    only_one = [LabeledSet(frozenset([0]), "control")]
    with pytest.raises(LabelingError):
        label_sets(only_one, cores, rp1)


def test_structure_error():
    n = 3
    s1, s2 = weyl.reflection(3, 1), weyl.reflection(3, 2)
    bad = [LabeledSet(frozenset([0]), "control", frozenset({weyl.identity(n), weyl.compose(s1, s2)}))]
    with pytest.raises(StructureError):
        semigroup_flag_type(bad, n)
    good = [LabeledSet(frozenset([0]), "control", frozenset(weyl.subgroup(n, [1])))]
    assert semigroup_flag_type(good, n) == {1}
    # on F_{2}, labels {e, s1} of the e-set are explained by Theta' = {1}
    part = [LabeledSet(frozenset([0]), "control", frozenset({weyl.identity(n), s1}))]
    assert flag_type_from_partial(part, n, [2]) == {1}


def test_labeled_set_validation():
    with pytest.raises(SetFinderError):
        LabeledSet(frozenset(), "control")
    with pytest.raises(SetFinderError):
        LabeledSet(frozenset([1]), "other")
    s = LabeledSet(frozenset([3, 1]), "chain", frozenset({weyl.identity(2)}))
    assert s.to_json()["cells"] == [1, 3]
    assert s.carries(weyl.identity(2)) and not s.carries(weyl.longest_element(2))


def test_domain_and_sinks(rp1):
    g = fake_graph(rp1, [(0, 0), (1, 0), (2, 1), (5, 5), (5, 2)])
    a = LabeledSet(frozenset([0]), "control")
    b = LabeledSet(frozenset([5]), "control")
    assert domain_of_attraction(g, a) == {0, 1, 2, 5}
    assert sink_sets(g, [a, b]) == [0]
