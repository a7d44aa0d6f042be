import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flagcontrol import weyl
from flagcontrol.weyl import WeylElement, WeylError

from oracles import blocks_oracle, contingency_count, double_coset_oracle, young_oracle


def perms(n):
    return st.permutations(list(range(1, n + 1))).map(lambda p: WeylElement(tuple(p)))


def thetas(n):
    simple = range(1, n)
    return [frozenset(c) for k in range(n) for c in itertools.combinations(simple, k)]


@pytest.mark.parametrize("n", [2, 3, 4])
def test_group_order_and_longest(n):
    elems = weyl.all_elements(n)
    assert len(elems) == math.factorial(n) == len(set(elems))
    w0 = weyl.longest_element(n)
    assert weyl.compose(w0, w0).is_identity()
    assert w0.length() == n * (n - 1) // 2 == max(w.length() for w in elems)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_double_cosets_match_oracles(n):
    for left in thetas(n):
        for right in thetas(n):
            blocks = weyl.double_cosets(n, left, right)
            union = set().union(*blocks)
            assert union == set(weyl.all_elements(n))
            assert sum(len(b) for b in blocks) == math.factorial(n)
            want = double_coset_oracle(n, left, right)
            rows = [len(b) for b in blocks_oracle(n, left)]
            cols = [len(b) for b in blocks_oracle(n, right)]
            assert len(blocks) == want == contingency_count(rows, cols)


def test_frozen_double_coset_counts():
    # values from the contingency-table oracle
    assert len(weyl.double_cosets(3, [], [2])) == 3
    assert len(weyl.double_cosets(3, [1], [2])) == 2
    assert len(weyl.double_cosets(4, [1, 3], [1, 3])) == 3
    assert len(weyl.double_cosets(4, [2], [2])) == 7
    assert len(weyl.double_cosets(4, [1], [3])) == 7
    assert len(weyl.double_cosets(4, [], [])) == 24


@pytest.mark.parametrize("n", [2, 3, 4])
def test_subgroup_is_young(n):
    for theta in thetas(n):
        got = {w.perm for w in weyl.subgroup(n, theta)}
        assert got == young_oracle(n, theta)
        assert weyl.theta_of_subgroup(n, weyl.subgroup(n, theta)) == theta


def test_theta_of_subgroup_rejects_non_parabolic():
    s1, s2 = weyl.reflection(3, 1), weyl.reflection(3, 2)
    assert weyl.theta_of_subgroup(3, {weyl.identity(3), weyl.compose(s1, s2)}) is None
    # conjugate of a parabolic subgroup is a subgroup but not a standard one
    t = WeylElement((3, 2, 1))
    assert weyl.theta_of_subgroup(3, {weyl.identity(3), t}) is None


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5).flatmap(lambda n: st.tuples(perms(n), perms(n), perms(n))))
def test_composition_laws(triple):
    a, b, c = triple
    assert weyl.compose(weyl.compose(a, b), c) == weyl.compose(a, weyl.compose(b, c))
    assert weyl.compose(a, a.inverse()).is_identity()
    assert a.inverse().length() == a.length()
    assert (a * b)(1) == a(b(1))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5).flatmap(perms))
def test_reduced_word(w):
    word = weyl.reduced_word(w)
    assert len(word) == w.length()
    assert weyl.word_product(w.n, word) == w
    for i in range(1, w.n):
        si = weyl.reflection(w.n, i)
        assert abs(weyl.compose(w, si).length() - w.length()) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5).flatmap(lambda n: st.tuples(perms(n), st.sets(st.integers(1, n - 1)))))
def test_coset_representatives_are_minimal(args):
    w, theta = args
    n = w.n
    rep = weyl.coset_rep(w, theta)
    coset = {weyl.compose(w, v) for v in weyl.subgroup(n, theta)}
    assert rep in coset
    assert rep.length() == min(v.length() for v in coset)
    reps = weyl.coset_representatives(n, theta)
    assert len(reps) == math.factorial(n) // len(weyl.subgroup(n, theta))


def test_act_on_root_and_closure():
    w = WeylElement((2, 3, 1))
    assert w.act_on_root((1, 2)) == (2, 3)
    assert weyl.root_closure(3, [1]) == {(1, 2), (2, 1)}
    assert weyl.root_closure(4, [1, 2]) == {(i, j) for i in (1, 2, 3) for j in (1, 2, 3) if i != j}
    assert weyl.theta_blocks(4, [1, 3]) == [(1, 2), (3, 4)]


def test_hyperbolic_label():
    n = 3
    e, w0 = weyl.identity(n), weyl.longest_element(n)
    # with theta_phi empty every label qualifies
    assert all(weyl.is_hyperbolic_label(n, [], w, []) for w in weyl.all_elements(n))
    # <{1}> is the root pair (1,2); w0<{1}> is (3,2): not contained
    assert weyl.is_hyperbolic_label(n, [1], e, [1])
    assert not weyl.is_hyperbolic_label(n, [1], w0, [1])
    assert not weyl.is_hyperbolic_label(n, [1], e, [])


def test_parse_and_str():
    w = weyl.parse_perm("[2,1,3]")
    assert w == WeylElement((2, 1, 3))
    assert str(w) == "[2,1,3]"
    assert weyl.parse_perm(" 3 1 2 ") == WeylElement((3, 1, 2))


@pytest.mark.parametrize("bad", [(1, 1, 2), (0, 1), (1, 3)])
def test_invalid_permutation(bad):
    with pytest.raises(WeylError):
        WeylElement(bad)


def test_invalid_inputs():
    with pytest.raises(WeylError):
        weyl.longest_element(1)
    with pytest.raises(WeylError):
        weyl.theta_set(3, [3])
    with pytest.raises(WeylError):
        weyl.reflection(3, 0)
    with pytest.raises(WeylError):
        weyl.compose(weyl.identity(2), weyl.identity(3))
