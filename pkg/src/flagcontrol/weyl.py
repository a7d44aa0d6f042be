"""Weyl group of sl(n, R): the symmetric group S_n in one-line notation.

Elements are permutations of ``1..n``; the simple reflection ``s_i`` is the
transposition ``(i, i+1)`` and acts on roots ``e_i - e_j`` by permuting
coordinates.  Everything here is exhaustive enumeration, which is all that is
needed for ``n <= 4`` (and still fine well beyond).
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence


class WeylError(ValueError):
    """Invalid dimension, theta set or element."""


@dataclass(frozen=True, order=True)
class WeylElement:
    perm: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        if sorted(perm) != list(range(1, len(perm) + 1)):
            raise WeylError(f"{self.perm!r} is not a permutation of 1..{len(perm)}")
        object.__setattr__(self, "perm", perm)

    @property
    def n(self) -> int:
        return len(self.perm)

    def __call__(self, i: int) -> int:
        return self.perm[i - 1]

    def __mul__(self, other: "WeylElement") -> "WeylElement":
        return compose(self, other)

    def inverse(self) -> "WeylElement":
        inv = [0] * self.n
        for i, p in enumerate(self.perm, start=1):
            inv[p - 1] = i
        return WeylElement(tuple(inv))

    def length(self) -> int:
        """Number of inversions, i.e. the Coxeter length."""
        p = self.perm
        return sum(1 for i in range(len(p)) for j in range(i + 1, len(p)) if p[i] > p[j])

    def is_identity(self) -> bool:
        return self.perm == tuple(range(1, self.n + 1))

    def act_on_root(self, root: tuple[int, int]) -> tuple[int, int]:
        i, j = root
        return (self(i), self(j))

    def __str__(self) -> str:
        return "[" + ",".join(map(str, self.perm)) + "]"


def _check_n(n: int) -> None:
    if n < 2:
        raise WeylError(f"invalid dimension n={n}; need n >= 2")


def identity(n: int) -> WeylElement:
    return WeylElement(tuple(range(1, n + 1)))


def reflection(n: int, i: int) -> WeylElement:
    if not 1 <= i <= n - 1:
        raise WeylError(f"simple reflection index {i} out of range for n={n}")
    perm = list(range(1, n + 1))
    perm[i - 1], perm[i] = perm[i], perm[i - 1]
    return WeylElement(tuple(perm))


def compose(w1: WeylElement, w2: WeylElement) -> WeylElement:
    """Return ``w1 ∘ w2`` (apply ``w2`` first)."""
    if w1.n != w2.n:
        raise WeylError(f"dimension mismatch: {w1.n} vs {w2.n}")
    return WeylElement(tuple(w1.perm[p - 1] for p in w2.perm))


def longest_element(n: int) -> WeylElement:
    _check_n(n)
    return WeylElement(tuple(range(n, 0, -1)))


def all_elements(n: int) -> list[WeylElement]:
    _check_n(n)
    return [WeylElement(p) for p in itertools.permutations(range(1, n + 1))]


def theta_set(n: int, indices: Iterable[int]) -> frozenset[int]:
    """Validate a parabolic type: a subset of the simple-root indices 1..n-1."""
    theta = frozenset(int(i) for i in indices)
    bad = [i for i in theta if not 1 <= i <= n - 1]
    if bad:
        raise WeylError(f"invalid theta {sorted(theta)} for n={n}: indices {sorted(bad)} out of range")
    return theta


def full_theta(n: int) -> frozenset[int]:
    return frozenset(range(1, n))


def subgroup(n: int, theta: Iterable[int]) -> frozenset[WeylElement]:
    """The parabolic subgroup W_theta generated by ``{s_i : i in theta}``."""
    _check_n(n)
    return _subgroup(n, theta_set(n, theta))


@lru_cache(maxsize=None)
def _subgroup(n: int, theta: frozenset[int]) -> frozenset[WeylElement]:
    gens = [reflection(n, i) for i in sorted(theta)]
    seen = {identity(n)}
    frontier = [identity(n)]
    while frontier:
        nxt = []
        for w in frontier:
            for s in gens:
                v = compose(w, s)
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return frozenset(seen)


def double_cosets(n: int, left: Iterable[int], right: Iterable[int]) -> list[frozenset[WeylElement]]:
    """Partition W into double cosets ``W_left · w · W_right``.

    Blocks are returned in order of their minimal-length representative.
    """
    _check_n(n)
    wl = _subgroup(n, theta_set(n, left))
    wr = _subgroup(n, theta_set(n, right))
    remaining = set(all_elements(n))
    blocks = []
    for w in sorted(all_elements(n), key=lambda v: (v.length(), v.perm)):
        if w not in remaining:
            continue
        block = frozenset(compose(compose(a, w), b) for a in wl for b in wr)
        remaining -= block
        blocks.append(block)
    return blocks


def minimal_representative(block: Iterable[WeylElement]) -> WeylElement:
    return min(block, key=lambda v: (v.length(), v.perm))


def coset_representatives(n: int, theta: Iterable[int]) -> list[WeylElement]:
    """Minimal-length representatives of W / W_theta."""
    return [minimal_representative(b) for b in double_cosets(n, (), theta)]


def coset_rep(w: WeylElement, theta: Iterable[int]) -> WeylElement:
    """Minimal representative of the left coset ``w W_theta``."""
    wt = _subgroup(w.n, theta_set(w.n, theta))
    return minimal_representative(compose(w, v) for v in wt)


def word_product(n: int, word: Sequence[int]) -> WeylElement:
    w = identity(n)
    for i in word:
        w = compose(w, reflection(n, i))
    return w


@lru_cache(maxsize=None)
def _bfs_words(n: int) -> dict[WeylElement, tuple[int, ...]]:
    e = identity(n)
    words = {e: ()}
    queue = deque([e])
    while queue:
        w = queue.popleft()
        for i in range(1, n):
            v = compose(w, reflection(n, i))
            if v not in words:
                words[v] = words[w] + (i,)
                queue.append(v)
    return words


def reduced_word(w: WeylElement) -> list[int]:
    """A minimal word ``[i1, ..., ik]`` with ``w = s_i1 ∘ ... ∘ s_ik``."""
    _check_n(w.n)
    return list(_bfs_words(w.n)[w])


def root_closure(n: int, theta: Iterable[int]) -> frozenset[tuple[int, int]]:
    """Roots spanned by the simple roots in theta, as pairs ``(i, j)`` = e_i - e_j."""
    theta = theta_set(n, theta)
    blocks = theta_blocks(n, theta)
    return frozenset((i, j) for b in blocks for i in b for j in b if i != j)


def theta_blocks(n: int, theta: Iterable[int]) -> list[tuple[int, ...]]:
    """Partition of 1..n into runs glued across every index in theta."""
    theta = theta_set(n, theta)
    blocks, current = [], [1]
    for i in range(1, n):
        if i in theta:
            current.append(i + 1)
        else:
            blocks.append(tuple(current))
            current = [i + 1]
    blocks.append(tuple(current))
    return blocks


def is_hyperbolic_label(n: int, theta_phi: Iterable[int], w: WeylElement, theta: Iterable[int]) -> bool:
    """True iff ``<theta_phi>`` is contained in ``w <theta>``."""
    if w.n != n:
        raise WeylError(f"dimension mismatch: {w.n} vs {n}")
    target = {w.act_on_root(r) for r in root_closure(n, theta)}
    return root_closure(n, theta_phi) <= target


def theta_of_subgroup(n: int, elements: Iterable[WeylElement]) -> frozenset[int] | None:
    """The theta whose parabolic subgroup equals ``elements``, or None."""
    elems = frozenset(elements)
    for k in range(n):
        for theta in itertools.combinations(range(1, n), k):
            if _subgroup(n, frozenset(theta)) == elems:
                return frozenset(theta)
    return None


def parse_perm(text: str) -> WeylElement:
    text = text.strip().strip("[]")
    return WeylElement(tuple(int(t) for t in text.replace(" ", ",").split(",") if t))
