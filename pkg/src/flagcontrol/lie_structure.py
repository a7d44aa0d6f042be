"""Split real form sl(n, R): roots, chamber, split decomposition, fixed points.

The Cartan involution is ``X -> -X^T``, so K = SO(n), ``a`` is the diagonal
traceless matrices and the closed Weyl chamber is the non-increasing diagonals.
Roots are pairs ``(i, j)`` standing for ``e_i - e_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import weyl
from .flag_manifold import FlagPoint, FlagSignature, act_frames
from .weyl import WeylElement

TOL_ROOT = 1e-9
TOL_TRACE = 1e-9
TOL_LIN = 1e-9


class NotSplitError(ValueError):
    """The matrix is not conjugate to a real diagonal matrix."""


class ChamberError(ValueError):
    pass


class LabelError(ValueError):
    pass


@dataclass(frozen=True)
class CartanElement:
    diag: tuple[float, ...]

    def __post_init__(self):
        diag = tuple(float(h) for h in self.diag)
        scale = max(1.0, max(abs(h) for h in diag))
        if abs(sum(diag)) > TOL_TRACE * scale:
            raise ValueError(f"Cartan element {diag} is not traceless")
        object.__setattr__(self, "diag", diag)

    @property
    def n(self) -> int:
        return len(self.diag)

    def in_closed_chamber(self) -> bool:
        return all(a >= b for a, b in zip(self.diag, self.diag[1:]))

    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)


@dataclass(frozen=True, eq=False)
class SplitDecomposition:
    g: np.ndarray
    H: CartanElement
    regular: bool
    tol_root: float = TOL_ROOT

    def recompose(self) -> np.ndarray:
        return self.g @ self.H.matrix() @ np.linalg.inv(self.g)

    @property
    def theta_h(self) -> frozenset[int]:
        return flag_type_of(self.H, self.tol_root)


def simple_roots(n: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """``(simple, positive)`` roots of sl(n)."""
    if n < 2:
        raise weyl.WeylError(f"invalid dimension n={n}")
    simple = [(i, i + 1) for i in range(1, n)]
    positive = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    return simple, positive


def eval_root(alpha: tuple[int, int], H: CartanElement) -> float:
    i, j = alpha
    return H.diag[i - 1] - H.diag[j - 1]


def flag_type_of(H: CartanElement, tol_root: float = TOL_ROOT) -> frozenset[int]:
    """Theta(H): simple roots vanishing on H."""
    if not H.in_closed_chamber():
        raise ChamberError(f"{H.diag} is not in the closed Weyl chamber")
    return frozenset(i for i in range(1, H.n) if abs(eval_root((i, i + 1), H)) <= tol_root)


def _normalize_columns(g: np.ndarray) -> np.ndarray:
    g = g / np.linalg.norm(g, axis=0)
    for j in range(g.shape[1]):
        nz = np.nonzero(np.abs(g[:, j]) > 1e-12)[0]
        if len(nz) and g[nz[0], j] < 0:
            g[:, j] = -g[:, j]
    if np.linalg.det(g) < 0:
        g[:, -1] = -g[:, -1]
    return g


def split_decompose(X, tol: float = TOL_LIN, tol_root: float = TOL_ROOT) -> SplitDecomposition:
    """Write ``X = g diag(H) g^{-1}`` with H non-increasing.

    Raises ``NotSplitError`` for complex spectra and for defective matrices.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if X.shape != (n, n):
        raise ValueError("X must be square")
    scale = max(1.0, float(np.linalg.norm(X)))
    if abs(np.trace(X)) > TOL_TRACE * scale:
        raise ValueError("X must be traceless")

    if np.allclose(X, X.T, atol=1e-14 * scale, rtol=0):
        vals, vecs = np.linalg.eigh((X + X.T) / 2)
    else:
        vals, vecs = np.linalg.eig(X)
        if np.max(np.abs(vals.imag)) > tol * scale:
            raise NotSplitError("complex eigenvalues: element is not split")
        vals, vecs = vals.real, vecs.real
    order = np.argsort(-vals, kind="stable")
    vals, g = vals[order], _normalize_columns(vecs[:, order].copy())
    if np.linalg.cond(g) > 1e10:
        raise NotSplitError("not diagonalizable within tolerance")
    vals = vals - vals.mean()
    H = CartanElement(tuple(vals))
    if np.linalg.norm(g @ np.diag(vals) @ np.linalg.inv(g) - X) > max(tol, 1e-12) * scale * 10:
        raise NotSplitError("eigendecomposition does not reproduce X")
    gaps = -np.diff(vals)
    regular = bool(np.all(gaps > tol_root * scale))
    return SplitDecomposition(g, H, regular, tol_root * scale)


@dataclass(frozen=True, eq=False)
class FixedComponent:
    """One connected component ``g · fix_theta(H, w)`` of the fixed set.

    ``blocks`` are the eigenspace bases (columns of g grouped by equal
    eigenvalue) and ``counts[b][k]`` is ``dim(V_{dims[k]} ∩ E_b)`` on the
    component.
    """

    weyl_label: WeylElement
    point: FlagPoint
    dimension: int
    blocks: tuple[np.ndarray, ...]
    counts: tuple[tuple[int, ...], ...]

    def contains(self, x: FlagPoint, tol: float = 1e-7) -> bool:
        if x.signature != self.point.signature:
            return False
        for k, d in enumerate(x.signature.dims):
            v = x.frame[:, :d]
            for b, basis in enumerate(self.blocks):
                # dim(V ∩ E) = dim V + dim E - dim(V + E)
                both = np.linalg.svd(np.hstack([v, _orth(basis)]), compute_uv=False)
                inter = d + basis.shape[1] - int(np.sum(both > tol))
                if inter != self.counts[b][k]:
                    return False
        return True


def _orth(a: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(a)
    return q


def _eigen_blocks(H: CartanElement, tol_root: float) -> list[list[int]]:
    """0-based index groups of equal eigenvalues (runs in the sorted diagonal)."""
    theta_h = flag_type_of(H, tol_root)
    return [[i - 1 for i in b] for b in weyl.theta_blocks(H.n, theta_h)]


def _flag_manifold_dim(jumps: Sequence[int]) -> int:
    m = sum(jumps)
    return (m * m - sum(a * a for a in jumps)) // 2


def fixed_components(D: SplitDecomposition, theta: Iterable[int],
                     w_reps: Sequence[WeylElement]) -> list[FixedComponent]:
    """Connected components of the fixed set of ``exp(tX)`` on F_theta.

    ``w_reps`` must contain exactly one element of each double coset
    ``W_H \\ W / W_theta`` (``W_H`` generated by Theta(H)).
    """
    n = D.H.n
    theta = weyl.theta_set(n, theta)
    sig = FlagSignature.from_theta(n, theta)
    theta_h = flag_type_of(D.H, D.tol_root)
    cosets = weyl.double_cosets(n, theta_h, theta)
    hit = []
    for w in w_reps:
        idx = [k for k, block in enumerate(cosets) if w in block]
        if len(idx) != 1 or w.n != n:
            raise LabelError(f"{w} is not an element of W for n={n}")
        hit.append(idx[0])
    if sorted(hit) != list(range(len(cosets))):
        raise LabelError(
            f"representatives {[str(w) for w in w_reps]} do not match W_H\\W/W_theta "
            f"for Theta(H)={sorted(theta_h)}, theta={sorted(theta)}")

    blocks = _eigen_blocks(D.H, D.tol_root)
    block_of = {i: b for b, idx in enumerate(blocks) for i in idx}
    bases = tuple(D.g[:, idx] for idx in blocks)
    out = []
    for w in w_reps:
        cols = [w(i) - 1 for i in range(1, n + 1)]
        frame = act_frames(np.eye(n), D.g[:, cols][None])[0]
        counts = []
        for b in range(len(blocks)):
            counts.append(tuple(sum(1 for c in cols[:d] if block_of[c] == b) for d in sig.dims))
        dim = 0
        for b, idx in enumerate(blocks):
            seq = (0,) + counts[b] + (len(idx),)
            jumps = [y - x for x, y in zip(seq, seq[1:]) if y > x]
            dim += _flag_manifold_dim(jumps)
        out.append(FixedComponent(w, FlagPoint(frame, sig), dim, bases, tuple(counts)))
    return out
