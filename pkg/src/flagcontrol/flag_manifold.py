"""Flag manifolds of SL(n, R) as orthonormal frames, plus a cell discretization.

A flag of type ``theta`` keeps the subspaces ``V_d = span(frame[:, :d])`` for
``d`` in ``dims = {1..n-1} \\ theta``.  Two frames are the same flag iff all
their projectors ``P_d`` agree; the distance between flags is the largest
Frobenius gap between corresponding projectors.
"""

from __future__ import annotations

import json
import weakref
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np
from scipy.linalg import expm
from scipy.special import ndtri
from scipy.stats import qmc

from . import kernels
from .weyl import WeylElement, theta_set

TOL_LIN = 1e-9


class FlagError(ValueError):
    """Signature mismatch, bad projection or singular action."""


@dataclass(frozen=True)
class FlagSignature:
    n: int
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if self.n < 2:
            raise FlagError(f"invalid dimension n={self.n}")
        if list(dims) != sorted(set(dims)) or any(not 1 <= d <= self.n - 1 for d in dims):
            raise FlagError(f"dims {dims} must be strictly increasing in 1..{self.n - 1}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_theta(cls, n: int, theta: Iterable[int]) -> "FlagSignature":
        theta = theta_set(n, theta)
        return cls(n, tuple(d for d in range(1, n) if d not in theta))

    @property
    def theta(self) -> frozenset[int]:
        return frozenset(range(1, self.n)) - set(self.dims)

    @property
    def manifold_dim(self) -> int:
        # n(n-1)/2 minus the dimension of the block-diagonal part
        edges = (0,) + self.dims + (self.n,)
        blocks = [b - a for a, b in zip(edges, edges[1:])]
        return (self.n * self.n - sum(b * b for b in blocks)) // 2

    @property
    def is_point(self) -> bool:
        return not self.dims


@dataclass(frozen=True, eq=False)
class FlagPoint:
    frame: np.ndarray
    signature: FlagSignature

    def __post_init__(self):
        frame = np.array(self.frame, dtype=float)
        n = self.signature.n
        if frame.shape != (n, n):
            raise FlagError(f"frame shape {frame.shape} does not match n={n}")
        frame.setflags(write=False)
        object.__setattr__(self, "frame", frame)

    def projector(self, d: int) -> np.ndarray:
        f = self.frame[:, :d]
        return f @ f.T

    @cached_property
    def features(self) -> np.ndarray:
        return kernels.projector_features(self.frame[None], self.signature.dims)[0]

    def same_as(self, other: "FlagPoint", tol: float = TOL_LIN) -> bool:
        return distance(self, other) <= tol


def _check_same(sig_a: FlagSignature, sig_b: FlagSignature) -> None:
    if sig_a != sig_b:
        raise FlagError(f"signature mismatch: {sig_a} vs {sig_b}")


def base_point(signature: FlagSignature) -> FlagPoint:
    """The standard flag b_theta built from coordinate subspaces."""
    return FlagPoint(np.eye(signature.n), signature)


def weyl_point(w: WeylElement, signature: FlagSignature) -> FlagPoint:
    """``w b_theta``: the flag with ``V_d = span(e_w(1), ..., e_w(d))``."""
    if w.n != signature.n:
        raise FlagError(f"dimension mismatch: {w.n} vs {signature.n}")
    perm = np.zeros((w.n, w.n))
    for i in range(1, w.n + 1):
        perm[w(i) - 1, i - 1] = 1.0
    return FlagPoint(perm, signature)


def distance(x: FlagPoint, y: FlagPoint) -> float:
    _check_same(x.signature, y.signature)
    if x.signature.is_point:
        return 0.0
    return float(max(np.linalg.norm(x.projector(d) - y.projector(d)) for d in x.signature.dims))


def act_frames(g: np.ndarray, frames: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Apply ``g`` (or a stack of matrices) to a stack of frames and re-orthonormalize."""
    moved = np.matmul(g, frames)
    q, rmin = kernels.orthonormalize(moved)
    if np.any(rmin <= tol):
        raise FlagError("numerically singular group element")
    return q


def act(g: np.ndarray, x: FlagPoint) -> FlagPoint:
    g = np.asarray(g, dtype=float)
    if g.shape != (x.signature.n, x.signature.n):
        raise FlagError(f"matrix shape {g.shape} does not match n={x.signature.n}")
    return FlagPoint(act_frames(g, x.frame[None])[0], x.signature)


def project(x: FlagPoint, theta2: Iterable[int]) -> FlagPoint:
    """Canonical projection onto a coarser flag manifold (forget subspaces)."""
    sig = x.signature
    theta2 = theta_set(sig.n, theta2)
    if not sig.theta <= theta2:
        raise FlagError(f"cannot project type {sorted(sig.theta)} onto finer type {sorted(theta2)}")
    return FlagPoint(x.frame, FlagSignature.from_theta(sig.n, theta2))


def random_frames(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal frames."""
    q, _ = kernels.orthonormalize(rng.standard_normal((count, n, n)))
    return q


def random_points(signature: FlagSignature, count: int, seed: int) -> list[FlagPoint]:
    rng = np.random.default_rng(seed)
    return [FlagPoint(f, signature) for f in random_frames(signature.n, count, rng)]


def _rp1_frames(angles: np.ndarray) -> np.ndarray:
    c, s = np.cos(angles), np.sin(angles)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


@dataclass(eq=False)
class CellComplex:
    """Nearest-center cells on a flag manifold.

    ``centers`` is an ``(N, n, n)`` stack of orthonormal frames.  Membership is
    the nearest center, ties going to the lowest index.
    """

    signature: FlagSignature
    centers: np.ndarray
    radius: float
    resolution: int
    seed: int
    source: str | None = None
    _features: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.centers = np.ascontiguousarray(self.centers, dtype=float)
        self.centers.setflags(write=False)

    def __len__(self) -> int:
        return len(self.centers)

    @property
    def features(self) -> np.ndarray:
        if self._features is None:
            self._features = kernels.projector_features(self.centers, self.signature.dims)
        return self._features

    def center(self, i: int) -> FlagPoint:
        return FlagPoint(self.centers[i], self.signature)

    def locate_frames(self, frames: np.ndarray) -> np.ndarray:
        if self.signature.is_point:
            return np.zeros(len(frames), dtype=np.int64)
        feats = kernels.projector_features(frames, self.signature.dims)
        return kernels.nearest(feats, self.features)[0]

    def locate(self, points: Iterable[FlagPoint]) -> np.ndarray:
        points = list(points)
        if not points:
            return np.empty(0, dtype=np.int64)
        for p in points:
            _check_same(p.signature, self.signature)
        return self.locate_frames(np.stack([p.frame for p in points]))

    @cached_property
    def neighbors(self) -> list[np.ndarray]:
        """Cells whose centers lie within 2.5 covering radii."""
        if self.signature.is_point:
            return [np.empty(0, dtype=np.int64)]
        indptr, cols = kernels.within(self.features, self.features, 2.5 * self.radius)
        return [np.array([c for c in cols[indptr[i]:indptr[i + 1]] if c != i], dtype=np.int64)
                for i in range(len(self))]

    def set_distance(self, a: Iterable[int], b: Iterable[int]) -> float:
        """Hausdorff distance between two cell sets, measured on centers."""
        a, b = np.fromiter(a, dtype=np.int64), np.fromiter(b, dtype=np.int64)
        if len(a) == 0 or len(b) == 0:
            return float("inf") if len(a) != len(b) else 0.0
        if self.signature.is_point:
            return 0.0
        fa, fb = self.features[np.sort(a)], self.features[np.sort(b)]
        d_ab = kernels.nearest(fa, fb)[1].max()
        d_ba = kernels.nearest(fb, fa)[1].max()
        return float(max(d_ab, d_ba))

    def dilate(self, cells: Iterable[int], delta: float) -> frozenset[int]:
        """All cells whose center is within ``delta`` of a center in ``cells``."""
        cells = np.fromiter(cells, dtype=np.int64)
        if len(cells) == 0:
            return frozenset()
        if self.signature.is_point:
            return frozenset([0])
        _, dist = kernels.nearest(self.features, self.features[np.sort(cells)])
        return frozenset(np.nonzero(dist <= delta)[0].tolist())

    def to_json(self) -> dict:
        return {
            "n": self.signature.n,
            "dims": list(self.signature.dims),
            "resolution": self.resolution,
            "seed": self.seed,
            "radius": self.radius,
            "centers": self.centers.reshape(-1).tolist(),
        }

    @classmethod
    def from_json(cls, data: dict, source: str | None = None) -> "CellComplex":
        sig = FlagSignature(int(data["n"]), tuple(data["dims"]))
        centers = np.asarray(data["centers"], dtype=float).reshape(-1, sig.n, sig.n)
        return cls(sig, centers, float(data["radius"]), int(data["resolution"]), int(data["seed"]),
                   source=source)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)
        self.source = str(path)

    @classmethod
    def load(cls, path) -> "CellComplex":
        with open(path) as fh:
            return cls.from_json(json.load(fh), source=str(path))


def _farthest_point_sample(pool_feats: np.ndarray, count: int) -> np.ndarray:
    chosen = np.empty(count, dtype=np.int64)
    chosen[0] = 0
    mind = kernels.nearest(pool_feats, pool_feats[:1])[1]
    for k in range(1, count):
        j = int(np.argmax(mind))
        chosen[k] = j
        d = kernels.nearest(pool_feats, pool_feats[j:j + 1])[1]
        np.minimum(mind, d, out=mind)
    return chosen


def _covering_radius(signature, centers_feats, probe_frames) -> float:
    feats = kernels.projector_features(probe_frames, signature.dims)
    return float(kernels.nearest(feats, centers_feats)[1].max())


def discretize(signature: FlagSignature, resolution: int, seed: int = 0,
               pool_factor: int = 8, probes: int | None = None) -> CellComplex:
    """Cell complex with ``resolution`` cells.

    RP^1 gets a uniform angle grid.  Everything else gets a farthest-point
    subsample (starting at the base flag) of a scrambled Halton pool of
    Haar-like frames; the covering radius is the worst nearest-center distance
    over a seeded probe sample.
    """
    if resolution < 8:
        raise FlagError(f"resolution {resolution} too small; need >= 8")
    n = signature.n
    if signature.is_point:
        return CellComplex(signature, np.eye(n)[None], 0.0, resolution, seed)

    if n == 2:
        angles = np.pi * np.arange(resolution) / resolution
        # exact: the farthest point of a cell sits half a cell width from its center
        radius = float(np.sqrt(2.0) * np.sin(np.pi / (2 * resolution)))
        return CellComplex(signature, _rp1_frames(angles), radius, resolution, seed)

    pool_size = max(pool_factor * resolution, 512)
    halton = qmc.Halton(d=n * n, scramble=True, seed=np.random.default_rng([seed, 0]))
    u = np.clip(halton.random(pool_size), 1e-12, 1 - 1e-12)
    pool = kernels.orthonormalize(ndtri(u).reshape(pool_size, n, n))[0]
    pool[0] = np.eye(n)
    pool_feats = kernels.projector_features(pool, signature.dims)
    centers = pool[_farthest_point_sample(pool_feats, resolution)]
    n_probe = probes if probes is not None else max(20 * resolution, 20000)
    probe = random_frames(n, n_probe, np.random.default_rng([seed, 1]))

    centers_feats = kernels.projector_features(centers, signature.dims)
    radius = _covering_radius(signature, centers_feats, probe)
    cx = CellComplex(signature, centers, radius, resolution, seed)
    cx._features = centers_feats
    return cx


def sample_in_cells(cx: CellComplex, count: int, seed: int, max_rounds: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """``count`` seeded perturbations of each center that stay in their cell.

    Returns ``(frames, owner)``.  Cells where rejection keeps failing fall back
    to smaller perturbations and finally to the center itself.
    """
    n_cells, n = len(cx), cx.signature.n
    if count <= 0 or cx.signature.is_point:
        return np.empty((0, n, n)), np.empty(0, dtype=np.int64)
    rng = np.random.default_rng([seed, 2])
    frames = np.repeat(cx.centers, count, axis=0)
    owner = np.repeat(np.arange(n_cells), count)
    todo = np.arange(len(frames))
    scale = 1.5 * cx.radius
    if n == 2:
        scale = np.pi / len(cx)  # exact cell width in angle
    for _ in range(max_rounds):
        if len(todo) == 0:
            break
        if n == 2:
            t = (rng.random(len(todo)) - 0.5) * scale
            rot = _rp1_frames(t)
        else:
            k = rng.standard_normal((len(todo), n, n))
            k = k - np.swapaxes(k, -1, -2)
            k /= np.linalg.norm(k, axis=(-2, -1), keepdims=True)
            t = rng.random(len(todo)) * scale
            rot = expm(k * t[:, None, None])
        cand = kernels.orthonormalize(np.matmul(rot, cx.centers[owner[todo]]))[0]
        ok = cx.locate_frames(cand) == owner[todo]
        frames[todo[ok]] = cand[ok]
        todo = todo[~ok]
        scale *= 0.7
    return frames, owner


def fiber_saturate(cells: Iterable[int], i: int, complex_f: CellComplex, complex_fi: CellComplex) -> frozenset[int]:
    """``pi_i^{-1} pi_i(cells)`` computed on cells of the maximal flag."""
    n = complex_f.signature.n
    if complex_fi.signature.n != n:
        raise FlagError(f"dimension mismatch: {n} vs {complex_fi.signature.n}")
    if complex_f.signature.dims != tuple(range(1, n)):
        raise FlagError("first complex must live on the maximal flag manifold")
    if complex_fi.signature.theta != frozenset([i]):
        raise FlagError(f"second complex must live on F_{{{i}}}")
    image = projection_map(complex_f, complex_fi)
    hit = {int(image[c]) for c in cells}
    return frozenset(np.nonzero(np.isin(image, list(hit)))[0].tolist()) if hit else frozenset()


_PROJ_CACHE: "weakref.WeakKeyDictionary[CellComplex, weakref.WeakKeyDictionary]" = weakref.WeakKeyDictionary()


def projection_map(complex_f: CellComplex, complex_coarse: CellComplex) -> np.ndarray:
    """Cell of ``complex_coarse`` containing the projection of each center of ``complex_f``."""
    inner = _PROJ_CACHE.setdefault(complex_f, weakref.WeakKeyDictionary())
    if complex_coarse not in inner:
        inner[complex_coarse] = complex_coarse.locate_frames(complex_f.centers)
    return inner[complex_coarse]
