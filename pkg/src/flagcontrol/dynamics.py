"""Bilinear control systems ``x' = (A + sum_j u_j B_j) x`` and their flows on flags.

Controls are piecewise constant, so the flow of each piece is an exact matrix
exponential (scipy's Pade scaling-and-squaring).
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import expm

from .flag_manifold import FlagPoint, FlagSignature, act_frames, random_frames

log = logging.getLogger(__name__)

TOL_TRACE = 1e-9


class ConfigError(ValueError):
    """Invalid system or run configuration."""


class RangeError(ValueError):
    """Control value outside the control range."""


@dataclass(frozen=True, eq=False)
class ControlRange:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ConfigError(f"range.lo and range.hi must be vectors of equal length, got {lo.shape} and {hi.shape}")
        if not (np.all(lo < 0) and np.all(hi > 0)):
            raise ConfigError("range must contain 0 in its interior: need lo < 0 < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def m(self) -> int:
        return len(self.lo)

    def contains(self, u, tol: float = 1e-12) -> bool:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return u.shape == self.lo.shape and bool(np.all(u >= self.lo - tol) and np.all(u <= self.hi + tol))

    def is_interior(self, u) -> bool:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return bool(np.all(u > self.lo) and np.all(u < self.hi))


@dataclass(frozen=True, eq=False)
class BilinearSystem:
    A: np.ndarray
    B: tuple[np.ndarray, ...]
    range: ControlRange
    n: int = field(init=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError(f"A must be a square matrix, got shape {A.shape}")
        n = A.shape[0]
        B = tuple(np.asarray(b, dtype=float) for b in self.B)
        if not B:
            raise ConfigError("B must contain at least one control matrix")
        for j, b in enumerate(B):
            if b.shape != (n, n):
                raise ConfigError(f"B[{j}] has shape {b.shape}, expected {(n, n)}")
        for name, mat in [("A", A)] + [(f"B[{j}]", b) for j, b in enumerate(B)]:
            if abs(np.trace(mat)) > TOL_TRACE * max(1.0, np.linalg.norm(mat)):
                raise ConfigError(f"{name} is not traceless (trace={np.trace(mat):.3g})")
        if self.range.m != len(B):
            raise ConfigError(f"range has {self.range.m} components but there are {len(B)} control matrices")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "n", n)

    @property
    def m(self) -> int:
        return len(self.B)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "A": self.A.tolist(),
            "B": [b.tolist() for b in self.B],
            "range": {"lo": self.range.lo.tolist(), "hi": self.range.hi.tolist()},
        }


def load_system(data: dict) -> BilinearSystem:
    """Build a system from ``{"n", "A", "B", "range": {"lo", "hi"}}``."""
    if not isinstance(data, dict):
        raise ConfigError("system config must be a JSON object")
    for key in ("A", "B", "range"):
        if key not in data:
            raise ConfigError(f"system config is missing field '{key}'")
    rng = data["range"]
    if not isinstance(rng, dict) or "lo" not in rng or "hi" not in rng:
        raise ConfigError("field 'range' must be an object with 'lo' and 'hi'")
    B = data["B"]
    if isinstance(B, list) and B and not isinstance(B[0][0], list):
        B = [B]  # a single matrix given bare
    try:
        sys = BilinearSystem(np.array(data["A"], dtype=float), tuple(np.array(b, dtype=float) for b in B),
                             ControlRange(rng["lo"], rng["hi"]))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed system config: {exc}") from exc
    if "n" in data and int(data["n"]) != sys.n:
        raise ConfigError(f"field 'n'={data['n']} does not match A of size {sys.n}")
    return sys


def drift_matrix(sys: BilinearSystem, u) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if not sys.range.contains(u):
        raise RangeError(f"control {u.tolist()} outside range [{sys.range.lo.tolist()}, {sys.range.hi.tolist()}]")
    return sys.A + sum(uj * bj for uj, bj in zip(u, sys.B))


class ControlPiece(NamedTuple):
    u: np.ndarray
    dt: float


def control_word(pieces) -> list[ControlPiece]:
    word = []
    for u, dt in pieces:
        if dt <= 0:
            raise ValueError(f"control piece duration must be positive, got {dt}")
        word.append(ControlPiece(np.atleast_1d(np.asarray(u, dtype=float)), float(dt)))
    return word


def transition_matrix(sys: BilinearSystem, word) -> np.ndarray:
    """``exp(dt_k X_k) ... exp(dt_1 X_1)`` for a control word."""
    g = np.eye(sys.n)
    for u, dt in control_word(word):
        g = expm(dt * drift_matrix(sys, u)) @ g
    return g


def flow_frames(sys: BilinearSystem, frames: np.ndarray, word) -> np.ndarray:
    out = np.asarray(frames, dtype=float)
    for u, dt in control_word(word):
        out = act_frames(expm(dt * drift_matrix(sys, u)), out)
    return out


def flow_point(sys: BilinearSystem, x: FlagPoint, word) -> FlagPoint:
    """Transition map on F_theta for a piecewise-constant control."""
    if x.signature.n != sys.n:
        raise ValueError(f"point lives in dimension {x.signature.n}, system in {sys.n}")
    return FlagPoint(flow_frames(sys, x.frame[None], word)[0], x.signature)


class ControlSample(NamedTuple):
    u: np.ndarray
    interior: bool


def control_samples(rng: ControlRange, level: int) -> list[ControlSample]:
    """Grid over the box with its vertices, 0 and ``level - 1`` points per half-axis."""
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    axes = []
    for lo, hi in zip(rng.lo, rng.hi):
        neg = [lo * k / level for k in range(level, 0, -1)]
        pos = [hi * k / level for k in range(1, level + 1)]
        axes.append(neg + [0.0] + pos)
    out = []
    for combo in itertools.product(*axes):
        u = np.array(combo, dtype=float)
        out.append(ControlSample(u, rng.is_interior(u)))
    return out


def backward_system(sys: BilinearSystem) -> BilinearSystem:
    """Time reversal: flows of the result run the original backwards."""
    return BilinearSystem(-sys.A, tuple(-b for b in sys.B), sys.range)


# -- local accessibility diagnostic ---------------------------------------

def _bracket(x, y):
    return x @ y - y @ x


def lie_algebra_basis(mats: Sequence[np.ndarray], tol: float = 1e-9) -> list[np.ndarray]:
    """Orthonormal basis of the Lie algebra generated by ``mats``."""
    basis: list[np.ndarray] = []

    def add(x):
        v = x.reshape(-1).copy()
        for b in basis:
            v -= (b.reshape(-1) @ v) * b.reshape(-1)
        nrm = np.linalg.norm(v)
        if nrm > tol * max(1.0, np.linalg.norm(x)):
            basis.append((v / nrm).reshape(x.shape))
            return True
        return False

    frontier = [m for m in mats if add(np.asarray(m, dtype=float))]
    while frontier:
        new = []
        for x in frontier:
            for y in list(basis):
                z = _bracket(x, y)
                if add(z):
                    new.append(basis[-1])
        frontier = new
    return basis


def tangent_vectors(X: np.ndarray, frame: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Velocity of the projectors of a flag under ``exp(tX)``."""
    n = frame.shape[0]
    out = []
    for d in dims:
        f = frame[:, :d]
        P = f @ f.T
        Q = np.eye(n) - P
        out.append((Q @ X @ P + P @ X.T @ Q).reshape(-1))
    return np.concatenate(out) if out else np.zeros(0)


@dataclass
class AccessibilityReport:
    lie_algebra_dim: int
    full_dim: int
    manifold_dim: int
    min_rank: int
    points: int
    accessible: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def accessibility_diagnostic(sys: BilinearSystem, signature: FlagSignature, points: int = 100,
                             seed: int = 0, tol: float = 1e-8) -> AccessibilityReport:
    """Lie algebra rank condition tested at random flags (a diagnostic, not a proof)."""
    basis = lie_algebra_basis([sys.A, *sys.B])
    frames = random_frames(sys.n, points, np.random.default_rng([seed, 7]))
    target = signature.manifold_dim
    min_rank = target
    for f in frames:
        if target == 0:
            break
        vecs = np.stack([tangent_vectors(x, f, signature.dims) for x in basis]) if basis else np.zeros((1, 1))
        s = np.linalg.svd(vecs, compute_uv=False)
        rank = int(np.sum(s > tol * max(1.0, s[0])))
        min_rank = min(min_rank, rank)
    rep = AccessibilityReport(len(basis), sys.n * sys.n - 1, target, min_rank, points, min_rank >= target)
    if not rep.accessible:
        log.warning("Lie algebra rank condition fails at sampled flags (rank %d < %d)", min_rank, target)
    return rep
