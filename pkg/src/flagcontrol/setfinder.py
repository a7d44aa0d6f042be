"""Control sets and chain control sets on a discretized flag manifold.

The workhorse is a control-labelled cell graph: an edge ``(c, k, c')`` means
some sample point of cell ``c`` is carried by the constant control ``k`` over
time ``tau`` to within ``epsilon`` of cell ``c'``.  With ``epsilon = 0`` the
strongly connected components approximate the control sets with nonempty
interior; with ``epsilon > 0`` they are outer approximations of the chain
control sets.  Weyl labels come from the fixed flags of split regular drifts
at interior controls, which lie in the cores of the control sets.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import kernels, weyl
from .dynamics import BilinearSystem, ControlSample, drift_matrix
from .flag_manifold import CellComplex, FlagPoint, FlagSignature, act_frames, fiber_saturate, sample_in_cells
from .lie_structure import NotSplitError, fixed_components, split_decompose
from .weyl import WeylElement

log = logging.getLogger(__name__)


class SetFinderError(ValueError):
    pass


class LabelingError(SetFinderError):
    """A core point fell outside every computed set."""


class StructureError(SetFinderError):
    """Labels do not form a standard parabolic subgroup."""


def _as_controls(controls) -> list[np.ndarray]:
    out = []
    for c in controls:
        u = c.u if isinstance(c, ControlSample) else c
        out.append(np.atleast_1d(np.asarray(u, dtype=float)))
    return out


@dataclass(eq=False)
class CellGraph:
    complex: CellComplex
    tau: float
    epsilon: float
    controls: list[np.ndarray]
    samples_per_cell: int
    seed: int
    src: np.ndarray
    ctrl: np.ndarray
    dst: np.ndarray
    backward: bool = False

    def __len__(self) -> int:
        return len(self.complex)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def edge_set(self) -> set[tuple[int, int, int]]:
        return set(zip(self.src.tolist(), self.ctrl.tolist(), self.dst.tolist()))

    @cached_property
    def adjacency(self) -> csr_matrix:
        """Union over controls, as a boolean cell-to-cell matrix."""
        n = len(self.complex)
        pairs = np.unique(self.src * n + self.dst)
        data = np.ones(len(pairs), dtype=np.int8)
        return csr_matrix((data, (pairs // n, pairs % n)), shape=(n, n))

    @cached_property
    def reverse_adjacency(self) -> csr_matrix:
        return self.adjacency.T.tocsr()

    def reachable(self, start: Iterable[int], reverse: bool = False) -> frozenset[int]:
        adj = self.reverse_adjacency if reverse else self.adjacency
        seen = np.zeros(len(self.complex), dtype=bool)
        stack = list(set(int(c) for c in start))
        seen[stack] = True
        indptr, indices = adj.indptr, adj.indices
        while stack:
            c = stack.pop()
            for d in indices[indptr[c]:indptr[c + 1]]:
                if not seen[d]:
                    seen[d] = True
                    stack.append(int(d))
        return frozenset(np.nonzero(seen)[0].tolist())


def build_graph(sys: BilinearSystem, complex: CellComplex, tau: float, epsilon: float, controls,
                samples_per_cell: int, seed: int = 0, extra_points: Sequence[FlagPoint] = (),
                workers: int = 1) -> CellGraph:
    """Sample each cell, flow every sample under every constant control for ``tau``.

    ``extra_points`` are added as samples of the cells that contain them (used
    for core points, which are fixed by their own control).
    """
    if tau <= 0:
        raise SetFinderError(f"tau must be positive, got {tau}")
    if epsilon < 0:
        raise SetFinderError(f"epsilon must be >= 0, got {epsilon}")
    if samples_per_cell < 1:
        raise SetFinderError(f"samples_per_cell must be >= 1, got {samples_per_cell}")
    ctrls = _as_controls(controls)
    if not ctrls:
        raise SetFinderError("empty control list")
    if complex.signature.n != sys.n:
        raise SetFinderError(f"complex dimension {complex.signature.n} != system dimension {sys.n}")

    n_cells = len(complex)
    frames = [complex.centers]
    owner = [np.arange(n_cells)]
    pert, pert_owner = sample_in_cells(complex, samples_per_cell - 1, seed)
    frames.append(pert)
    owner.append(pert_owner)
    extra = [p for p in extra_points]
    if extra:
        frames.append(np.stack([p.frame for p in extra]))
        owner.append(complex.locate(extra))
    frames = np.concatenate(frames)
    owner = np.concatenate(owner)

    dims = complex.signature.dims
    threshold = epsilon + complex.radius

    def edges_for(k: int) -> np.ndarray:
        if complex.signature.is_point:
            return np.array([0], dtype=np.int64)
        phi = expm(tau * drift_matrix(sys, ctrls[k]))
        feats = kernels.projector_features(act_frames(phi, frames), dims)
        near, _ = kernels.nearest(feats, complex.features)
        keys = owner * n_cells + near
        if epsilon > 0:
            indptr, cols = kernels.within(feats, complex.features, threshold)
            rows = np.repeat(owner, np.diff(indptr))
            keys = np.concatenate([keys, rows * n_cells + cols])
        return np.unique(keys)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_control = list(pool.map(edges_for, range(len(ctrls))))
    else:
        per_control = [edges_for(k) for k in range(len(ctrls))]

    src, ctl, dst = [], [], []
    for k, keys in enumerate(per_control):
        src.append(keys // n_cells)
        dst.append(keys % n_cells)
        ctl.append(np.full(len(keys), k, dtype=np.int64))
    return CellGraph(complex, float(tau), float(epsilon), ctrls, samples_per_cell, seed,
                     np.concatenate(src), np.concatenate(ctl), np.concatenate(dst))


@dataclass(frozen=True)
class LabeledSet:
    cells: frozenset[int]
    kind: str
    weyl_labels: frozenset[WeylElement] = frozenset()
    core_cells: frozenset[int] = frozenset()

    def __post_init__(self):
        if not self.cells:
            raise SetFinderError("a labeled set needs at least one cell")
        if self.kind not in ("control", "chain"):
            raise SetFinderError(f"unknown set kind {self.kind!r}")

    def carries(self, w: WeylElement, theta: Iterable[int] = ()) -> bool:
        rep = weyl.coset_rep(w, theta)
        return rep in self.weyl_labels

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "size": len(self.cells),
            "cells": sorted(self.cells),
            "labels": [list(w.perm) for w in sorted(self.weyl_labels)],
            "core_cells": sorted(self.core_cells),
        }


def _recurrent_components(graph: CellGraph) -> list[frozenset[int]]:
    adj = graph.adjacency
    n_comp, comp = connected_components(adj, directed=True, connection="strong")
    coo = adj.tocoo()
    internal = np.zeros(n_comp, dtype=bool)
    mask = comp[coo.row] == comp[coo.col]
    internal[comp[coo.row[mask]]] = True
    groups: dict[int, list[int]] = {}
    for cell, c in enumerate(comp):
        if internal[c]:
            groups.setdefault(int(c), []).append(cell)
    sets = [frozenset(v) for v in groups.values()]
    return sorted(sets, key=min)


def recurrent_cells(graph: CellGraph) -> frozenset[int]:
    return frozenset().union(*_recurrent_components(graph))


def _persistent(graph: CellGraph, confirm: CellGraph | None) -> list[frozenset[int]]:
    sets = _recurrent_components(graph)
    if confirm is None:
        return sets
    if confirm.complex is not graph.complex or confirm.epsilon != graph.epsilon:
        raise SetFinderError("confirmation graph must share the complex and epsilon")
    if confirm.tau <= graph.tau:
        raise SetFinderError("confirmation graph needs a longer jump time")
    keep = recurrent_cells(confirm)
    return [s for s in sets if s & keep]


def chain_control_sets(graph: CellGraph, confirm: CellGraph | None = None) -> list[LabeledSet]:
    """Recurrent SCCs of the epsilon-inflated graph.

    With ``confirm`` (same complex and epsilon, longer jump time) only SCCs
    still holding a recurrent cell there are kept: chains must exist for every
    lower bound on the jump times, and one-step boundary-layer self-loops do
    not survive longer jumps.
    """
    if graph.epsilon <= 0:
        raise SetFinderError("chain control sets need epsilon > 0")
    return [LabeledSet(s, "chain") for s in _persistent(graph, confirm)]


def control_sets(graph: CellGraph, confirm: CellGraph | None = None) -> list[LabeledSet]:
    """Recurrent SCCs of the uninflated graph (``confirm`` as for chain sets)."""
    if graph.epsilon != 0:
        raise SetFinderError("control sets need epsilon = 0")
    return [LabeledSet(s, "control") for s in _persistent(graph, confirm)]


def equilibrium_points(sys: BilinearSystem, signature: FlagSignature, controls) -> list[FlagPoint]:
    """Fixed flags of split regular drifts at interior controls in ``controls``.

    Boundary controls are skipped: their fixed flags sit on the boundary of
    the control sets and would pin spurious recurrent cells outside them.
    """
    return [c.point for c in core_points(sys, signature.theta, controls, warn=False)]


class CorePoint(NamedTuple):
    label: WeylElement
    point: FlagPoint


def core_points(sys: BilinearSystem, theta: Iterable[int], controls, warn: bool = True) -> list[CorePoint]:
    """Fixed flags ``g w b_theta`` of split regular drifts at interior controls."""
    theta = weyl.theta_set(sys.n, theta)
    reps = weyl.coset_representatives(sys.n, theta)
    out = []
    for c in controls:
        if isinstance(c, ControlSample):
            u, interior = c.u, c.interior
        else:
            u = np.atleast_1d(np.asarray(c, dtype=float))
            interior = sys.range.is_interior(u)
        if not interior:
            continue
        try:
            dec = split_decompose(drift_matrix(sys, u))
        except NotSplitError:
            continue
        if not dec.regular:
            continue
        for comp in fixed_components(dec, theta, reps):
            out.append(CorePoint(comp.weyl_label, comp.point))
    if not out and warn:
        log.warning("no interior control yields a split regular drift; no core points")
    return out


def label_sets(sets: Sequence[LabeledSet], cores: Sequence[CorePoint], complex: CellComplex) -> list[LabeledSet]:
    """Attach to each set the labels of the core points lying in its cells."""
    if not cores:
        return list(sets)
    where = complex.locate([c.point for c in cores])
    labels: list[set] = [set() for _ in sets]
    core_cells: list[set] = [set() for _ in sets]
    owner = {}
    for i, s in enumerate(sets):
        for c in s.cells:
            owner[c] = i
    for core, cell in zip(cores, where.tolist()):
        if cell not in owner:
            raise LabelingError(f"core point labelled {core.label} (cell {cell}) lies in no computed set; "
                                "refine the resolution or raise samples_per_cell")
        labels[owner[cell]].add(core.label)
        core_cells[owner[cell]].add(cell)
    return [LabeledSet(s.cells, s.kind, frozenset(l), frozenset(cc)) for s, l, cc in zip(sets, labels, core_cells)]


def effective(sets: Sequence[LabeledSet]) -> list[LabeledSet]:
    """Sets that received at least one Weyl label (nonempty computed core)."""
    return [s for s in sets if s.weyl_labels]


def _identity_set(labeled: Sequence[LabeledSet], n: int) -> LabeledSet:
    e = weyl.identity(n)
    hits = [s for s in labeled if e in s.weyl_labels]
    if len(hits) != 1:
        raise StructureError(f"label e appears in {len(hits)} sets")
    return hits[0]


def semigroup_flag_type(labeled: Sequence[LabeledSet], n: int) -> frozenset[int]:
    """Theta with W_Theta = labels sharing the set of e (maximal flag only)."""
    stab = _identity_set(labeled, n).weyl_labels
    theta = weyl.theta_of_subgroup(n, stab)
    if theta is None:
        raise StructureError(f"labels {[str(w) for w in sorted(stab)]} of the e-set are not a parabolic subgroup")
    return theta


def flag_type_from_partial(labeled: Sequence[LabeledSet], n: int, theta: Iterable[int]) -> frozenset[int]:
    """Smallest Theta' with ``W_Theta' W_theta`` equal to the e-set's labels on F_theta.

    On a partial flag manifold only ``W_Theta(S) W_theta`` is visible; the
    smallest consistent Theta' is returned.
    """
    theta = weyl.theta_set(n, theta)
    if not theta:
        return semigroup_flag_type(labeled, n)
    wt = weyl.subgroup(n, theta)
    reps = _identity_set(labeled, n).weyl_labels
    full = frozenset(weyl.compose(w, v) for w in reps for v in wt)
    for k in range(n):
        for cand in itertools.combinations(range(1, n), k):
            prod = frozenset(weyl.compose(a, b) for a in weyl.subgroup(n, cand) for b in wt)
            if prod == full:
                return frozenset(cand)
    raise StructureError(f"e-set labels {[str(w) for w in sorted(reps)]} are not of the form W_Theta' W_theta")


def domain_of_attraction(graph: CellGraph, target: LabeledSet) -> frozenset[int]:
    """Cells with a path into ``target`` (backward reachability), target included."""
    return graph.reachable(target.cells, reverse=True)


def sink_sets(graph: CellGraph, sets: Sequence[LabeledSet]) -> list[int]:
    """Indices of sets from which no other set in ``sets`` is reachable."""
    owner = {}
    for i, s in enumerate(sets):
        for c in s.cells:
            owner[c] = i
    sinks = []
    for i, s in enumerate(sets):
        reach = graph.reachable(s.cells)
        if not any(owner.get(c, i) != i for c in reach):
            sinks.append(i)
    return sinks


def find_labeled(sets: Sequence[LabeledSet], w: WeylElement, theta: Iterable[int] = ()) -> LabeledSet | None:
    for s in sets:
        if s.carries(w, theta):
            return s
    return None


def boundary_band(cx: CellComplex, cells: Iterable[int], width: float | None = None) -> frozenset[int]:
    """Cells within ``width`` (default one cell, 2 radii) of both the set and its complement."""
    cells = frozenset(cells)
    width = 2.0 * cx.radius * (1 + 1e-6) if width is None else width
    rest = frozenset(range(len(cx))) - cells
    if not cells or not rest:
        return frozenset()
    return cx.dilate(cells, width) & cx.dilate(rest, width)


def apply_exhaustion(cells: Iterable[int], word: Sequence[int], complex_f: CellComplex,
                     complexes_fi: dict) -> frozenset[int]:
    """Apply ``gamma_{word[0]}`` first, then the next letter, and so on."""
    out = frozenset(cells)
    for i in word:
        if i not in complexes_fi:
            raise SetFinderError(f"missing cell complex for F_{{{i}}}")
        out = fiber_saturate(out, i, complex_f, complexes_fi[i])
    return out


@dataclass
class ExhaustionReport:
    w: WeylElement
    word_domain: list[int]
    word_attraction: list[int]
    domain_lhs: int
    domain_rhs: int
    domain_symdiff: int
    domain_band_violations: int
    attraction_violations: int
    degenerate: bool
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["w"] = list(self.w.perm)
        return d


def check_exhaustion_formulas(complex_f: CellComplex, complexes_fi: dict, w: WeylElement,
                              control: Sequence[LabeledSet], control_graph: CellGraph,
                              chains: Sequence[LabeledSet]) -> ExhaustionReport:
    """Compare domains of attraction with fiber exhaustions of the extremal sets.

    Domain formula: ``A(D(w))`` against the exhaustion of ``D(w0)`` along a
    reduced word of ``w0 w``.  Attraction formula: ``E(w)`` must lie in the
    exhaustion of ``E(1)`` along ``w`` intersected with that of ``E(w0)``.
    Exhaustions use one-letter-at-a-time fiber saturation.
    """
    n = complex_f.signature.n
    if n not in (2, 3):
        raise SetFinderError("exhaustion formulas are checked for n in {2, 3}")
    if complex_f.signature.dims != tuple(range(1, n)):
        raise SetFinderError("exhaustion formulas live on the maximal flag manifold")
    missing = [i for i in range(1, n) if i not in complexes_fi]
    if missing:
        raise SetFinderError(f"missing cell complexes for F_i, i in {missing}")
    e, w0 = weyl.identity(n), weyl.longest_element(n)
    word_dom = weyl.reduced_word(weyl.compose(w0, w))
    word_att = weyl.reduced_word(w)
    notes = []
    d_w, d_w0 = find_labeled(control, w), find_labeled(control, w0)
    if d_w is None or d_w0 is None:
        raise LabelingError("control sets carrying w and w0 are required")
    lhs = domain_of_attraction(control_graph, d_w)
    rhs = apply_exhaustion(d_w0.cells, word_dom, complex_f, complexes_fi)
    sym = lhs ^ rhs
    band = boundary_band(complex_f, lhs) | boundary_band(complex_f, rhs)
    degenerate = len(word_dom) == 0
    if degenerate:
        notes.append("w0 w is the identity: the domain formula reduces to A(D(w0)) = D(w0)")

    e_w, e_1, e_w0 = (find_labeled(chains, v) for v in (w, e, w0))
    if e_w is None or e_1 is None or e_w0 is None:
        raise LabelingError("chain sets carrying w, e and w0 are required")
    bound = (apply_exhaustion(e_1.cells, word_att, complex_f, complexes_fi)
             & apply_exhaustion(e_w0.cells, word_dom, complex_f, complexes_fi))
    allowed = complex_f.dilate(bound, complex_f.radius * (1 + 1e-6)) if bound else frozenset()
    return ExhaustionReport(w, word_dom, word_att, len(lhs), len(rhs), len(sym), len(sym - band),
                            len(e_w.cells - allowed), degenerate, notes)
