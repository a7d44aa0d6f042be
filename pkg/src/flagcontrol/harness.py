"""Run configuration, the analysis pipeline and the verification checks.

A run discretizes F_theta, builds the cell graphs (epsilon = 0, epsilon and
2 epsilon, forward and backward), extracts and labels the sets, infers the
flag types and then evaluates the registered checks.  Check outcomes are
results, never exceptions; only configuration and labeling problems abort.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import kernels, weyl
from .dynamics import (AccessibilityReport, BilinearSystem, ConfigError, accessibility_diagnostic,
                       backward_system, control_samples, load_system)
from .flag_manifold import CellComplex, FlagError, FlagSignature, discretize
from .setfinder import (CellGraph, ExhaustionReport, LabeledSet, LabelingError, SetFinderError, StructureError,
                        boundary_band, build_graph, chain_control_sets, check_exhaustion_formulas, control_sets, core_points,
                        domain_of_attraction, effective, find_labeled, flag_type_from_partial, label_sets,
                        sink_sets)

log = logging.getLogger(__name__)

CHECKS = ("accessibility", "containment", "counts", "closure", "monotonicity", "condensation",
          "exhaustion", "core_intersection")

PASS, FAIL, SKIP = "pass", "fail", "skip"


class PipelineError(RuntimeError):
    """A pipeline stage could not produce its output."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.message = message


@dataclass(frozen=True, eq=False)
class RunConfig:
    system: BilinearSystem
    theta: frozenset[int] = frozenset()
    resolution: int = 360
    samples_per_cell: int = 4
    control_level: int = 1
    tau: float = 0.5
    epsilon: float | None = None
    epsilon_factor: float = 1.5
    seed: int = 0
    checks: tuple[str, ...] = CHECKS
    confirm_factor: float = 4.0
    accessibility_points: int = 100
    exhaustion_resolution: int | None = None
    complex_cache: str | None = None
    workers: int = 1

    def to_json(self) -> dict:
        return {
            "system": self.system.to_json(),
            "theta": sorted(self.theta),
            "resolution": self.resolution,
            "samples_per_cell": self.samples_per_cell,
            "control_level": self.control_level,
            "tau": self.tau,
            "epsilon": self.epsilon,
            "epsilon_factor": self.epsilon_factor,
            "seed": self.seed,
            "checks": list(self.checks),
            "confirm_factor": self.confirm_factor,
            "accessibility_points": self.accessibility_points,
            "exhaustion_resolution": self.exhaustion_resolution,
        }


_INT_FIELDS = ("resolution", "samples_per_cell", "control_level", "seed", "accessibility_points",
               "exhaustion_resolution", "workers")
_FLOAT_FIELDS = ("tau", "epsilon", "epsilon_factor", "confirm_factor")


def parse_theta(value, n: int) -> frozenset[int]:
    if isinstance(value, str):
        value = [int(t) for t in value.replace(" ", "").split(",") if t]
    try:
        return weyl.theta_set(n, value)
    except (weyl.WeylError, TypeError, ValueError) as exc:
        raise ConfigError(f"field 'theta': {exc}") from exc


def load_config(data: dict | str | Path) -> RunConfig:
    """Build a :class:`RunConfig` from a dict or a JSON file.

    The system goes under ``"system"`` or at top level (``n``, ``A``, ``B``,
    ``range``).  ``epsilon`` defaults to ``epsilon_factor`` times the
    covering radius.
    """
    if not isinstance(data, dict):
        path = Path(data)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {path} not found") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    sys = load_system(data["system"] if "system" in data else data)
    kw: dict[str, Any] = {"system": sys}
    if "theta" in data:
        kw["theta"] = parse_theta(data["theta"], sys.n)
    for name in _INT_FIELDS:
        if data.get(name) is not None:
            try:
                kw[name] = int(data[name])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"field '{name}' must be an integer") from exc
    for name in _FLOAT_FIELDS:
        if data.get(name) is not None:
            try:
                kw[name] = float(data[name])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"field '{name}' must be a number") from exc
    if "checks" in data:
        checks = data["checks"]
        if isinstance(checks, str):
            checks = [c for c in checks.split(",") if c]
        kw["checks"] = tuple(checks)
    if data.get("complex_cache") is not None:
        kw["complex_cache"] = str(data["complex_cache"])
    cfg = RunConfig(**kw)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    for name in ("resolution", "samples_per_cell", "control_level", "accessibility_points", "workers"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"field '{name}' must be positive")
    if cfg.exhaustion_resolution is not None and cfg.exhaustion_resolution < 1:
        raise ConfigError("field 'exhaustion_resolution' must be positive")
    if cfg.tau <= 0:
        raise ConfigError("field 'tau' must be positive")
    if cfg.epsilon is not None and cfg.epsilon < 0:
        raise ConfigError("field 'epsilon' must be >= 0")
    if cfg.epsilon_factor <= 0:
        raise ConfigError("field 'epsilon_factor' must be positive")
    if cfg.confirm_factor <= 1:
        raise ConfigError("field 'confirm_factor' must exceed 1")
    unknown = [c for c in cfg.checks if c not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown checks {unknown}; registered: {list(CHECKS)}")
    if len(set(cfg.checks)) != len(cfg.checks):
        raise ConfigError("field 'checks' lists a check twice")


@dataclass
class CheckResult:
    name: str
    status: str
    measured: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    reason: str | None = None
    runtime_s: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_json(self) -> dict:
        return {"name": self.name, "status": self.status, "measured": self.measured,
                "tolerances": self.tolerances, "reason": self.reason, "runtime_s": self.runtime_s}


def _labels(s: LabeledSet) -> list[list[int]]:
    return [list(w.perm) for w in sorted(s.weyl_labels)]


def _contained(inner: LabeledSet, outer: LabeledSet) -> bool:
    return inner.cells <= outer.cells


# -- checks on plain inputs --------------------------------------------------

def check_containment(controls: Sequence[LabeledSet], chains: Sequence[LabeledSet]) -> CheckResult:
    """Every chain set must contain at least one whole control set."""
    per_chain = []
    violations = 0
    for e in chains:
        inside = [i for i, d in enumerate(controls) if _contained(d, e)]
        per_chain.append({"chain_size": len(e.cells), "labels": _labels(e), "controls_inside": inside})
        if not inside:
            violations += 1
    return CheckResult("containment", FAIL if violations or not chains else PASS,
                       {"violations": violations, "chains": per_chain},
                       {"violations": 0},
                       None if chains else "no chain sets")


def check_counts(n: int, theta: Iterable[int], theta_s: frozenset[int] | None, theta_phi: frozenset[int] | None,
                 controls: Sequence[LabeledSet], chains: Sequence[LabeledSet]) -> CheckResult:
    if theta_s is None or theta_phi is None:
        return CheckResult("counts", SKIP, reason="flag type inference failed upstream")
    theta = weyl.theta_set(n, theta)
    want_d = len(weyl.double_cosets(n, theta_s, theta))
    want_e = len(weyl.double_cosets(n, theta_phi, theta))
    measured = {"control_sets": len(controls), "expected_control_sets": want_d,
                "chain_sets": len(chains), "expected_chain_sets": want_e,
                "theta_S": sorted(theta_s), "theta_phi": sorted(theta_phi)}
    ok = len(controls) == want_d and len(chains) == want_e
    return CheckResult("counts", PASS if ok else FAIL, measured, {"count_difference": 0})


def check_closure(controls: Sequence[LabeledSet], chains: Sequence[LabeledSet], complex: CellComplex,
                  epsilon: float, theta_s: frozenset[int] | None, theta_phi: frozenset[int] | None) -> CheckResult:
    """Closures of control sets against chain sets.

    Equal flag types: each control set and the chain set sharing its labels
    are within Hausdorff distance ``2 radius + epsilon``.  Different flag
    types: some chain set must stick out of that dilation of every control
    set it contains.
    """
    tol = 2.0 * complex.radius + epsilon
    if theta_s is None or theta_phi is None:
        return CheckResult("closure", SKIP, tolerances={"hausdorff": tol}, reason="flag types unavailable")
    if theta_s == theta_phi:
        pairs = []
        for d in controls:
            match = [e for e in chains if d.weyl_labels & e.weyl_labels]
            if len(match) != 1:
                return CheckResult("closure", SKIP, tolerances={"hausdorff": tol},
                                   reason=f"control set with labels {_labels(d)} matches {len(match)} chain sets")
            gap = complex.set_distance(d.cells, match[0].cells)
            pairs.append({"labels": _labels(d), "hausdorff": gap, "ok": gap <= tol})
        ok = bool(pairs) and all(p["ok"] for p in pairs)
        return CheckResult("closure", PASS if ok else FAIL, {"mode": "equal", "pairs": pairs},
                           {"hausdorff": tol}, None if pairs else "no control sets")
    exceeding = []
    for k, e in enumerate(chains):
        inside = [d for d in controls if _contained(d, e)]
        if inside and all(e.cells - complex.dilate(d.cells, tol) for d in inside):
            exceeding.append(k)
    return CheckResult("closure", PASS if exceeding else FAIL,
                       {"mode": "different", "exceeding_chain_sets": exceeding}, {"hausdorff": tol})


def check_monotonicity(chains: Sequence[LabeledSet], chains_wide: Sequence[LabeledSet]) -> CheckResult:
    """Chain sets at epsilon nest cellwise into chain sets at 2 epsilon."""
    violations = sum(1 for e in chains if not any(_contained(e, f) for f in chains_wide))
    return CheckResult("monotonicity", PASS if violations == 0 else FAIL,
                       {"violations": violations, "sets": len(chains), "sets_wide": len(chains_wide)},
                       {"violations": 0})


def _unique_sink(graph: CellGraph, sets: Sequence[LabeledSet], w, theta) -> dict:
    sinks = sink_sets(graph, sets)
    carrying = [i for i in sinks if sets[i].carries(w, theta)]
    return {"sinks": len(sinks), "sink_labels": [_labels(sets[i]) for i in sinks],
            "ok": len(sinks) == 1 and len(carrying) == 1}


def check_condensation(forward: CellGraph, controls: Sequence[LabeledSet], backward: CellGraph,
                       backward_controls: Sequence[LabeledSet], n: int, theta) -> CheckResult:
    """Unique forward sink carrying e and unique backward sink carrying w0."""
    fw = _unique_sink(forward, controls, weyl.identity(n), theta)
    bw = _unique_sink(backward, backward_controls, weyl.longest_element(n), theta)
    ok = fw["ok"] and bw["ok"]
    return CheckResult("condensation", PASS if ok else FAIL, {"forward": fw, "backward": bw},
                       {"sinks": 1})


def check_core_intersection(forward: CellGraph, controls: Sequence[LabeledSet], backward: CellGraph,
                            backward_controls: Sequence[LabeledSet], theta) -> CheckResult:
    """``A(D(w)) ∩ A*(D*(w))`` holds the core cells and matches D(w) up to one cell."""
    cx = forward.complex
    rows = []
    ok = True
    for d in controls:
        w = min(d.weyl_labels)
        star = find_labeled(backward_controls, w, theta)
        if star is None:
            return CheckResult("core_intersection", SKIP,
                               reason=f"no backward control set carries {list(w.perm)}")
        inter = domain_of_attraction(forward, d) & domain_of_attraction(backward, star)
        sym = inter ^ d.cells
        outside = len(sym - boundary_band(cx, d.cells))
        cores_in = d.core_cells <= inter
        rows.append({"labels": _labels(d), "intersection": len(inter), "set": len(d.cells),
                     "symmetric_difference": len(sym), "outside_band": outside, "cores_inside": cores_in})
        ok = ok and cores_in and outside == 0
    return CheckResult("core_intersection", PASS if ok and rows else FAIL, {"sets": rows},
                       {"outside_band": 0})


# -- pipeline ----------------------------------------------------------------

@dataclass(eq=False)
class Analysis:
    config: RunConfig
    complex: CellComplex
    epsilon: float
    graphs: dict[str, CellGraph]
    control: list[LabeledSet]
    non_effective: list[LabeledSet]
    chains: list[LabeledSet]
    chains_wide: list[LabeledSet]
    backward_control: list[LabeledSet]
    theta_s: frozenset[int] | None
    theta_phi: frozenset[int] | None
    notes: list[str]
    timing: dict[str, float]


def _cache_path(cfg: RunConfig, sig: FlagSignature, resolution: int) -> Path | None:
    if not cfg.complex_cache:
        return None
    dims = "-".join(map(str, sig.dims)) or "pt"
    return Path(cfg.complex_cache) / f"complex_n{sig.n}_d{dims}_r{resolution}_s{cfg.seed}.json"


def get_complex(cfg: RunConfig, sig: FlagSignature, resolution: int) -> CellComplex:
    path = _cache_path(cfg, sig, resolution)
    if path is not None and path.exists():
        cx = CellComplex.load(path)
        if cx.signature == sig and cx.resolution == resolution and cx.seed == cfg.seed:
            return cx
        log.warning("ignoring mismatched cached complex %s", path)
    try:
        cx = discretize(sig, resolution, seed=cfg.seed)
    except FlagError as exc:
        raise PipelineError("discretize", str(exc)) from exc
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        cx.save(path)
    return cx


def _infer_theta(sets: Sequence[LabeledSet], n: int, theta, what: str, notes: list[str]):
    try:
        return flag_type_from_partial(sets, n, theta)
    except StructureError as exc:
        notes.append(f"{what} flag type: {exc}")
        return None


def analyze(cfg: RunConfig) -> Analysis:
    validate_config(cfg)
    timing: dict[str, float] = {}
    notes: list[str] = []
    sys, n = cfg.system, cfg.system.n
    sig = FlagSignature.from_theta(n, cfg.theta)

    t0 = time.perf_counter()
    cx = get_complex(cfg, sig, cfg.resolution)
    timing["discretize"] = time.perf_counter() - t0
    eps = cfg.epsilon if cfg.epsilon is not None else cfg.epsilon_factor * cx.radius
    if eps <= 0:
        raise PipelineError("configure", "epsilon must be positive for chain control sets")

    controls = control_samples(sys.range, cfg.control_level)
    cores = core_points(sys, cfg.theta, controls)
    if not cores:
        raise PipelineError("core_points", "no interior control gives a split regular drift; nothing to label")
    extra = [c.point for c in cores]
    back = backward_system(sys)

    t0 = time.perf_counter()
    long_tau = cfg.tau * cfg.confirm_factor
    graphs = {}
    for name, s, e in (("forward_0", sys, 0.0), ("forward_eps", sys, eps), ("forward_2eps", sys, 2 * eps),
                       ("backward_0", back, 0.0)):
        for tag, tau in (("", cfg.tau), ("_confirm", long_tau)):
            try:
                graphs[name + tag] = build_graph(s, cx, tau, e, controls, cfg.samples_per_cell, cfg.seed,
                                                 extra_points=extra, workers=cfg.workers)
            except SetFinderError as exc:
                raise PipelineError("build_graph", str(exc)) from exc
    timing["graphs"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        control_all = label_sets(control_sets(graphs["forward_0"], graphs["forward_0_confirm"]), cores, cx)
        chains = label_sets(chain_control_sets(graphs["forward_eps"], graphs["forward_eps_confirm"]), cores, cx)
        chains_wide = label_sets(chain_control_sets(graphs["forward_2eps"], graphs["forward_2eps_confirm"]),
                                 cores, cx)
        back_all = label_sets(control_sets(graphs["backward_0"], graphs["backward_0_confirm"]), cores, cx)
    except LabelingError as exc:
        raise PipelineError("label_sets", str(exc)) from exc
    control = effective(control_all)
    non_effective = [s for s in control_all if not s.weyl_labels]
    if non_effective:
        notes.append(f"{len(non_effective)} recurrent cell components without core points "
                     "(boundary-layer artifacts of the inner approximation) are not counted")
    unlabeled_chains = sum(1 for s in chains if not s.weyl_labels)
    if unlabeled_chains:
        notes.append(f"{unlabeled_chains} chain sets carry no label")
    theta_s = _infer_theta(control, n, cfg.theta, "control", notes) if control else None
    theta_phi = _infer_theta(chains, n, cfg.theta, "chain", notes) if chains else None
    timing["sets"] = time.perf_counter() - t0
    return Analysis(cfg, cx, eps, graphs, control, non_effective, chains, chains_wide, effective(back_all),
                    theta_s, theta_phi, notes, timing)


def _exhaustion(a: Analysis) -> CheckResult:
    cfg, n = a.config, a.config.system.n
    if not (n == 2 or (n == 3 and not cfg.theta)):
        return CheckResult("exhaustion", SKIP, reason="exhaustion formulas are checked for n = 2 and for n = 3 "
                                                      "on the maximal flag")
    res = cfg.exhaustion_resolution or max(8, cfg.resolution // 2)
    fi = {i: get_complex(cfg, FlagSignature.from_theta(n, [i]), res) for i in range(1, n)}
    rows, ok = [], True
    for w in weyl.all_elements(n):
        if find_labeled(a.control, w) is None:
            continue
        try:
            rep: ExhaustionReport = check_exhaustion_formulas(a.complex, fi, w, a.control,
                                                              a.graphs["forward_0"], a.chains)
        except LabelingError as exc:
            rows.append({"w": list(w.perm), "skipped": str(exc)})
            continue
        rows.append(rep.to_json())
        if not rep.degenerate:
            ok = ok and rep.domain_band_violations == 0
        ok = ok and rep.attraction_violations == 0
    if not any("skipped" not in r for r in rows):
        return CheckResult("exhaustion", SKIP, {"reports": rows}, reason="no labeled set pairs available")
    return CheckResult("exhaustion", PASS if ok else FAIL, {"reports": rows},
                       {"domain_band_violations": 0, "attraction_violations": 0})


def _accessibility(a: Analysis) -> tuple[CheckResult, AccessibilityReport]:
    cfg = a.config
    rep = accessibility_diagnostic(cfg.system, a.complex.signature, cfg.accessibility_points, cfg.seed)
    return CheckResult("accessibility", PASS if rep.accessible else FAIL, rep.to_json(),
                       {"min_rank": rep.manifold_dim}), rep


def evaluate_checks(a: Analysis) -> list[CheckResult]:
    cfg = a.config
    n = cfg.system.n
    t0 = time.perf_counter()
    acc, rep = _accessibility(a)
    acc.runtime_s = time.perf_counter() - t0
    runners: dict[str, Callable[[], CheckResult]] = {
        "containment": lambda: check_containment(a.control, a.chains),
        "counts": lambda: check_counts(n, cfg.theta, a.theta_s, a.theta_phi, a.control, a.chains),
        "closure": lambda: check_closure(a.control, a.chains, a.complex, a.epsilon, a.theta_s, a.theta_phi),
        "monotonicity": lambda: check_monotonicity(a.chains, a.chains_wide),
        "condensation": lambda: check_condensation(a.graphs["forward_0"], a.control, a.graphs["backward_0"],
                                                   a.backward_control, n, cfg.theta),
        "exhaustion": lambda: _exhaustion(a),
        "core_intersection": lambda: check_core_intersection(a.graphs["forward_0"], a.control,
                                                             a.graphs["backward_0"], a.backward_control,
                                                             cfg.theta),
    }
    out = []
    for name in cfg.checks:
        if name == "accessibility":
            out.append(acc)
            continue
        if not rep.accessible:
            out.append(CheckResult(name, SKIP, reason="local accessibility fails at sampled flags"))
            continue
        t0 = time.perf_counter()
        res = runners[name]()
        res.runtime_s = time.perf_counter() - t0
        out.append(res)
    return out


@dataclass
class VerificationReport:
    config: dict
    summary: dict
    checks: list[CheckResult]
    timing: dict[str, float]

    @property
    def failed(self) -> bool:
        return any(c.status == FAIL for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self, timing: bool = True) -> dict:
        checks = [c.to_json() for c in self.checks]
        if not timing:
            for c in checks:
                c.pop("runtime_s")
        d = {"config": self.config, "summary": self.summary, "checks": checks,
             "status": FAIL if self.failed else PASS}
        if timing:
            d["timing"] = self.timing
        return d

    def dumps(self, timing: bool = True) -> str:
        return json.dumps(self.to_json(timing), indent=2, sort_keys=True)


def summarize(a: Analysis) -> dict:
    cx = a.complex
    return {
        "backend": kernels.BACKEND,
        "complex": {"n": cx.signature.n, "dims": list(cx.signature.dims), "cells": len(cx),
                    "radius": cx.radius},
        "epsilon": a.epsilon,
        "theta_S": None if a.theta_s is None else sorted(a.theta_s),
        "theta_phi": None if a.theta_phi is None else sorted(a.theta_phi),
        "control_sets": [s.to_json() for s in a.control],
        "non_effective_control_sets": [s.to_json() for s in a.non_effective],
        "chain_sets": [s.to_json() for s in a.chains],
        "chain_sets_2eps": [s.to_json() for s in a.chains_wide],
        "edges": {k: g.n_edges for k, g in sorted(a.graphs.items())},
        "notes": a.notes,
    }


def write_csv(a: Analysis, path: str | Path) -> None:
    """One row per cell: id, center frame columns for the kept dims, set ids."""
    cx = a.complex
    k = max(cx.signature.dims) if cx.signature.dims else 0
    owner_d = {c: i for i, s in enumerate(a.control) for c in s.cells}
    owner_e = {c: i for i, s in enumerate(a.chains) for c in s.cells}
    n = cx.signature.n
    header = ["cell"] + [f"x{r}{c}" for c in range(k) for r in range(n)] + ["control_set", "chain_set"]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for i in range(len(cx)):
            coords = np.asarray(cx.centers[i][:, :k]).T.reshape(-1)
            wr.writerow([i, *[f"{v:.10g}" for v in coords], owner_d.get(i, -1), owner_e.get(i, -1)])


def run(cfg: RunConfig, out: str | Path | None = None, csv_path: str | Path | None = None) -> VerificationReport:
    t0 = time.perf_counter()
    a = analyze(cfg)
    checks = evaluate_checks(a)
    timing = dict(a.timing)
    timing["checks"] = sum(c.runtime_s for c in checks)
    timing["total"] = time.perf_counter() - t0
    report = VerificationReport(cfg.to_json(), summarize(a), checks, timing)
    if out is not None:
        Path(out).write_text(report.dumps() + "\n")
    if csv_path is not None:
        write_csv(a, csv_path)
    return report
