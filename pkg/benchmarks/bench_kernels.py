"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--cells 2000]

Kernel timings call both modules directly.  The end-to-end graph build runs
in a subprocess per backend, since the backend is fixed at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from flagcontrol import _kernels_py

try:
    from flagcontrol import _kernels
except ImportError:
    _kernels = None

GRAPH_SNIPPET = """
import time
import numpy as np
from flagcontrol import kernels
from flagcontrol.dynamics import BilinearSystem, ControlRange, control_samples
from flagcontrol.flag_manifold import FlagSignature, discretize
from flagcontrol.setfinder import build_graph
A = np.diag([2.0, 0.0, -2.0])
B = np.array([[0.0, -1.0, -1.0], [1.0, 0.0, -1.0], [1.0, 1.0, 0.0]])
sys_ = BilinearSystem(A, (B,), ControlRange([-0.2], [0.2]))
t0 = time.perf_counter()
cx = discretize(FlagSignature.from_theta(3, [2]), {cells})
t1 = time.perf_counter()
build_graph(sys_, cx, 0.5, 1.5 * cx.radius, control_samples(sys_.range, 1), 4)
t2 = time.perf_counter()
print(kernels.BACKEND, t1 - t0, t2 - t1)
"""


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_rows(repeat, cells):
    rng = np.random.default_rng(0)
    raw = rng.standard_normal((20_000, 3, 3))
    q, _ = _kernels_py.orthonormalize(raw)
    feats = _kernels_py.projector_features(q, (1, 2))
    centers = feats[:cells]
    cases = {
        "orthonormalize 20000x3x3": lambda m: m.orthonormalize(raw),
        "projector_features 20000": lambda m: m.projector_features(q, (1, 2)),
        f"nearest 20000 vs {cells}": lambda m: m.nearest(feats, centers),
        f"within {cells} vs {cells}": lambda m: m.within(centers, centers, 0.3),
    }
    mods = [("python", _kernels_py)] + ([("cython", _kernels)] if _kernels is not None else [])
    for name, case in cases.items():
        times = {label: bench(lambda: case(mod), repeat) for label, mod in mods}
        yield name, times


def graph_rows(cells):
    out = {}
    for label, env in (("python", "1"), ("cython", "0")):
        if label == "cython" and _kernels is None:
            continue
        res = subprocess.run([sys.executable, "-c", GRAPH_SNIPPET.format(cells=cells)],
                             env=dict(os.environ, FLAGCONTROL_PURE_PYTHON=env),
                             capture_output=True, text=True, check=True)
        backend, disc, graph = res.stdout.split()
        out[backend] = (float(disc), float(graph))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--cells", type=int, default=2000)
    args = ap.parse_args(argv)

    if _kernels is None:
        print("compiled extension not built; timing the numpy fallback only")
    print(f"{'kernel':34s} {'python':>10s} {'cython':>10s} {'speedup':>8s}")
    for name, t in kernel_rows(args.repeat, args.cells):
        py, cy = t["python"], t.get("cython")
        tail = f"{cy:10.4f} {py / cy:8.1f}x" if cy else f"{'-':>10s} {'-':>8s}"
        print(f"{name:34s} {py:10.4f} {tail}")

    print(f"\nRP^2 complex and graph build, {args.cells} cells")
    for backend, (disc, graph) in graph_rows(args.cells).items():
        print(f"  {backend:7s} discretize {disc:7.2f}s  build_graph {graph:7.2f}s")


if __name__ == "__main__":
    main()
