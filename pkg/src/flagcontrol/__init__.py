"""Control sets and chain control sets of bilinear systems on real flag manifolds."""

from .dynamics import (BilinearSystem, ConfigError, ControlRange, RangeError, accessibility_diagnostic,
                       backward_system, control_samples, drift_matrix, flow_point, load_system)
from .flag_manifold import (CellComplex, FlagError, FlagPoint, FlagSignature, act, base_point, discretize,
                            distance, fiber_saturate, project, weyl_point)
from .harness import PipelineError, RunConfig, VerificationReport, analyze, load_config, run
from .kernels import BACKEND
from .lie_structure import (CartanElement, ChamberError, LabelError, NotSplitError, SplitDecomposition,
                            fixed_components, flag_type_of, simple_roots, split_decompose)
from .setfinder import (CellGraph, LabeledSet, LabelingError, StructureError, build_graph, chain_control_sets,
                        check_exhaustion_formulas, control_sets, core_points, domain_of_attraction, label_sets,
                        semigroup_flag_type)
from .weyl import WeylElement, WeylError

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BilinearSystem", "CartanElement", "CellComplex", "CellGraph", "ChamberError", "ConfigError",
    "ControlRange", "FlagError", "FlagPoint", "FlagSignature", "LabelError", "LabeledSet", "LabelingError",
    "NotSplitError", "PipelineError", "RangeError", "RunConfig", "SplitDecomposition", "StructureError",
    "VerificationReport", "WeylElement", "WeylError", "accessibility_diagnostic", "act", "analyze",
    "backward_system", "base_point", "build_graph", "chain_control_sets", "check_exhaustion_formulas",
    "control_samples", "control_sets", "core_points", "discretize", "distance", "domain_of_attraction",
    "drift_matrix", "fiber_saturate", "fixed_components", "flag_type_of", "flow_point", "label_sets",
    "load_config", "load_system", "project", "run", "semigroup_flag_type", "simple_roots", "split_decompose",
    "weyl_point",
]
