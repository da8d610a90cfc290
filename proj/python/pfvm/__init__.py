"""Finite volume solver for coupled heat / phase-field solidification.

The extension module carries the mesh machinery, interpolation norms,
the semi-discrete scheme and the estimate bookkeeping; this package is a
thin re-export so both installed wheels and CMake build trees import the
same way.
"""

try:
    from ._pfvm import *  # noqa: F401,F403
    from ._pfvm import __doc__ as _core_doc
except ImportError:  # build tree: the module sits on sys.path directly
    from _pfvm import *  # noqa: F401,F403
    from _pfvm import __doc__ as _core_doc

__all__ = [
    "Mesh",
    "generate_box_mesh",
    "uniform_box_mesh",
    "refine_box_mesh",
    "load_mesh",
    "project",
    "discrete_products",
    "eval_interpolants",
    "interpolant_norm_bound",
    "dual_volume_sum",
    "reaction_cubic",
    "double_well",
    "double_well_constant",
    "limiter",
    "stable_dt",
    "run_simulation",
    "run_and_write",
    "refinement_study",
    "serialize_config",
    "InputError",
    "FormatError",
    "BlowupError",
]
