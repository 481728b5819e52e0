"""Hot stencil kernels with a compiled core and a numpy fallback.

The compiled Cython extension implements the periodic central-difference
stencil that dominates the fd2 backend's runtime.  Selection happens once at
import: the extension is used when it was built, unless the environment
variable MICROMORPH_PURE_PYTHON is set to a non-empty value.
"""

import os

import numpy as np

__all__ = ["diff_axis_periodic", "HAVE_COMPILED", "USING_COMPILED", "numpy_diff_axis_periodic"]

try:
    from . import _fdstencil

    HAVE_COMPILED = True
except ImportError:
    _fdstencil = None
    HAVE_COMPILED = False


def numpy_diff_axis_periodic(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Second-order periodic central difference along a grid axis.

    `values` has three leading grid axes plus an optional trailing component
    axis; `axis` is 0, 1 or 2.
    """
    return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) * (0.5 / h)


def _compiled_diff_axis_periodic(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    grid_shape = values.shape[:3]
    flat = np.ascontiguousarray(values, dtype=np.float64).reshape(grid_shape + (-1,))
    out = _fdstencil.diff_axis_periodic(flat, axis, h)
    return out.reshape(values.shape)


USING_COMPILED = HAVE_COMPILED and not os.environ.get("MICROMORPH_PURE_PYTHON")

if USING_COMPILED:
    diff_axis_periodic = _compiled_diff_axis_periodic
else:
    diff_axis_periodic = numpy_diff_axis_periodic
