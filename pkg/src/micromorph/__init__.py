"""Relaxed micromorphic continuum toolkit.

Constitutive laws, conservative elastodynamics on periodic grids, plane-wave
dispersion analysis, static energy minimization, model-to-model coefficient
mappings, and a machine-checked suite of tensor-calculus identities.
"""

from . import dispersion, dynamics, fields, materials, reductions, statics, tensors
from ._kernels import HAVE_COMPILED, USING_COMPILED
from .fields import Grid, ScalarField, TensorField, VectorField
from .materials import MaterialParams, Variant

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "TensorField",
    "MaterialParams",
    "Variant",
    "tensors",
    "fields",
    "materials",
    "dynamics",
    "dispersion",
    "statics",
    "reductions",
    "HAVE_COMPILED",
    "USING_COMPILED",
    "__version__",
]
