"""Closed-form algebra of real 3x3 tensors and axial vectors.

Every operation broadcasts over leading axes, so arguments may be single
(3, 3) matrices or whole fields of shape (..., 3, 3).  The orthogonal
split used throughout the package is

    X = devsym(X) + skew(X) + (tr(X)/3) * I

whose three parts are pairwise orthogonal in the Frobenius inner product.
"""

from __future__ import annotations

import numpy as np

from .errors import NonSkewInput

__all__ = [
    "IDENTITY",
    "LEVI_CIVITA",
    "sym",
    "skew",
    "dev",
    "devsym",
    "spherical",
    "trace",
    "frob_inner",
    "frob_norm",
    "cartan_decompose",
    "axl",
    "anti",
    "quadform_decompose",
]

IDENTITY = np.eye(3)

# Levi-Civita symbol eps[i, j, k]
LEVI_CIVITA = np.zeros((3, 3, 3))
LEVI_CIVITA[0, 1, 2] = LEVI_CIVITA[1, 2, 0] = LEVI_CIVITA[2, 0, 1] = 1.0
LEVI_CIVITA[0, 2, 1] = LEVI_CIVITA[2, 1, 0] = LEVI_CIVITA[1, 0, 2] = -1.0
LEVI_CIVITA.setflags(write=False)

# Relative tolerance for the skewness precondition of axl().
SKEW_RTOL = 1e-12


def _transpose(X):
    return np.swapaxes(X, -1, -2)


def sym(X):
    """Symmetric part (X + X^T)/2."""
    return 0.5 * (X + _transpose(X))


def skew(X):
    """Skew-symmetric part (X - X^T)/2."""
    return 0.5 * (X - _transpose(X))


def trace(X):
    """Trace over the last two axes."""
    return np.trace(X, axis1=-2, axis2=-1)


def dev(X):
    """Deviatoric (trace-free) part X - tr(X)/3 * I."""
    return X - spherical(X)


def devsym(X):
    """Trace-free symmetric part."""
    return dev(sym(X))


def spherical(X):
    """Spherical part tr(X)/3 * I."""
    return trace(X)[..., None, None] / 3.0 * IDENTITY


def frob_inner(X, Y):
    """Frobenius inner product <X, Y> = tr(X Y^T), broadcast over leading axes."""
    return np.einsum("...ij,...ij->...", X, Y)


def frob_norm(X):
    return np.sqrt(frob_inner(X, X))


def cartan_decompose(X):
    """Split X into (devsym, skew, spherical) parts that sum back to X."""
    sk = skew(X)
    sp = spherical(X)
    return X - sk - sp, sk, sp


def anti(v):
    """Skew tensor with axial vector v, i.e. anti(v) @ x = v x x.

    anti((v1, v2, v3)) = [[0, -v3, v2], [v3, 0, -v1], [-v2, v1, 0]].
    """
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    v1, v2, v3 = v[..., 0], v[..., 1], v[..., 2]
    out[..., 0, 1] = -v3
    out[..., 0, 2] = v2
    out[..., 1, 0] = v3
    out[..., 1, 2] = -v1
    out[..., 2, 0] = -v2
    out[..., 2, 1] = v1
    return out


def axl(A, rtol=SKEW_RTOL):
    """Axial vector of a skew tensor; inverse of anti().

    Raises NonSkewInput when the symmetric residue exceeds rtol * ||A||.
    """
    A = np.asarray(A, dtype=float)
    scale = np.sqrt(np.sum(A * A))
    residue = np.sqrt(np.sum(sym(A) ** 2))
    if residue > rtol * scale:
        raise NonSkewInput(
            f"axl() needs a skew-symmetric input: |sym A| = {residue:.3e} "
            f"> {rtol:.1e} * |A| = {rtol * scale:.3e}"
        )
    out = np.empty(A.shape[:-2] + (3,))
    out[..., 0] = 0.5 * (A[..., 2, 1] - A[..., 1, 2])
    out[..., 1] = 0.5 * (A[..., 0, 2] - A[..., 2, 0])
    out[..., 2] = 0.5 * (A[..., 1, 0] - A[..., 0, 1])
    return out


def quadform_decompose(a1, a2, a3):
    """Coefficients of a1*|X|^2 + a2*<X, X^T> + a3*tr(X)^2 on the orthogonal parts.

    Returns (c_devsym, c_skew, c_sph) such that for every X

        a1*|X|^2 + a2*<X, X^T> + a3*tr(X)^2
            = c_devsym*|devsym X|^2 + c_skew*|skew X|^2 + c_sph*tr(X)^2.
    """
    return a1 + a2, a1 - a2, (a1 + a2 + 3.0 * a3) / 3.0
