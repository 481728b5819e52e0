"""Machine checks of the tensor-calculus identity suite (items a through q).

Trigonometric/random fields run on the spectral backend with residual
tolerance 1e-10; polynomial coordinate fields run on the fd2 backend where
central differences are exact at interior nodes (tolerance 1e-12).  Every
check returns a relative residual so the suite is scale-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensors
from .fields import Grid, ScalarField, TensorField, VectorField, curl, curl_of_scalar_identity, div, grad, laplacian, random_band_limited
from .materials import MaterialParams, Variant
from .reductions import nye_identities, symmetry_residual, teisseyre_einstein

__all__ = ["IdentityResult", "run_identity_suite", "format_summary"]

SPECTRAL_TOL = 1e-10
FD_TOL = 1e-12


@dataclass(frozen=True)
class IdentityResult:
    item: str
    description: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  [{self.item}] {self.description}: residual {self.residual:.6e} (tol {self.tolerance:.1e})"


def _rel_diff(a, b):
    scale = max(float(np.sqrt(np.sum(a * a))), float(np.sqrt(np.sum(b * b))), 1e-300)
    return float(np.sqrt(np.sum((a - b) ** 2)) / scale)


def _rel_to(a, reference):
    scale = max(float(np.sqrt(np.sum(reference * reference))), 1e-300)
    return float(np.sqrt(np.sum(a * a)) / scale)


def _axl_field(P_vals):
    out = np.empty(P_vals.shape[:-2] + (3,))
    out[..., 0] = 0.5 * (P_vals[..., 2, 1] - P_vals[..., 1, 2])
    out[..., 1] = 0.5 * (P_vals[..., 0, 2] - P_vals[..., 2, 0])
    out[..., 2] = 0.5 * (P_vals[..., 1, 0] - P_vals[..., 0, 1])
    return out


def run_identity_suite(n: int = 16, seed: int = 0) -> list:
    """Evaluate all identity checks on an n^3 grid; returns IdentityResult rows."""
    rng = np.random.default_rng(seed)
    grid = Grid(n, "spectral")
    results = []

    def add(item, description, residual, tol=SPECTRAL_TOL):
        results.append(IdentityResult(item, description, float(residual), tol))

    # -- a) the two skew-field curvature formulas ---------------------------
    w = random_band_limited(grid, "vector", rng)
    A = TensorField(tensors.anti(w.values), grid)
    r1, r2 = nye_identities(A)
    add("a", "curl of a skew field from the gradient of its axial vector", r1)
    add("a", "gradient of the axial vector from the curl", r2)

    # -- b) curl of a spherical field ---------------------------------------
    x1, x2, x3 = grid.meshgrid()
    zeta = ScalarField(np.sin(x3), grid)
    C = curl_of_scalar_identity(zeta)
    expected = np.zeros_like(C.values)
    expected[..., 0, 1] = np.cos(x3)
    expected[..., 1, 0] = -np.cos(x3)
    add("b", "curl(zeta*I) explicit matrix for zeta = sin x3", _rel_diff(C.values, expected))
    sph = TensorField(zeta.values[..., None, None] * tensors.IDENTITY, grid)
    add("b", "dedicated spherical-curl equals the generic row-wise curl",
        _rel_diff(C.values, curl(sph).values))
    add("b", "curl(zeta*I) is skew-valued", _rel_to(tensors.sym(C.values), C.values))
    zeta2 = ScalarField(np.sin(x1) * np.sin(x2), grid)
    CC = curl(curl(TensorField(zeta2.values[..., None, None] * tensors.IDENTITY, grid)))
    add("b", "curl(curl(zeta*I)) is symmetric", _rel_to(tensors.skew(CC.values), CC.values))
    lap = laplacian(zeta2)
    add("b", "tr curl(curl(zeta*I)) = -2*Lap(zeta)",
        _rel_diff(tensors.trace(CC.values), -2.0 * lap.values))

    # -- c) linear coordinate field, fd2 at interior nodes -------------------
    # the skew field with axial vector x/2 has the identity as its curl
    fd = Grid(n, "fd2")
    xx1, xx2, xx3 = fd.meshgrid()
    coords = 0.5 * np.stack([xx1, xx2, xx3], axis=-1)
    A_lin = TensorField(tensors.anti(coords), fd)
    CA = curl(A_lin).values
    interior = (slice(1, n - 1),) * 3
    add("c", "curl of the skew half-coordinate field is the identity tensor (fd2, interior)",
        _rel_diff(CA[interior], np.broadcast_to(tensors.IDENTITY, CA[interior].shape)), FD_TOL)

    # -- d) trace of the curl of a symmetric field --------------------------
    S = TensorField(tensors.sym(random_band_limited(grid, "tensor", rng).values), grid)
    CS = curl(S)
    add("d", "tr(curl S) = 0 for symmetric S", _rel_to(tensors.trace(CS.values), CS.values))

    # -- e/f) symmetry classes of curl-transpose-curl -----------------------
    CCt_S = curl(TensorField(np.swapaxes(CS.values, -1, -2), grid)).values
    add("e", "curl[(curl S)^T] symmetric for symmetric S", _rel_to(tensors.skew(CCt_S), CCt_S))
    CA_r = curl(A).values
    CCt_A = curl(TensorField(np.swapaxes(CA_r, -1, -2), grid)).values
    add("f", "curl[(curl A)^T] skew for skew A", _rel_to(tensors.sym(CCt_A), CCt_A))

    # -- g) the same split applied to a generic field -----------------------
    P = random_band_limited(grid, "tensor", rng)
    symP = TensorField(tensors.sym(P.values), grid)
    skewP = TensorField(tensors.skew(P.values), grid)
    t1 = curl(TensorField(np.swapaxes(curl(symP).values, -1, -2), grid)).values
    t2 = curl(TensorField(np.swapaxes(curl(skewP).values, -1, -2), grid)).values
    add("g", "curl[(curl sym P)^T] symmetric", _rel_to(tensors.skew(t1), t1))
    add("g", "curl[(curl skew P)^T] skew", _rel_to(tensors.sym(t2), t2))

    # -- h) trace identity on skew fields -----------------------------------
    inner_skew = TensorField(tensors.skew(curl(A).values), grid)
    add("h", "tr curl(skew curl A) = 0 for skew A",
        _rel_to(tensors.trace(curl(inner_skew).values), curl(inner_skew).values))

    # -- i) compatibility: inc of a symmetrized gradient --------------------
    u = random_band_limited(grid, "vector", rng)
    strain = TensorField(tensors.sym(grad(u).values), grid)
    inc = curl(TensorField(np.swapaxes(curl(strain).values, -1, -2), grid)).values
    reference = curl(curl(strain)).values
    add("i", "inc(sym grad u) = 0", _rel_to(inc, reference))
    inc_bad = curl(TensorField(np.swapaxes(curl(symP).values, -1, -2), grid)).values
    incompat = _rel_to(inc_bad, curl(curl(symP)).values)
    add("i", "inc of a generic symmetric field does not vanish",
        0.0 if incompat > 1e-3 else 1.0, tol=0.5)

    # -- j) axial-vector gradient of a rotation gradient --------------------
    lhs = grad(VectorField(_axl_field(tensors.skew(grad(u).values)), grid)).values
    rhs = np.swapaxes(curl(strain).values, -1, -2)
    add("j", "grad axl(skew grad u) = [curl(sym grad u)]^T", _rel_diff(lhs, rhs))
    lhs_bad = grad(VectorField(_axl_field(tensors.skew(P.values)), grid)).values
    rhs_bad = np.swapaxes(curl(symP).values, -1, -2)
    add("j", "the same expression differs on a generic field",
        0.0 if _rel_diff(lhs_bad, rhs_bad) > 1e-3 else 1.0, tol=0.5)

    # -- k) quadratic-form decomposition ------------------------------------
    worst = 0.0
    for _ in range(100):
        a1, a2, a3 = rng.standard_normal(3)
        X = rng.standard_normal((3, 3))
        lhs_val = a1 * np.sum(X * X) + a2 * np.sum(X * X.T) + a3 * np.trace(X) ** 2
        cd, cw, cs = tensors.quadform_decompose(a1, a2, a3)
        d_, w_, _ = tensors.cartan_decompose(X)
        rhs_val = cd * np.sum(d_ * d_) + cw * np.sum(w_ * w_) + cs * np.trace(X) ** 2
        scale = max(abs(lhs_val), abs(rhs_val), 1.0)
        worst = max(worst, abs(lhs_val - rhs_val) / scale)
    add("k", "quadratic form equals its orthogonal-split form (100 random draws)", worst, tol=1e-12)

    # -- l/m/n) skew-part plumbing behind the symmetric-model constraint ----
    pvec = _axl_field(tensors.skew(P.values))
    divp = div(VectorField(pvec, grid))
    Csk = curl(skewP).values
    add("l", "tr[(curl skew P)^T] = 2 div axl(skew P)",
        _rel_diff(tensors.trace(np.swapaxes(Csk, -1, -2)), 2.0 * divp.values))
    anti_grad_divp = tensors.anti(grad(divp).values)
    tr_field = tensors.trace(np.swapaxes(Csk, -1, -2))
    curl_tr = curl(TensorField(tr_field[..., None, None] * tensors.IDENTITY, grid)).values
    add("l", "curl{tr[(curl skew P)^T]*I} = -2 anti grad(div axl skew P)",
        _rel_diff(curl_tr, -2.0 * anti_grad_divp))
    CCt_skewP = curl(TensorField(np.swapaxes(Csk, -1, -2), grid)).values
    add("m", "curl{[curl skew P]^T} = -anti grad(div axl skew P)",
        _rel_diff(CCt_skewP, -anti_grad_divp))
    combo = -2.0 * CCt_skewP + curl_tr
    add("n", "-2 curl{[curl skew P]^T} + curl{tr[(curl skew P)^T]*I} = 0",
        _rel_to(combo, CCt_skewP))

    # -- o/p) symmetry of the curl of the moment stress ---------------------
    a1_e, a2_e = teisseyre_einstein(1.0)
    p_einstein = MaterialParams(1, 0, 0, 1, 0, a1_e, a2_e, 1.0, Variant.TEISSEYRE_EINSTEIN)
    add("o", "Einstein choice: curl(m(P)) symmetric for generic P",
        symmetry_residual(p_einstein, P), tol=1e-9)
    theta = curl(symP).values
    d_, w_, _ = tensors.cartan_decompose(theta)
    m_sym = a1_e * d_ + a2_e * w_ + 1.0 * tensors.trace(theta)[..., None, None] * tensors.IDENTITY
    closed = -6.0 * curl(TensorField(np.swapaxes(curl(symP).values, -1, -2), grid)).values
    add("o", "Einstein choice on symmetric P reduces to -6*alpha3*curl[(curl sym P)^T]",
        _rel_diff(curl(TensorField(m_sym, grid)).values, closed))
    p_pair = MaterialParams(1, 0, 0, 1, 0, 1.0, -1.0, 0.0, Variant.RELAXED)
    add("p", "alpha1 = -alpha2: curl(m(sym P)) symmetric", symmetry_residual(p_pair, symP), tol=1e-9)
    p_bad = MaterialParams(1, 0, 0, 1, 0, 1.0, 1.0, 0.0, Variant.RELAXED)
    add("p", "alpha1 = +alpha2 breaks the symmetry on a generic symmetric field",
        0.0 if symmetry_residual(p_bad, symP) > 1e-3 else 1.0, tol=0.5)

    # -- q) adjoint of the axial-vector map ----------------------------------
    worst = 0.0
    for _ in range(100):
        v = rng.standard_normal(3)
        W = tensors.anti(rng.standard_normal(3))
        lhs_val = float(v @ tensors.axl(W))
        rhs_val = 0.5 * float(np.sum(tensors.anti(v) * W))
        scale = max(abs(lhs_val), abs(rhs_val), 1.0)
        worst = max(worst, abs(lhs_val - rhs_val) / scale)
    add("q", "<v, axl W> = 1/2 <anti v, W> (100 random draws)", worst, tol=1e-12)

    return results


def format_summary(results) -> str:
    lines = [r.line() for r in results]
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} identity checks passed")
    return "\n".join(lines) + "\n"
