"""The model family: coefficient mappings and reduced-kinematics dynamics.

Coefficient mappings translate between the dislocation-format curvature
coefficients (alpha1, alpha2, alpha3) and the parameter sets of the
dislocation-dynamics, mesostructure-plasticity, void-elasticity and
symmetric-earthquake models.  The reduced dynamic systems (micro-rotation,
microstretch, microvoid, microstrain) get native implementations so that
the derived equivalences with the full tensor model act as genuine
cross-checks instead of tautologies.

Constraint handling is structural: micro-rotation states carry the axial
vector, microstrain states carry six symmetric components, so constraint
violation is unrepresentable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _verlet, tensors
from .dynamics import EnergyTrace, Forcing, State, ZERO_FORCING, _acc_arrays
from .errors import (
    InadmissibleParams,
    PoissonOutOfRange,
    UnstableTimestep,
    UnsupportedVariant,
)
from .fields import (
    Grid,
    ScalarField,
    TensorField,
    VectorField,
    _Diff,
    _Field,
    curl,
    div,
    grad,
    require_skew_field,
)
from .materials import MaterialParams, Variant, require_weakly_admissible

__all__ = [
    "map_eringen_claus",
    "invert_eringen_claus",
    "eringen_claus_moment_stress",
    "map_popov_kroener",
    "popov_kroener_quadform_coefficients",
    "CowinNunziatoParams",
    "map_cowin_nunziato",
    "teisseyre_einstein",
    "symmetry_residual",
    "check_symmetry",
    "nye_identities",
    "SymTensorField",
    "sym6_to_full",
    "full_to_sym6",
    "CosseratState",
    "CosseratTensorState",
    "MicrostretchState",
    "MicrovoidState",
    "MicrostrainState",
    "rhs_cosserat",
    "rhs_cosserat_tensor",
    "rhs_microstretch",
    "rhs_microvoid",
    "rhs_microstrain",
    "estimate_stable_dt_reduced",
    "run_reduced",
]


# ---------------------------------------------------------------------------
# Coefficient mappings
# ---------------------------------------------------------------------------


def map_eringen_claus(a1: float, a2: float, a3: float):
    """Dislocation-dynamics moment coefficients (a1, a2, a3) -> (alpha1, alpha2, alpha3)."""
    return a2 - a3, a2 - a3 - 2.0 * a1, (2.0 * a3 + a2) / 3.0


def invert_eringen_claus(alpha1: float, alpha2: float, alpha3: float):
    """Exact inverse of map_eringen_claus."""
    a1 = 0.5 * (alpha1 - alpha2)
    a3 = alpha3 - alpha1 / 3.0
    a2 = alpha1 + a3
    return a1, a2, a3


def eringen_claus_moment_stress(curlP, a1, a2, a3):
    """Moment stress in the dislocation-dynamics convention.

    m = a3*tr(curl P)*I + 2*a1*skew(curl P) + (a2 - a3)*(curl P)^T; its
    transpose equals the dislocation-format moment stress with the mapped
    coefficients, so the two conventions produce the same curl term in the
    equations of motion.
    """
    theta = np.asarray(curlP, dtype=float)
    return (
        a3 * tensors.trace(theta)[..., None, None] * tensors.IDENTITY
        + 2.0 * a1 * tensors.skew(theta)
        + (a2 - a3) * np.swapaxes(theta, -1, -2)
    )


def map_popov_kroener(mu: float, d: float, nu: float):
    """Mesostructure coefficients (mu, grain size d, Poisson nu) -> alphas.

    alpha1 = 3*mu*(2d)^2/24, alpha2 = mu*(2d)^2/24 * (3 + 4*nu/(1 - nu)),
    alpha3 = 0; valid for -1 < nu < 1/2.
    """
    if mu <= 0.0:
        raise InadmissibleParams(f"shear modulus must be positive, got {mu}")
    if not (-1.0 < nu < 0.5):
        raise PoissonOutOfRange(f"Poisson ratio must lie in (-1, 1/2), got {nu}")
    c = mu * (2.0 * d) ** 2 / 24.0
    return 3.0 * c, c * (3.0 + 4.0 * nu / (1.0 - nu)), 0.0


def popov_kroener_quadform_coefficients(mu: float, d: float, nu: float):
    """(a1, a2, a3) of the quadratic form a1|X|^2 + a2<X,X^T> + a3 tr(X)^2.

    Feeding these to tensors.quadform_decompose reproduces
    map_popov_kroener, confirming that the trace part is absent.
    """
    if not (-1.0 < nu < 0.5):
        raise PoissonOutOfRange(f"Poisson ratio must lie in (-1, 1/2), got {nu}")
    c = mu * (2.0 * d) ** 2 / 24.0
    ratio = 2.0 * nu / (1.0 - nu)
    return c * (3.0 + ratio), -c * ratio, -c


@dataclass(frozen=True)
class CowinNunziatoParams:
    mu_v: float
    lambda_v: float
    alpha_v: float
    b_v: float
    xi_v: float

    def positivity(self):
        """The void-elasticity positivity system as (name, value, ok) rows."""
        kv = 2.0 * self.mu_v + 3.0 * self.lambda_v
        rows = [
            ("mu_v > 0", self.mu_v),
            ("2*mu_v + 3*lambda_v > 0", kv),
            ("alpha_v > 0", self.alpha_v),
            ("xi_v > 0", self.xi_v),
            ("(2*mu_v + 3*lambda_v)*xi_v - 3*b_v^2 > 0", kv * self.xi_v - 3.0 * self.b_v**2),
        ]
        return [(name, value, value > 0.0) for name, value in rows]

    @property
    def positive_definite(self) -> bool:
        return all(ok for _, _, ok in self.positivity())


def map_cowin_nunziato(p: MaterialParams) -> CowinNunziatoParams:
    """Void-elasticity coefficients of the spherical micro-distortion reduction.

    mu_v = mu_e, lambda_v = lambda_e, alpha_v = 2/3*alpha2,
    b_v = -(2mu_e + 3lambda_e)/3, xi_v = -3*b_v + 2mu_h + 3lambda_h.  The
    positivity system holds automatically for admissible source parameters.
    """
    b_v = -p.kappa_e / 3.0
    return CowinNunziatoParams(
        mu_v=p.mu_e,
        lambda_v=p.lambda_e,
        alpha_v=2.0 / 3.0 * p.alpha2,
        b_v=b_v,
        xi_v=-3.0 * b_v + p.kappa_h,
    )


def teisseyre_einstein(alpha3: float):
    """Einstein choice in three dimensions: (alpha1, alpha2) = (-6, 6)*alpha3."""
    return -6.0 * alpha3, 6.0 * alpha3


def symmetry_residual(p: MaterialParams, P: TensorField) -> float:
    """Relative skew residue of curl(m(P)) for the moment stress of p.

    Zero for every P under the Einstein choice; for symmetric P it vanishes
    exactly when alpha1 = -alpha2.
    """
    theta = curl(P).values
    d, w, _ = tensors.cartan_decompose(theta)
    m = (
        p.alpha1 * d
        + p.alpha2 * w
        + p.alpha3 * tensors.trace(theta)[..., None, None] * tensors.IDENTITY
    )
    r = curl(TensorField(m, P.grid)).values
    scale = float(np.sqrt(np.sum(r * r)))
    if scale == 0.0:
        return 0.0
    return float(np.sqrt(np.sum(tensors.skew(r) ** 2))) / scale


def check_symmetry(p: MaterialParams, P: TensorField, rtol: float = 1e-9) -> bool:
    return symmetry_residual(p, P) < rtol


def nye_identities(A: TensorField):
    """Residuals of the two curvature formulas for skew-valued fields.

    r1:  -curl A  vs  (grad axl A)^T - tr[(grad axl A)^T]*I
    r2:  grad axl A  vs  -(curl A)^T + 1/2*tr[(curl A)^T]*I

    Both relative to the field scales; raises NonSkewField for non-skew input.
    """
    require_skew_field(A)
    w = np.empty(A.values.shape[:-2] + (3,))
    w[..., 0] = 0.5 * (A.values[..., 2, 1] - A.values[..., 1, 2])
    w[..., 1] = 0.5 * (A.values[..., 0, 2] - A.values[..., 2, 0])
    w[..., 2] = 0.5 * (A.values[..., 1, 0] - A.values[..., 0, 1])
    G = grad(VectorField(w, A.grid)).values
    Gt = np.swapaxes(G, -1, -2)
    trG = tensors.trace(G)[..., None, None]
    C = curl(A).values
    Ct = np.swapaxes(C, -1, -2)
    trC = tensors.trace(C)[..., None, None]

    lhs1 = -C
    rhs1 = Gt - trG * tensors.IDENTITY
    lhs2 = G
    rhs2 = -Ct + 0.5 * trC * tensors.IDENTITY

    def rel(a, b):
        scale = max(np.sqrt(np.sum(a * a)), np.sqrt(np.sum(b * b)), 1e-300)
        return float(np.sqrt(np.sum((a - b) ** 2)) / scale)

    return rel(lhs1, rhs1), rel(lhs2, rhs2)


# ---------------------------------------------------------------------------
# Reduced states
# ---------------------------------------------------------------------------


class SymTensorField(_Field):
    """Symmetric tensor field stored as six components (11, 22, 33, 23, 13, 12)."""

    COMPONENT_SHAPE = (6,)
    kind = "symtensor"


_SYM_PAIRS = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)]


def sym6_to_full(values6):
    v = np.asarray(values6, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    for col, (i, j) in enumerate(_SYM_PAIRS):
        out[..., i, j] = v[..., col]
        if i != j:
            out[..., j, i] = v[..., col]
    return out


def full_to_sym6(values):
    v = np.asarray(values, dtype=float)
    out = np.empty(v.shape[:-2] + (6,))
    for col, (i, j) in enumerate(_SYM_PAIRS):
        if i == j:
            out[..., col] = v[..., i, j]
        else:
            out[..., col] = 0.5 * (v[..., i, j] + v[..., j, i])
    return out


def _sym_norm_sq(values6):
    """|X|^2 of the represented symmetric tensors (off-diagonals doubled)."""
    v = np.asarray(values6, dtype=float)
    return np.sum(v[..., :3] ** 2) + 2.0 * np.sum(v[..., 3:] ** 2)


@dataclass(frozen=True)
class CosseratState:
    u: VectorField
    udot: VectorField
    theta: VectorField
    thetadot: VectorField
    t: float = 0.0


@dataclass(frozen=True)
class CosseratTensorState:
    u: VectorField
    udot: VectorField
    A: TensorField
    Adot: TensorField
    t: float = 0.0


@dataclass(frozen=True)
class MicrostretchState:
    u: VectorField
    udot: VectorField
    theta: VectorField
    thetadot: VectorField
    zeta: ScalarField
    zetadot: ScalarField
    t: float = 0.0


@dataclass(frozen=True)
class MicrovoidState:
    u: VectorField
    udot: VectorField
    zeta: ScalarField
    zetadot: ScalarField
    t: float = 0.0


@dataclass(frozen=True)
class MicrostrainState:
    u: VectorField
    udot: VectorField
    eps_p: SymTensorField
    eps_p_dot: SymTensorField
    t: float = 0.0


# ---------------------------------------------------------------------------
# Reduced right-hand sides (raw-array cores + field wrappers)
# ---------------------------------------------------------------------------


def _iso(mu, lam, X):
    return 2.0 * mu * tensors.sym(X) + lam * tensors.trace(X)[..., None, None] * tensors.IDENTITY


def _axl_skew(X):
    out = np.empty(X.shape[:-2] + (3,))
    out[..., 0] = 0.5 * (X[..., 2, 1] - X[..., 1, 2])
    out[..., 1] = 0.5 * (X[..., 0, 2] - X[..., 2, 0])
    out[..., 2] = 0.5 * (X[..., 1, 0] - X[..., 0, 1])
    return out


def _rotation_stress(gradtheta, p):
    d, w, _ = tensors.cartan_decompose(gradtheta)
    return (
        0.5 * p.alpha1 * d
        + 0.5 * p.alpha2 * w
        + 2.0 * p.alpha3 * tensors.trace(gradtheta)[..., None, None] * tensors.IDENTITY
    )


def _acc_cosserat(u_vals, th_vals, grid, p, f, M):
    gradu = grad(VectorField(u_vals, grid)).values
    sigma = _iso(p.mu_e, p.lambda_e, gradu) + 2.0 * p.mu_c * (
        tensors.skew(gradu) - tensors.anti(th_vals)
    )
    u_acc = div(TensorField(sigma, grid)).values / p.rho
    gradth = grad(VectorField(th_vals, grid)).values
    tau = _rotation_stress(gradth, p)
    th_acc = (
        div(TensorField(tau, grid)).values
        + 2.0 * p.mu_c * (_axl_skew(tensors.skew(gradu)) - th_vals)
    ) / p.rho
    if f is not None:
        u_acc = u_acc + f.values / p.rho
    if M is not None:
        th_acc = th_acc + _axl_skew(M.values) / p.rho
    aux = {"gradu": gradu, "gradth": gradth}
    return u_acc, th_acc, aux


def _acc_microstretch(u_vals, th_vals, z_vals, grid, p, f, M):
    gradu = grad(VectorField(u_vals, grid)).values
    rel = gradu - z_vals[..., None, None] * tensors.IDENTITY
    sigma = _iso(p.mu_e, p.lambda_e, rel) + 2.0 * p.mu_c * (
        tensors.skew(gradu) - tensors.anti(th_vals)
    )
    u_acc = div(TensorField(sigma, grid)).values / p.rho
    gradth = grad(VectorField(th_vals, grid)).values
    tau = _rotation_stress(gradth, p)
    th_acc = (
        div(TensorField(tau, grid)).values
        + 2.0 * p.mu_c * (_axl_skew(tensors.skew(gradu)) - th_vals)
    ) / p.rho
    divu = div(VectorField(u_vals, grid)).values
    lap_z = _Diff(grid).laplacian(z_vals)
    z_acc = (
        2.0 / 3.0 * p.alpha2 * lap_z
        + p.kappa_e / 3.0 * divu
        - (p.kappa_e + p.kappa_h) * z_vals
    ) / p.rho
    if f is not None:
        u_acc = u_acc + f.values / p.rho
    if M is not None:
        th_acc = th_acc + _axl_skew(M.values) / p.rho
        z_acc = z_acc + tensors.trace(M.values) / (3.0 * p.rho)
    aux = {"gradu": gradu, "gradth": gradth, "divu": divu, "z": z_vals}
    return u_acc, th_acc, z_acc, aux


def _acc_microvoid(u_vals, z_vals, grid, p, f, M):
    gradu = grad(VectorField(u_vals, grid)).values
    rel = gradu - z_vals[..., None, None] * tensors.IDENTITY
    sigma = _iso(p.mu_e, p.lambda_e, rel)
    u_acc = div(TensorField(sigma, grid)).values / p.rho
    divu = div(VectorField(u_vals, grid)).values
    lap_z = _Diff(grid).laplacian(z_vals)
    z_acc = (
        2.0 / 3.0 * p.alpha2 * lap_z
        + p.kappa_e / 3.0 * divu
        - (p.kappa_e + p.kappa_h) * z_vals
    ) / p.rho
    if f is not None:
        u_acc = u_acc + f.values / p.rho
    if M is not None:
        z_acc = z_acc + tensors.trace(M.values) / (3.0 * p.rho)
    aux = {"gradu": gradu, "divu": divu, "z": z_vals}
    return u_acc, z_acc, aux


def _acc_microstrain(u_vals, ep6, grid, p, f, M, curvature):
    ep_full = sym6_to_full(ep6)
    gradu = grad(VectorField(u_vals, grid)).values
    rel = gradu - ep_full
    sigma = _iso(p.mu_e, p.lambda_e, rel)
    u_acc = div(TensorField(sigma, grid)).values / p.rho
    if curvature == "curl":
        theta = curl(TensorField(ep_full, grid)).values
        d, w, _ = tensors.cartan_decompose(theta)
        mc = (
            p.alpha1 * d
            + p.alpha2 * w
            + p.alpha3 * tensors.trace(theta)[..., None, None] * tensors.IDENTITY
        )
        curv_full = -tensors.sym(curl(TensorField(mc, grid)).values)
        aux_curv = theta
    elif curvature == "grad":
        curv_full = p.mu_e * p.L_c**2 * sym6_to_full(_Diff(grid).laplacian(ep6))
        aux_curv = None
    else:
        raise ValueError(f"unknown microstrain curvature {curvature!r}")
    local = tensors.sym(sigma) - _iso(p.mu_h, p.lambda_h, ep_full)
    ep_acc_full = (curv_full + local) / p.rho
    if M is not None:
        ep_acc_full = ep_acc_full + tensors.sym(M.values) / p.rho
    if f is not None:
        u_acc = u_acc + f.values / p.rho
    aux = {"gradu": gradu, "ep6": ep6, "theta": aux_curv}
    return u_acc, full_to_sym6(ep_acc_full), aux


def rhs_cosserat(s: CosseratState, p: MaterialParams, forcing: Forcing = ZERO_FORCING):
    """Micro-rotation system in (u, theta): theta is the axial vector of skew P."""
    require_weakly_admissible(p)
    f, M = forcing.eval(s.t)
    ua, ta, _ = _acc_cosserat(s.u.values, s.theta.values, s.u.grid, p, f, M)
    return VectorField(ua, s.u.grid), VectorField(ta, s.u.grid)


def rhs_cosserat_tensor(s: CosseratTensorState, p: MaterialParams, forcing: Forcing = ZERO_FORCING):
    """Tensor twin of the micro-rotation system: skew projection of the full
    asymmetric rhs evaluated on skew P = A.  Used as the cross-check side of
    the vector-form equivalence."""
    require_weakly_admissible(p)
    grid = s.u.grid
    p_full = p.replace(variant=Variant.ERINGEN_CLAUS)
    ua, Pa, _ = _acc_arrays(s.u, s.A, p_full)
    Aa = tensors.skew(Pa)
    f, M = forcing.eval(s.t)
    if f is not None:
        ua = ua + f.values / p.rho
    if M is not None:
        Aa = Aa + tensors.skew(M.values) / p.rho
    return VectorField(ua, grid), TensorField(Aa, grid)


def rhs_microstretch(s: MicrostretchState, p: MaterialParams, forcing: Forcing = ZERO_FORCING):
    require_weakly_admissible(p)
    f, M = forcing.eval(s.t)
    ua, ta, za, _ = _acc_microstretch(
        s.u.values, s.theta.values, s.zeta.values, s.u.grid, p, f, M
    )
    return VectorField(ua, s.u.grid), VectorField(ta, s.u.grid), ScalarField(za, s.u.grid)


def rhs_microvoid(s: MicrovoidState, p: MaterialParams, forcing: Forcing = ZERO_FORCING):
    require_weakly_admissible(p)
    f, M = forcing.eval(s.t)
    ua, za, _ = _acc_microvoid(s.u.values, s.zeta.values, s.u.grid, p, f, M)
    return VectorField(ua, s.u.grid), ScalarField(za, s.u.grid)


def rhs_microstrain(s: MicrostrainState, p: MaterialParams, forcing: Forcing = ZERO_FORCING,
                    curvature: str = "curl"):
    require_weakly_admissible(p)
    f, M = forcing.eval(s.t)
    ua, ea, _ = _acc_microstrain(s.u.values, s.eps_p.values, s.u.grid, p, f, M, curvature)
    return VectorField(ua, s.u.grid), SymTensorField(ea, s.u.grid)


# ---------------------------------------------------------------------------
# Adapters: pack/acc/energies per reduced system
# ---------------------------------------------------------------------------


class _Adapter:
    def __init__(self, kind, grid, p, forcing, curvature="curl"):
        self.kind = kind
        self.grid = grid
        self.p = p
        self.forcing = forcing
        self.curvature = curvature
        self.cell = grid.cell_volume

    # -- state <-> tuples ---------------------------------------------------

    def pack(self, s):
        if self.kind == "cosserat":
            return (s.u.values, s.theta.values), (s.udot.values, s.thetadot.values)
        if self.kind == "cosserat-tensor":
            return (s.u.values, s.A.values), (s.udot.values, s.Adot.values)
        if self.kind == "microstretch":
            return (
                (s.u.values, s.theta.values, s.zeta.values),
                (s.udot.values, s.thetadot.values, s.zetadot.values),
            )
        if self.kind == "microvoid":
            return (s.u.values, s.zeta.values), (s.udot.values, s.zetadot.values)
        if self.kind == "microstrain":
            return (s.u.values, s.eps_p.values), (s.udot.values, s.eps_p_dot.values)
        raise UnsupportedVariant(self.kind)

    def unpack(self, y, v, t):
        g = self.grid
        if self.kind == "cosserat":
            return CosseratState(
                VectorField(y[0], g), VectorField(v[0], g),
                VectorField(y[1], g), VectorField(v[1], g), t,
            )
        if self.kind == "cosserat-tensor":
            return CosseratTensorState(
                VectorField(y[0], g), VectorField(v[0], g),
                TensorField(y[1], g), TensorField(v[1], g), t,
            )
        if self.kind == "microstretch":
            return MicrostretchState(
                VectorField(y[0], g), VectorField(v[0], g),
                VectorField(y[1], g), VectorField(v[1], g),
                ScalarField(y[2], g), ScalarField(v[2], g), t,
            )
        if self.kind == "microvoid":
            return MicrovoidState(
                VectorField(y[0], g), VectorField(v[0], g),
                ScalarField(y[1], g), ScalarField(v[1], g), t,
            )
        return MicrostrainState(
            VectorField(y[0], g), VectorField(v[0], g),
            SymTensorField(y[1], g), SymTensorField(v[1], g), t,
        )

    # -- dynamics -----------------------------------------------------------

    def acc(self, y, t):
        f, M = self.forcing.eval(t)
        g, p = self.grid, self.p
        if self.kind == "cosserat":
            ua, ta, aux = _acc_cosserat(y[0], y[1], g, p, f, M)
            return (ua, ta), aux
        if self.kind == "cosserat-tensor":
            p_full = p.replace(variant=Variant.ERINGEN_CLAUS)
            ua, Pa, aux = _acc_arrays(VectorField(y[0], g), TensorField(y[1], g), p_full)
            Aa = tensors.skew(Pa)
            if f is not None:
                ua = ua + f.values / p.rho
            if M is not None:
                Aa = Aa + tensors.skew(M.values) / p.rho
            return (ua, Aa), aux
        if self.kind == "microstretch":
            ua, ta, za, aux = _acc_microstretch(y[0], y[1], y[2], g, p, f, M)
            return (ua, ta, za), aux
        if self.kind == "microvoid":
            ua, za, aux = _acc_microvoid(y[0], y[1], g, p, f, M)
            return (ua, za), aux
        ua, ea, aux = _acc_microstrain(y[0], y[1], g, p, f, M, self.curvature)
        return (ua, ea), aux

    # -- energies -----------------------------------------------------------

    def kinetic(self, v):
        p, cell = self.p, self.cell
        if self.kind == "cosserat":
            q = 0.5 * np.sum(v[0] ** 2) + np.sum(v[1] ** 2)
        elif self.kind == "cosserat-tensor":
            q = 0.5 * np.sum(v[0] ** 2) + 0.5 * np.sum(v[1] ** 2)
        elif self.kind == "microstretch":
            q = 0.5 * np.sum(v[0] ** 2) + np.sum(v[1] ** 2) + 1.5 * np.sum(v[2] ** 2)
        elif self.kind == "microvoid":
            q = 0.5 * np.sum(v[0] ** 2) + 1.5 * np.sum(v[1] ** 2)
        else:  # microstrain
            q = 0.5 * np.sum(v[0] ** 2) + 0.5 * _sym_norm_sq(v[1])
        return float(p.rho * q * cell)

    def potential(self, y, aux):
        p, cell, g = self.p, self.cell, self.grid
        if self.kind == "cosserat":
            gradu, gradth = aux["gradu"], aux["gradth"]
            rel_rot = tensors.skew(gradu) - tensors.anti(y[1])
            elastic = (
                p.mu_e * np.sum(tensors.sym(gradu) ** 2)
                + p.mu_c * np.sum(rel_rot**2)
                + 0.5 * p.lambda_e * np.sum(tensors.trace(gradu) ** 2)
            )
            d, w, _ = tensors.cartan_decompose(gradth)
            trg = tensors.trace(gradth)
            curvature = (
                0.5 * p.alpha1 * np.sum(d**2)
                + 0.5 * p.alpha2 * np.sum(w**2)
                + 2.0 * p.alpha3 * np.sum(trg**2)
            )
            return elastic * cell, 0.0, curvature * cell
        if self.kind == "cosserat-tensor":
            gradu = aux["gradu"]
            e = gradu - y[1]
            elastic = (
                p.mu_e * np.sum(tensors.sym(gradu) ** 2)
                + p.mu_c * np.sum(tensors.skew(e) ** 2)
                + 0.5 * p.lambda_e * np.sum(tensors.trace(gradu) ** 2)
            )
            theta = aux["curlP"]
            d, w, _ = tensors.cartan_decompose(theta)
            curvature = (
                0.5 * p.alpha1 * np.sum(d**2)
                + 0.5 * p.alpha2 * np.sum(w**2)
                + 0.5 * p.alpha3 * np.sum(tensors.trace(theta) ** 2)
            )
            return elastic * cell, 0.0, curvature * cell
        if self.kind == "microstretch":
            gradu, gradth, z = aux["gradu"], aux["gradth"], aux["z"]
            rel = gradu - z[..., None, None] * tensors.IDENTITY
            rel_rot = tensors.skew(gradu) - tensors.anti(y[1])
            elastic = (
                p.mu_e * np.sum(tensors.sym(rel) ** 2)
                + p.mu_c * np.sum(rel_rot**2)
                + 0.5 * p.lambda_e * np.sum(tensors.trace(rel) ** 2)
            )
            micro = 1.5 * p.kappa_h * np.sum(z**2)
            d, w, _ = tensors.cartan_decompose(gradth)
            gz = _Diff(g).all_derivatives(z)
            curvature = (
                0.5 * p.alpha1 * np.sum(d**2)
                + 0.5 * p.alpha2 * np.sum(w**2)
                + 2.0 * p.alpha3 * np.sum(tensors.trace(gradth) ** 2)
                + p.alpha2 * sum(np.sum(dz**2) for dz in gz)
            )
            return elastic * cell, micro * cell, curvature * cell
        if self.kind == "microvoid":
            gradu, z = aux["gradu"], aux["z"]
            rel = gradu - z[..., None, None] * tensors.IDENTITY
            elastic = p.mu_e * np.sum(tensors.sym(rel) ** 2) + 0.5 * p.lambda_e * np.sum(
                tensors.trace(rel) ** 2
            )
            micro = 1.5 * p.kappa_h * np.sum(z**2)
            gz = _Diff(g).all_derivatives(z)
            curvature = p.alpha2 * sum(np.sum(dz**2) for dz in gz)
            return elastic * cell, micro * cell, curvature * cell
        # microstrain
        gradu, ep6 = aux["gradu"], aux["ep6"]
        ep_full = sym6_to_full(ep6)
        rel = tensors.sym(gradu) - ep_full
        elastic = p.mu_e * np.sum(rel**2) + 0.5 * p.lambda_e * np.sum(tensors.trace(rel) ** 2)
        micro = p.mu_h * np.sum(ep_full**2) + 0.5 * p.lambda_h * np.sum(
            tensors.trace(ep_full) ** 2
        )
        if self.curvature == "curl":
            theta = aux["theta"]
            d, w, _ = tensors.cartan_decompose(theta)
            curvature = (
                0.5 * p.alpha1 * np.sum(d**2)
                + 0.5 * p.alpha2 * np.sum(w**2)
                + 0.5 * p.alpha3 * np.sum(tensors.trace(theta) ** 2)
            )
        else:
            derivs = _Diff(g).all_derivatives(sym6_to_full(ep6))
            curvature = 0.5 * p.mu_e * p.L_c**2 * sum(np.sum(dd**2) for dd in derivs)
        return elastic * cell, micro * cell, curvature * cell


_STATE_KIND = {
    CosseratState: "cosserat",
    CosseratTensorState: "cosserat-tensor",
    MicrostretchState: "microstretch",
    MicrovoidState: "microvoid",
    MicrostrainState: "microstrain",
}

_VARIANT_KINDS = {
    Variant.COSSERAT: {"cosserat", "cosserat-tensor"},
    Variant.MICROSTRETCH: {"microstretch"},
    Variant.MICROVOID: {"microvoid"},
    Variant.MICROSTRAIN: {"microstrain"},
    # The tensor twin may also run with asymmetric-stress parameters.
    Variant.ERINGEN_CLAUS: {"cosserat-tensor"},
}


@lru_cache(maxsize=64)
def _reduced_dt_cached(kind: str, p: MaterialParams, grid: Grid, curvature: str) -> float:
    rng = np.random.default_rng(0)
    adapter = _Adapter(kind, grid, p, ZERO_FORCING, curvature)
    shapes = {
        "cosserat": [(3,), (3,)],
        "cosserat-tensor": [(3,), (3, 3)],
        "microstretch": [(3,), (3,), ()],
        "microvoid": [(3,), ()],
        "microstrain": [(3,), (6,)],
    }[kind]
    y = tuple(rng.standard_normal((grid.n,) * 3 + s) for s in shapes)
    if kind == "cosserat-tensor":
        y = (y[0], tensors.skew(y[1]))

    def norm(z):
        return np.sqrt(sum(np.sum(c * c) for c in z))

    y = tuple(c / norm(y) for c in y)
    lam = 0.0
    for _ in range(500):
        a, _aux = adapter.acc(y, 0.0)
        a = tuple(-c for c in a)
        new_lam = sum(float(np.sum(yc * ac)) for yc, ac in zip(y, a))
        size = norm(a)
        if size == 0.0:
            return np.inf
        y = tuple(c / size for c in a)
        if abs(new_lam - lam) <= 1e-6 * abs(new_lam):
            lam = new_lam
            break
        lam = new_lam
    lam = abs(lam)
    return np.inf if lam == 0.0 else 2.0 / np.sqrt(lam)


def estimate_stable_dt_reduced(p: MaterialParams, grid: Grid, kind: str = None,
                               curvature: str = "curl") -> float:
    require_weakly_admissible(p)
    if kind is None:
        kind = {
            Variant.COSSERAT: "cosserat",
            Variant.MICROSTRETCH: "microstretch",
            Variant.MICROVOID: "microvoid",
            Variant.MICROSTRAIN: "microstrain",
        }.get(p.variant)
        if kind is None:
            raise UnsupportedVariant(f"no reduced system for {p.variant.value}")
    return _reduced_dt_cached(kind, p, grid, curvature)


def run_reduced(variant: Variant, p: MaterialParams, s0, forcing: Forcing = ZERO_FORCING,
                dt: float = None, n_steps: int = 0, observers=(),
                microstrain_curvature: str = "curl", check_dt: bool = True):
    """Integrate a reduced system with the shared leapfrog scheme.

    The state type selects the system (state and `variant` must agree);
    returns (final state, EnergyTrace) with the same trace conventions as
    the full dynamics.
    """
    if dt is None:
        raise TypeError("run_reduced needs an explicit dt")
    require_weakly_admissible(p)
    kind = _STATE_KIND.get(type(s0))
    if kind is None:
        raise UnsupportedVariant(f"unknown reduced state type {type(s0).__name__}")
    allowed = _VARIANT_KINDS.get(variant, set())
    if kind not in allowed:
        raise UnsupportedVariant(f"state {type(s0).__name__} does not integrate variant {variant.value}")
    grid = s0.u.grid
    if check_dt:
        bound = _reduced_dt_cached(kind, p, grid, microstrain_curvature)
        if dt > 0.9 * bound * (1.0 + 1e-12):
            raise UnstableTimestep(f"dt = {dt:.6g} exceeds 0.9 * dt_max = {0.9 * bound:.6g}")

    adapter = _Adapter(kind, grid, p, forcing, microstrain_curvature)
    y0, v0 = adapter.pack(s0)

    rows = {k: np.empty(n_steps + 1) for k in ("t", "kinetic", "elastic", "micro", "curvature", "total")}

    def record(idx, y, v, t, a, aux):
        kin = adapter.kinetic(v)
        el, mi, cu = adapter.potential(y, aux)
        rows["t"][idx] = t
        rows["kinetic"][idx] = kin
        rows["elastic"][idx] = el
        rows["micro"][idx] = mi
        rows["curvature"][idx] = cu
        rows["total"][idx] = kin + el + mi + cu - 0.25 * dt**2 * adapter.kinetic(a)

    def on_step(k, y, v, t, a, aux):
        record(k, y, v, t, a, aux)
        for stride, fn in observers:
            if k % stride == 0:
                fn(adapter.unpack(y, v, t))

    a0, aux0 = adapter.acc(y0, s0.t)
    record(0, y0, v0, s0.t, a0, aux0)
    y, v, t = _verlet.velocity_verlet(y0, v0, s0.t, dt, n_steps, adapter.acc, on_step=on_step)
    return adapter.unpack(y, v, t), EnergyTrace(**rows)
