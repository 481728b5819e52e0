"""Static equilibrium as quadratic energy minimization on the periodic grid.

Three problems:

  * relaxed statics in (u, P): matrix-free conjugate gradients on the
    energy Hessian, with periodic gauge fixing (mean of u always; the skew
    mean of P whenever mu_c = 0, and the full mean of P when the variant
    has no micro self-stress);
  * the dislocation gauge minimization in the elastic distortion beta_e
    alone, driven by a statically admissible background stress sigma0;
  * the closed-form homogenization cross-check: constant-strain loadings
    minimized over constant micro-distortion reproduce the series formula
    for the macroscopic moduli.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensors
from .dynamics import _acc_arrays
from .errors import InadmissibleParams, NoConvergence, SingularProblem, UnsupportedVariant
from .fields import Grid, TensorField, VectorField, curl
from .materials import (
    MaterialParams,
    Variant,
    homogenized_moduli,
    require_weakly_admissible,
)

__all__ = [
    "StaticProblem",
    "Solution",
    "solve_static_relaxed",
    "solve_lazar",
    "homogenization_check",
]

BACKGROUND_CONSISTENCY_TOL = 1e-8


@dataclass(frozen=True)
class StaticProblem:
    """Time-independent problem data.

    For the relaxed problem the unknowns are (u, P) driven by (f, M); for
    the gauge problem the unknown is beta_e driven by the background stress
    sigma0 (f, if given, must balance it: Div sigma0 + f = 0).
    """

    params: MaterialParams
    grid: Grid
    f: VectorField | None = None
    M: TensorField | None = None
    sigma0: TensorField | None = None

    def check_background(self) -> None:
        if self.sigma0 is None:
            return
        from .fields import div as field_div

        residual = field_div(self.sigma0).values
        if self.f is not None:
            residual = residual + self.f.values
        scale = max(float(np.max(np.abs(self.sigma0.values))), 1.0)
        worst = float(np.max(np.abs(residual)))
        if worst > BACKGROUND_CONSISTENCY_TOL * scale:
            raise SingularProblem(
                f"background field is not statically admissible: |Div sigma0 + f| up to {worst:.3e}"
            )


@dataclass
class Solution:
    fields: dict
    residual: float
    iterations: int
    energy: float
    trace: list = field(default_factory=list)  # (iter, residual, energy) rows

    def write_convergence_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iter,residual,energy\n")
            for it, res, en in self.trace:
                fh.write(f"{it},{res:.12e},{en:.12e}\n")


# ---------------------------------------------------------------------------
# Matrix-free conjugate gradients
# ---------------------------------------------------------------------------


def _cg(apply_op, b, project, tol, max_iter, x0=None):
    """CG for SPD operators on tuples of ndarrays.

    Returns (x, relative residual, iterations, trace).  Gauge projection is
    applied to the data, the iterates and the residuals so round-off cannot
    reintroduce zero-mode components.
    """

    def dot(a, c):
        return sum(float(np.sum(ai * ci)) for ai, ci in zip(a, c))

    def axpy(alpha, x, y):
        return tuple(xi + alpha * yi for xi, yi in zip(x, y))

    b = project(b)
    bnorm = np.sqrt(dot(b, b))
    scale = bnorm if bnorm > 0 else 1.0
    if x0 is None:
        x = tuple(np.zeros_like(c) for c in b)
        r = b
    else:
        x = project(x0)
        r = axpy(-1.0, b, apply_op(x))  # b - A x
    r = project(r)
    d = r
    rr = dot(r, r)
    trace = []
    it = 0
    while True:
        res = np.sqrt(rr) / scale
        # energy of the quadratic: J(x) = x.A.x/2 - b.x = -(x.(b + r))/2
        energy = -0.5 * (dot(x, b) + dot(x, r))
        trace.append((it, res, energy))
        if res <= tol:
            return x, res, it, trace
        if it >= max_iter:
            raise NoConvergence(
                f"CG stalled at residual {res:.3e} after {it} iterations",
                iterations=it,
                residual=res,
            )
        Ad = project(apply_op(d))
        dAd = dot(d, Ad)
        if dAd <= 0:
            raise NoConvergence(
                f"operator lost positive definiteness (d.A.d = {dAd:.3e})",
                iterations=it,
                residual=res,
            )
        alpha = rr / dAd
        x = axpy(alpha, x, d)
        r = project(axpy(-alpha, r, Ad))
        rr_new = dot(r, r)
        d = axpy(rr_new / rr, r, d)
        rr = rr_new
        it += 1


def _iteration_cap(n_unknowns: int) -> int:
    return int(50 * np.sqrt(n_unknowns)) + 10


# ---------------------------------------------------------------------------
# Relaxed statics in (u, P)
# ---------------------------------------------------------------------------


def _project_relaxed(p: MaterialParams):
    # Zero modes on the periodic domain: the mean of u always; the skew
    # mean of P whenever mu_c = 0 (the micro self-stress only controls the
    # symmetric part of a constant P, the elastic term its symmetric part
    # relative to grad u).
    skew_mean = p.mu_c == 0.0

    def project(z):
        u, P = z
        u = u - np.mean(u, axis=(0, 1, 2))
        if skew_mean:
            P = P - tensors.skew(np.mean(P, axis=(0, 1, 2)))
        return (u, P)

    return project


def solve_static_relaxed(prob: StaticProblem, tol: float = 1e-8, x0: "tuple | None" = None) -> Solution:
    """Minimize the discrete energy minus forcing work over periodic (u, P).

    The first-order optimality system is the negated dynamic right-hand
    side; CG runs on the gauge-fixed complement of the zero modes.  Raises
    SingularProblem when the forcing overlaps a zero mode, NoConvergence
    past the iteration budget.
    """
    p = prob.params
    require_weakly_admissible(p)
    if p.variant not in (Variant.RELAXED, Variant.ERINGEN_CLAUS):
        raise UnsupportedVariant(f"static solver covers the relaxed family, not {p.variant.value}")
    if p.mu_h <= 0.0:
        raise SingularProblem(
            "mu_h must be positive: fields with P = grad(u) are zero-energy modes otherwise"
        )
    grid = prob.grid
    n3 = grid.n**3

    f_vals = prob.f.values if prob.f is not None else np.zeros((grid.n,) * 3 + (3,))
    M_vals = prob.M.values if prob.M is not None else np.zeros((grid.n,) * 3 + (3, 3))

    # Forcing components along zero modes have no equilibrium solution.
    scale_f = max(float(np.max(np.abs(f_vals))), float(np.max(np.abs(M_vals))), 1.0)
    if np.max(np.abs(np.mean(f_vals, axis=(0, 1, 2)))) > 1e-10 * scale_f:
        raise SingularProblem("mean body force is a zero-energy mode on the periodic domain")
    if p.mu_c == 0.0 and np.max(np.abs(tensors.skew(np.mean(M_vals, axis=(0, 1, 2))))) > 1e-10 * scale_f:
        raise SingularProblem("skew mean of the body moment is a zero-energy mode (mu_c = 0)")

    def apply_op(z):
        au, aP, _ = _acc_arrays(VectorField(z[0], grid), TensorField(z[1], grid), p)
        return (-p.rho * au, -p.rho * aP)

    b = (f_vals, M_vals)
    project = _project_relaxed(p)
    cap = _iteration_cap(12 * n3)
    x, res, it, trace = _cg(apply_op, b, project, tol, cap, x0=x0)
    u = VectorField(x[0], grid)
    P = TensorField(x[1], grid)
    cell = grid.cell_volume
    trace = [(i, r, e * cell) for i, r, e in trace]
    return Solution({"u": u, "P": P}, res, it, trace[-1][2], trace)


# ---------------------------------------------------------------------------
# Dislocation gauge minimization in beta_e
# ---------------------------------------------------------------------------


def _lazar_apply(beta_vals, grid, p):
    local = (
        2.0 * p.mu_e * tensors.sym(beta_vals)
        + 2.0 * p.mu_c * tensors.skew(beta_vals)
        + p.lambda_e * tensors.trace(beta_vals)[..., None, None] * tensors.IDENTITY
    )
    theta = curl(TensorField(beta_vals, grid)).values
    d, w, _ = tensors.cartan_decompose(theta)
    m = p.alpha1 * d + p.alpha2 * w + p.alpha3 * tensors.trace(theta)[..., None, None] * tensors.IDENTITY
    return local + curl(TensorField(m, grid)).values


def lazar_energy(beta: TensorField, sigma0: TensorField, p: MaterialParams) -> float:
    """Quadratic gauge functional whose minimizer solves the equilibrium system.

    J(beta) = integral of mu_e|sym beta|^2 + mu_c|skew beta|^2
              + lambda_e/2 tr(beta)^2 + curvature(curl beta) - <sigma0, beta>.
    The sign of the source term is chosen so the Euler-Lagrange system is
    sigma0 = curl(m(beta)) + sigma_local(beta).
    """
    grid = beta.grid
    theta = curl(beta).values
    d, w, _ = tensors.cartan_decompose(theta)
    dens = (
        p.mu_e * tensors.frob_inner(tensors.sym(beta.values), tensors.sym(beta.values))
        + p.mu_c * tensors.frob_inner(tensors.skew(beta.values), tensors.skew(beta.values))
        + 0.5 * p.lambda_e * tensors.trace(beta.values) ** 2
        + 0.5 * p.alpha1 * tensors.frob_inner(d, d)
        + 0.5 * p.alpha2 * tensors.frob_inner(w, w)
        + 0.5 * p.alpha3 * tensors.trace(theta) ** 2
        - tensors.frob_inner(sigma0.values, beta.values)
    )
    return float(np.sum(dens)) * grid.cell_volume


def lazar_gradient(beta: TensorField, sigma0: TensorField, p: MaterialParams) -> TensorField:
    """L2 gradient of lazar_energy: A(beta) - sigma0."""
    grid = beta.grid
    return TensorField(_lazar_apply(beta.values, grid, p) - sigma0.values, grid)


def solve_lazar(prob: StaticProblem, tol: float = 1e-8, x0: TensorField | None = None) -> Solution:
    """Minimize the gauge functional over the elastic distortion beta_e.

    Needs mu_c > 0 (with mu_e > 0 and admissible alphas) so the pointwise
    part is strictly convex and no gauge fixing is required.
    """
    p = prob.params
    if p.mu_c <= 0.0 or p.mu_e <= 0.0 or p.kappa_e <= 0.0:
        raise InadmissibleParams("the gauge problem needs mu_c > 0, mu_e > 0, 2mu_e+3lambda_e > 0")
    if min(p.alpha1, p.alpha2, p.alpha3) < 0.0:
        raise InadmissibleParams("curvature coefficients must be nonnegative")
    if prob.sigma0 is None:
        raise ValueError("the gauge problem needs a background stress sigma0")
    prob.check_background()
    grid = prob.grid

    def apply_op(z):
        return (_lazar_apply(z[0], grid, p),)

    def project(z):
        return z

    cap = _iteration_cap(9 * grid.n**3)
    x, res, it, trace = _cg(apply_op, (prob.sigma0.values,), project, tol, cap,
                            x0=None if x0 is None else (x0.values,))
    beta = TensorField(x[0], grid)
    cell = grid.cell_volume
    trace = [(i, r, e * cell) for i, r, e in trace]
    energy = lazar_energy(beta, prob.sigma0, p)
    return Solution({"beta_e": beta}, res, it, energy, trace)


# ---------------------------------------------------------------------------
# Homogenization cross-check
# ---------------------------------------------------------------------------

_SYM_LOADINGS = [
    np.diag([1.0, 0.0, 0.0]),
    np.diag([0.0, 1.0, 0.0]),
    np.diag([0.0, 0.0, 1.0]),
    np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]) / np.sqrt(2.0),
    np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]) / np.sqrt(2.0),
    np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]) / np.sqrt(2.0),
]


def optimal_constant_micro_distortion(eps_bar: np.ndarray, p: MaterialParams) -> np.ndarray:
    """Constant P minimizing the local energy at constant strain eps_bar.

    Solves the dense 9x9 linear system grad_P E(eps_bar, P) = 0; curl terms
    vanish on constants so only the local energy enters.
    """
    def grad_P(P):
        e = eps_bar - P
        g = -(
            2.0 * p.mu_e * tensors.sym(e)
            + p.lambda_e * np.trace(e) * np.eye(3)
            + 2.0 * p.mu_c * tensors.skew(e)
        )
        g = g + 2.0 * p.mu_h * tensors.sym(P) + p.lambda_h * np.trace(P) * np.eye(3)
        return g

    # Hessian columns from unit perturbations; RHS from the affine part.
    # With mu_c = 0 the skew block carries no energy, so the system is
    # solved in the least-squares sense (minimum-norm puts skew P = 0).
    H = np.empty((9, 9))
    g0 = grad_P(np.zeros((3, 3))).reshape(9)
    for col in range(9):
        E = np.zeros((3, 3))
        E[col // 3, col % 3] = 1.0
        H[:, col] = grad_P(E).reshape(9) - g0
    P, *_ = np.linalg.lstsq(H, -g0, rcond=None)
    return P.reshape(3, 3)


def homogenization_check(p: MaterialParams) -> tuple[float, float]:
    """Effective (mu, 2mu+3lambda) from constant-strain energy minimization.

    Imposes the six independent symmetric unit loadings, minimizes the
    local energy over constant micro-distortion, and least-squares fits the
    minimized energies against mu_eff*|dev eps|^2 + kappa_eff/6*tr(eps)^2.
    Agrees with the closed-form series moduli to 1e-10 relative.
    """
    homogenized_moduli(p)  # validates the parameter ranges
    rows = []
    rhs = []
    for eps_bar in _SYM_LOADINGS:
        P = optimal_constant_micro_distortion(eps_bar, p)
        e = eps_bar - P
        es = tensors.sym(e)
        energy = (
            p.mu_e * float(np.sum(es * es))
            + 0.5 * p.lambda_e * np.trace(e) ** 2
            + p.mu_c * float(np.sum(tensors.skew(e) ** 2))
            + p.mu_h * float(np.sum(tensors.sym(P) ** 2))
            + 0.5 * p.lambda_h * np.trace(P) ** 2
        )
        d = tensors.dev(eps_bar)
        rows.append([float(np.sum(d * d)), np.trace(eps_bar) ** 2 / 6.0])
        rhs.append(energy)
    coeff, *_ = np.linalg.lstsq(np.asarray(rows), np.asarray(rhs), rcond=None)
    mu_eff, kappa_eff = float(coeff[0]), float(coeff[1])
    return mu_eff, kappa_eff
