"""Conservative explicit time integration of the coupled (u, P) systems.

All dynamic tensor variants share the structure

    rho * u_tt = Div sigma + f
    rho * P_tt = (curvature term) + sigma - s + M

with the curvature term -curl(m) for the curl-energy family and
mu_e*L_c^2 * Lap(P) for the classical gradient-energy model.

Energy bookkeeping: the per-step trace records the physical kinetic,
elastic, micro and curvature energies at integer steps, while the `total`
column is the discrete invariant of the velocity-Verlet scheme,

    total = kinetic + potential - (dt^2/4) * kinetic(acc),

which is exactly conserved (to round-off) for the linear conservative
system at any stable dt.  The instantaneous physical energy oscillates at
O((omega*dt)^2) and is not a useful drift monitor near the stability limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _verlet
from .errors import UnstableTimestep, UnsupportedVariant
from .fields import Grid, ScalarField, TensorField, VectorField, curl, div, grad, laplacian
from .materials import (
    MaterialParams,
    Variant,
    energy_density_parts,
    require_weakly_admissible,
    stresses_relaxed,
)

__all__ = [
    "State",
    "Forcing",
    "EnergyTrace",
    "rhs",
    "rhs_relaxed",
    "rhs_further_relaxed",
    "rhs_classical",
    "step_leapfrog",
    "estimate_stable_dt",
    "run",
    "random_state",
    "zero_state",
]

DT_SAFETY = 0.9

_CURL_FAMILY = {
    Variant.RELAXED,
    Variant.ERINGEN_CLAUS,
    Variant.TEISSEYRE_EINSTEIN,
    Variant.FURTHER_RELAXED_DEV_DEV,
    Variant.POPOV_KROENER,
}
_TENSOR_VARIANTS = _CURL_FAMILY | {Variant.CLASSICAL}


@dataclass(frozen=True)
class State:
    u: VectorField
    udot: VectorField
    P: TensorField
    Pdot: TensorField
    t: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def scaled(self, a: float) -> "State":
        return State(a * self.u, a * self.udot, a * self.P, a * self.Pdot, self.t)


def zero_state(grid: Grid) -> State:
    z3 = np.zeros((grid.n,) * 3 + (3,))
    z33 = np.zeros((grid.n,) * 3 + (3, 3))
    return State(
        VectorField(z3, grid), VectorField(z3.copy(), grid),
        TensorField(z33, grid), TensorField(z33.copy(), grid),
    )


def random_state(grid: Grid, rng: np.random.Generator, amplitude=1.0) -> State:
    from .fields import random_band_limited

    return State(
        random_band_limited(grid, "vector", rng, amplitude),
        random_band_limited(grid, "vector", rng, amplitude),
        random_band_limited(grid, "tensor", rng, amplitude),
        random_band_limited(grid, "tensor", rng, amplitude),
    )


@dataclass(frozen=True)
class Forcing:
    """Body force f and body moment M; each may be None, a field, or a
    callable t -> field."""

    f: object = None
    M: object = None

    def eval(self, t: float):
        f = self.f(t) if callable(self.f) else self.f
        M = self.M(t) if callable(self.M) else self.M
        return f, M

    @property
    def is_zero(self) -> bool:
        return self.f is None and self.M is None


ZERO_FORCING = Forcing()


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------


def _acc_arrays(u: VectorField, P: TensorField, p: MaterialParams):
    """Accelerations (no forcing) plus the pieces needed for energies."""
    grid = u.grid
    gradu = grad(u)
    if p.variant is Variant.CLASSICAL:
        curlP_vals = np.zeros_like(P.values)
        ss = stresses_relaxed(gradu.values, P.values, curlP_vals, p)
        lapP = laplacian(P).values
        curv = p.mu_e * p.L_c**2 * lapP
        aux = {"gradu": gradu.values, "curlP": None, "P": P.values, "lapP": lapP}
    else:
        curlP = curl(P)
        ss = stresses_relaxed(gradu.values, P.values, curlP.values, p)
        curv = -curl(TensorField(ss.m, grid)).values
        aux = {"gradu": gradu.values, "curlP": curlP.values, "P": P.values}
    u_acc = div(TensorField(ss.sigma, grid)).values / p.rho
    P_acc = (curv + ss.sigma - ss.s) / p.rho
    return u_acc, P_acc, aux


def _rhs_fields(s: State, p: MaterialParams, forcing: Forcing):
    u_acc, P_acc, _ = _acc_arrays(s.u, s.P, p)
    f, M = forcing.eval(s.t)
    if f is not None:
        u_acc = u_acc + f.values / p.rho
    if M is not None:
        P_acc = P_acc + M.values / p.rho
    return VectorField(u_acc, s.grid), TensorField(P_acc, s.grid)


def rhs(s: State, p: MaterialParams, forcing: Forcing = ZERO_FORCING):
    """Accelerations (u_tt, P_tt) for the variant selected by the parameters."""
    if p.variant not in _TENSOR_VARIANTS:
        raise UnsupportedVariant(
            f"{p.variant.value} is a reduced-kinematics model; use reductions.run_reduced"
        )
    require_weakly_admissible(p)
    return _rhs_fields(s, p, forcing)


def rhs_relaxed(s: State, p: MaterialParams, forcing: Forcing = ZERO_FORCING):
    """Curl-curvature system with full micro self-stress (Relaxed family)."""
    if p.variant not in (Variant.RELAXED, Variant.ERINGEN_CLAUS, Variant.TEISSEYRE_EINSTEIN):
        raise UnsupportedVariant(f"rhs_relaxed does not handle {p.variant.value}")
    return rhs(s, p, forcing)


def rhs_further_relaxed(s: State, p: MaterialParams, forcing: Forcing = ZERO_FORCING):
    """Trace-free curvature and deviatoric micro stress (FurtherRelaxedDevDev)."""
    if p.variant not in (Variant.FURTHER_RELAXED_DEV_DEV, Variant.POPOV_KROENER):
        raise UnsupportedVariant(f"rhs_further_relaxed does not handle {p.variant.value}")
    return rhs(s, p, forcing)


def rhs_classical(s: State, p: MaterialParams, forcing: Forcing = ZERO_FORCING):
    """Mindlin-Eringen dynamics with the single-scale grad-P curvature."""
    if p.variant is not Variant.CLASSICAL:
        raise UnsupportedVariant(f"rhs_classical does not handle {p.variant.value}")
    return rhs(s, p, forcing)


# ---------------------------------------------------------------------------
# Stable-timestep estimate
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _stable_dt_cached(p: MaterialParams, grid: Grid) -> float:
    rng = np.random.default_rng(0)
    u = rng.standard_normal((grid.n,) * 3 + (3,))
    P = rng.standard_normal((grid.n,) * 3 + (3, 3))

    def apply(u_vals, P_vals):
        au, aP, _ = _acc_arrays(VectorField(u_vals, grid), TensorField(P_vals, grid), p)
        return -au, -aP

    def pair_norm(a, b):
        return np.sqrt(np.sum(a * a) + np.sum(b * b))

    nz = pair_norm(u, P)
    u /= nz
    P /= nz
    lam = 0.0
    for _ in range(500):
        Au, AP = apply(u, P)
        new_lam = float(np.sum(u * Au) + np.sum(P * AP))  # Rayleigh quotient
        size = pair_norm(Au, AP)
        if size == 0.0:
            return np.inf
        u, P = Au / size, AP / size
        if abs(new_lam - lam) <= 1e-6 * abs(new_lam):
            lam = new_lam
            break
        lam = new_lam
    lam = abs(lam)
    if lam == 0.0:
        return np.inf
    return 2.0 / np.sqrt(lam)


def estimate_stable_dt(p: MaterialParams, grid: Grid) -> float:
    """Largest stable leapfrog step 2/sqrt(lambda_max) of the spatial operator.

    lambda_max is found by power iteration to 1e-6 relative accuracy; the
    Rayleigh quotient approaches the true value from below, so integrate at
    dt <= 0.9 * estimate to stay inside the stability region.
    """
    require_weakly_admissible(p)
    return _stable_dt_cached(p, grid)


def _check_dt(dt: float, p: MaterialParams, grid: Grid, dt_max=None) -> None:
    bound = dt_max if dt_max is not None else estimate_stable_dt(p, grid)
    if dt > DT_SAFETY * bound * (1.0 + 1e-12):
        raise UnstableTimestep(
            f"dt = {dt:.6g} exceeds {DT_SAFETY} * dt_max = {DT_SAFETY * bound:.6g}"
        )


# ---------------------------------------------------------------------------
# Energy trace
# ---------------------------------------------------------------------------


@dataclass
class EnergyTrace:
    """Per-step energy records.

    kinetic/elastic/micro/curvature are the physical energies at integer
    steps; total is the exactly conserved discrete invariant of the scheme
    (see module docstring).  stability_constant reports the empirical
    constant of the forced energy estimate, None for zero forcing.
    """

    t: np.ndarray
    kinetic: np.ndarray
    elastic: np.ndarray
    micro: np.ndarray
    curvature: np.ndarray
    total: np.ndarray
    stability_constant: float | None = None

    def drift(self) -> float:
        ref = abs(self.total[0])
        if ref == 0.0:
            return float(np.max(np.abs(self.total)))
        return float(np.max(np.abs(self.total - self.total[0])) / ref)

    def energy_norm(self) -> np.ndarray:
        return np.sqrt(2.0 * np.maximum(self.total, 0.0))

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,kinetic,elastic,micro,curvature,total\n")
            for row in zip(self.t, self.kinetic, self.elastic, self.micro, self.curvature, self.total):
                fh.write(",".join(f"{x:.12e}" for x in row) + "\n")


def _energy_parts(u_vals, P_vals, udot_vals, Pdot_vals, aux, p: MaterialParams, grid: Grid):
    cell = grid.cell_volume
    kin = 0.5 * p.rho * (np.sum(udot_vals**2) + np.sum(Pdot_vals**2)) * cell
    if p.variant is Variant.CLASSICAL:
        # (mu_e L_c^2 / 2) |grad P|^2 via exact discrete integration by
        # parts: |grad P|^2 integrates to -<P, Lap P>
        curvature = -0.5 * p.mu_e * p.L_c**2 * np.sum(P_vals * aux["lapP"]) * cell
        el, mi, _ = energy_density_parts(aux["gradu"], P_vals, np.zeros_like(P_vals), p,
                                         gradP=np.zeros(P_vals.shape + (3,)))
        elastic = float(np.sum(el)) * cell
        micro = float(np.sum(mi)) * cell
    else:
        el, mi, cu = energy_density_parts(aux["gradu"], P_vals, aux["curlP"], p)
        elastic = float(np.sum(el)) * cell
        micro = float(np.sum(mi)) * cell
        curvature = float(np.sum(cu)) * cell
    return float(kin), elastic, micro, float(curvature)


def _kin_quad(au, aP, p, cell):
    return 0.5 * p.rho * (np.sum(au * au) + np.sum(aP * aP)) * cell


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


def step_leapfrog(s: State, p: MaterialParams, forcing: Forcing = ZERO_FORCING,
                  dt: float = None, dt_max: float = None) -> State:
    """One velocity-Verlet step; raises UnstableTimestep above 0.9*dt_max."""
    if dt is None:
        raise TypeError("step_leapfrog needs an explicit dt")
    require_weakly_admissible(p)
    _check_dt(dt, p, s.grid, dt_max)
    grid = s.grid

    def acc(y, t):
        u_vals, P_vals = y
        au, aP, aux = _acc_arrays(VectorField(u_vals, grid), TensorField(P_vals, grid), p)
        f, M = forcing.eval(t)
        if f is not None:
            au = au + f.values / p.rho
        if M is not None:
            aP = aP + M.values / p.rho
        return (au, aP), aux

    (u, P), (ud, Pd), t = _verlet.velocity_verlet(
        (s.u.values, s.P.values), (s.udot.values, s.Pdot.values), s.t, dt, 1, acc
    )
    return State(VectorField(u, grid), VectorField(ud, grid),
                 TensorField(P, grid), TensorField(Pd, grid), t)


def run(s0: State, p: MaterialParams, forcing: Forcing = ZERO_FORCING,
        dt: float = None, n_steps: int = 0, observers=(), dt_max: float = None):
    """Integrate n_steps of leapfrog; returns (final State, EnergyTrace).

    observers is a sequence of (stride, callback) pairs; each callback
    receives an immutable State snapshot every `stride` steps.
    """
    if dt is None:
        raise TypeError("run needs an explicit dt")
    if p.variant not in _TENSOR_VARIANTS:
        raise UnsupportedVariant(
            f"{p.variant.value} is a reduced-kinematics model; use reductions.run_reduced"
        )
    require_weakly_admissible(p)
    _check_dt(dt, p, s0.grid, dt_max)
    grid = s0.grid
    cell = grid.cell_volume

    rows = {k: np.empty(n_steps + 1) for k in ("t", "kinetic", "elastic", "micro", "curvature", "total")}
    forcing_integral = np.zeros(n_steps + 1)

    def acc(y, t):
        u_vals, P_vals = y
        au, aP, aux = _acc_arrays(VectorField(u_vals, grid), TensorField(P_vals, grid), p)
        f, M = forcing.eval(t)
        if f is not None:
            au = au + f.values / p.rho
        if M is not None:
            aP = aP + M.values / p.rho
        aux["forcing_l2"] = (
            (np.sqrt(np.sum(f.values**2) * cell) if f is not None else 0.0)
            + (np.sqrt(np.sum(M.values**2) * cell) if M is not None else 0.0)
        )
        return (au, aP), aux

    def record(idx, y, v, t, a, aux):
        kin, el, mi, cu = _energy_parts(y[0], y[1], v[0], v[1], aux, p, grid)
        rows["t"][idx] = t
        rows["kinetic"][idx] = kin
        rows["elastic"][idx] = el
        rows["micro"][idx] = mi
        rows["curvature"][idx] = cu
        rows["total"][idx] = kin + el + mi + cu - 0.25 * dt**2 * _kin_quad(a[0], a[1], p, cell)
        if idx > 0:
            forcing_integral[idx] = forcing_integral[idx - 1] + dt * aux["forcing_l2"]

    def on_step(k, y, v, t, a, aux):
        record(k, y, v, t, a, aux)
        for stride, fn in observers:
            if k % stride == 0:
                fn(State(VectorField(y[0], grid), VectorField(v[0], grid),
                         TensorField(y[1], grid), TensorField(v[1], grid), t))

    a0, aux0 = acc((s0.u.values, s0.P.values), s0.t)
    record(0, (s0.u.values, s0.P.values), (s0.udot.values, s0.Pdot.values), s0.t, a0, aux0)

    (u, P), (ud, Pd), t = _verlet.velocity_verlet(
        (s0.u.values, s0.P.values), (s0.udot.values, s0.Pdot.values),
        s0.t, dt, n_steps, acc, on_step=on_step,
    )

    trace = EnergyTrace(**{k: rows[k] for k in rows})
    if not forcing.is_zero and n_steps > 0:
        wnorm = trace.energy_norm()
        growth = wnorm - wnorm[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(forcing_integral > 0, growth / forcing_integral, 0.0)
        trace.stability_constant = float(np.max(ratios))
    final = State(VectorField(u, grid), VectorField(ud, grid),
                  TensorField(P, grid), TensorField(Pd, grid), t)
    return final, trace
