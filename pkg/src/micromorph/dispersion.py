"""Plane-wave analysis: 12x12 frequency symbol, branch tracking, band gaps.

Substituting u = Re(u_hat exp(i(<k,x> - omega t))), P likewise, into the
dynamic systems turns them into the Hermitian eigenproblem

    A(k) z = omega^2 z,    z = (u_hat, P_hat) in C^3 x C^9,

with amplitude ordering (u1, u2, u3, P11, P12, P13, P21, P22, P23, P31,
P32, P33).  A(k) is positive semidefinite for semidefinite-admissible
parameters with mu_c >= 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import tensors
from .errors import UnsupportedVariant
from .materials import MaterialParams, Variant, require_weakly_admissible

__all__ = [
    "Wavevector",
    "Symbol",
    "BranchSet",
    "BandGap",
    "assemble_symbol",
    "branches",
    "detect_band_gaps",
    "write_branches_csv",
    "write_gap_report",
]

_SYMBOL_VARIANTS = {
    Variant.RELAXED,
    Variant.ERINGEN_CLAUS,
    Variant.FURTHER_RELAXED_DEV_DEV,
    Variant.POPOV_KROENER,
    Variant.CLASSICAL,
}

HERMITICITY_RTOL = 1e-12
NEGATIVE_OMEGA2_RTOL = 1e-10


@dataclass(frozen=True)
class Wavevector:
    k: tuple

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(float(c) for c in self.k))
        if len(self.k) != 3:
            raise ValueError("wavevector needs three components")

    @property
    def array(self) -> np.ndarray:
        return np.array(self.k)

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.k))

    @property
    def direction(self) -> np.ndarray:
        mag = self.magnitude
        if mag == 0.0:
            return np.zeros(3)
        return self.array / mag


def _apply_symbol(u_hat, P_hat, k, p: MaterialParams):
    """One application of the frequency-domain operator to (u_hat, P_hat)."""
    E = 1j * np.outer(u_hat, k) - P_hat  # elastic distortion amplitude
    sigma = 2.0 * p.mu_e * tensors.sym(E) + p.lambda_e * np.trace(E) * np.eye(3)
    if p.variant in (Variant.ERINGEN_CLAUS, Variant.CLASSICAL) and p.mu_c != 0.0:
        sigma = sigma + 2.0 * p.mu_c * tensors.skew(E)

    if p.variant is Variant.POPOV_KROENER:
        s = np.zeros((3, 3), dtype=complex)
    elif p.variant is Variant.FURTHER_RELAXED_DEV_DEV:
        s = 2.0 * p.mu_h * tensors.devsym(P_hat)
    else:
        s = 2.0 * p.mu_h * tensors.sym(P_hat) + p.lambda_h * np.trace(P_hat) * np.eye(3)

    out_u = -1j * (sigma @ k)

    if p.variant is Variant.CLASSICAL:
        curv = p.mu_e * p.L_c**2 * float(k @ k) * P_hat
    else:
        theta = 1j * np.cross(np.broadcast_to(k, (3, 3)), P_hat, axis=-1)  # row-wise curl
        d, w, _ = tensors.cartan_decompose(theta)
        m = p.alpha1 * d + p.alpha2 * w
        if p.variant not in (Variant.FURTHER_RELAXED_DEV_DEV, Variant.POPOV_KROENER):
            m = m + p.alpha3 * np.trace(theta) * np.eye(3)
        curv = 1j * np.cross(np.broadcast_to(k, (3, 3)), m, axis=-1)
    out_P = (curv - sigma + s)
    return out_u / p.rho, out_P / p.rho


@dataclass(frozen=True)
class Symbol:
    """Hermitian 12x12 matrix whose eigenpairs are the plane-wave solutions."""

    A: np.ndarray
    k: Wavevector
    params: MaterialParams

    def eigenpairs(self):
        """(omega^2 values ascending, eigenvector columns)."""
        vals, vecs = np.linalg.eigh(0.5 * (self.A + self.A.conj().T))
        return vals, vecs

    def omega_squared(self) -> np.ndarray:
        return self.eigenpairs()[0]


def assemble_symbol(k, p: MaterialParams) -> Symbol:
    """Assemble A(k) column-by-column from unit amplitudes."""
    if p.variant not in _SYMBOL_VARIANTS:
        raise UnsupportedVariant(f"no 12x12 symbol for variant {p.variant.value}")
    require_weakly_admissible(p)
    kv = k if isinstance(k, Wavevector) else Wavevector(tuple(np.asarray(k, dtype=float)))
    karr = kv.array
    A = np.empty((12, 12), dtype=complex)
    for col in range(12):
        u_hat = np.zeros(3, dtype=complex)
        P_hat = np.zeros((3, 3), dtype=complex)
        if col < 3:
            u_hat[col] = 1.0
        else:
            P_hat[(col - 3) // 3, (col - 3) % 3] = 1.0
        ou, oP = _apply_symbol(u_hat, P_hat, karr, p)
        A[:3, col] = ou
        A[3:, col] = oP.reshape(9)
    scale = max(1.0, float(np.max(np.abs(A))))
    res = float(np.max(np.abs(A - A.conj().T)))
    if res > HERMITICITY_RTOL * scale * 100:
        raise AssertionError(f"assembled symbol is not Hermitian: residue {res:.3e}")
    return Symbol(A, kv, p)


# ---------------------------------------------------------------------------
# Branch tracking and classification
# ---------------------------------------------------------------------------


@dataclass
class BranchSet:
    """Continuity-tracked dispersion branches along one direction.

    omega has shape (12, len(k_samples)); u_fraction holds the |u|^2 share
    of each branch's eigenvector at every sample (a polarization measure).
    classification tags follow the frequency values: acoustic means
    omega(0) = 0 with positive initial slope, optic means omega(0) > 0,
    flat means omega(0) = 0 with zero slope.
    """

    direction: np.ndarray
    k_samples: np.ndarray
    omega: np.ndarray
    omega_squared: np.ndarray
    u_fraction: np.ndarray
    classification: list

    def branch(self, i):
        return self.omega[i]


def _greedy_match(prev_vecs, vecs):
    """Permutation matching eigenvector columns by maximal overlap."""
    overlap = np.abs(prev_vecs.conj().T @ vecs)  # (12 prev, 12 cur)
    perm = np.full(12, -1)
    used_prev = np.zeros(12, dtype=bool)
    used_cur = np.zeros(12, dtype=bool)
    flat = np.argsort(overlap, axis=None)[::-1]
    for idx in flat:
        i, j = divmod(idx, 12)
        if not used_prev[i] and not used_cur[j]:
            perm[i] = j
            used_prev[i] = True
            used_cur[j] = True
            if used_prev.all():
                break
    return perm


def branches(direction, k_samples, p: MaterialParams) -> BranchSet:
    """Track the 12 branches over sorted |k| samples along a fixed direction."""
    direction = np.asarray(direction, dtype=float)
    nrm = np.linalg.norm(direction)
    if nrm == 0.0:
        raise ValueError("direction must be a nonzero vector")
    direction = direction / nrm
    k_samples = np.asarray(k_samples, dtype=float)
    if k_samples.size < 2 or np.any(np.diff(k_samples) <= 0):
        raise ValueError("k_samples must be at least two strictly increasing values")

    nk = k_samples.size
    om2 = np.empty((12, nk))
    ufrac = np.empty((12, nk))
    prev_vecs = None
    for j, kmag in enumerate(k_samples):
        sym = assemble_symbol(Wavevector(tuple(kmag * direction)), p)
        vals, vecs = sym.eigenpairs()
        if prev_vecs is None:
            idx = np.argsort(vals)
        else:
            idx = _greedy_match(prev_vecs, vecs)
        om2[:, j] = vals[idx]
        vecs = vecs[:, idx]
        ufrac[:, j] = np.sum(np.abs(vecs[:3, :]) ** 2, axis=0)
        prev_vecs = vecs

    scale = max(float(np.max(np.abs(om2))), 1.0)
    floor = -NEGATIVE_OMEGA2_RTOL * scale
    if float(np.min(om2)) < floor:
        raise ValueError(
            f"omega^2 = {float(np.min(om2)):.3e} below the round-off floor {floor:.3e}: "
            "inadmissible or mis-assembled symbol"
        )
    omega = np.sqrt(np.maximum(om2, 0.0))

    zero_tol = 1e-7 * np.sqrt(scale)
    dk = k_samples[1] - k_samples[0]
    tags = []
    for i in range(12):
        w0 = omega[i, 0]
        slope = (omega[i, 1] - omega[i, 0]) / dk
        if w0 > zero_tol:
            tags.append("optic")
        elif slope > 1e-6 * max(1.0, np.sqrt(scale)):
            tags.append("acoustic")
        else:
            tags.append("flat")
    return BranchSet(direction, k_samples, omega, om2, ufrac, tags)


@dataclass(frozen=True)
class BandGap:
    lo: float
    hi: float
    resolution: int

    @property
    def width(self) -> float:
        return self.hi - self.lo


def detect_band_gaps(bs: BranchSet) -> list:
    """Maximal frequency intervals not covered by any branch.

    Each branch is continuous in k, so it covers exactly
    [min omega, max omega]; gaps are the complement inside
    [0, max observed omega].  The result is resolution-qualified by the
    sample count of the sweep; an empty list means no gap resolved at this
    resolution.
    """
    resolution = int(bs.k_samples.size)
    omega_max = float(np.max(bs.omega))
    merge_tol = 1e-9 * max(omega_max, 1.0)
    intervals = sorted(
        (float(np.min(bs.omega[i])), float(np.max(bs.omega[i]))) for i in range(bs.omega.shape[0])
    )
    merged = []
    for lo, hi in intervals:
        if merged and lo <= merged[-1][1] + merge_tol:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    gaps = []
    cursor = 0.0
    for lo, hi in merged:
        if lo > cursor + merge_tol and cursor < omega_max:
            gaps.append(BandGap(cursor, lo, resolution))
        cursor = max(cursor, hi)
    return gaps


def concavity_diagnostic(bs: BranchSet) -> list:
    """Sign pattern of the discrete second difference of each branch.

    Reported as a diagnostic only: +1 if every interior second difference
    is nonnegative, -1 if nonpositive, 0 for mixed signs.  The fixed-sign
    statement lacks a precise quantifier, so nothing is asserted on it.
    """
    out = []
    for i in range(bs.omega.shape[0]):
        d2 = np.diff(bs.omega[i], n=2)
        tol = 1e-9 * max(float(np.max(bs.omega)), 1.0)
        if np.all(d2 >= -tol):
            out.append(1)
        elif np.all(d2 <= tol):
            out.append(-1)
        else:
            out.append(0)
    return out


def write_branches_csv(bs: BranchSet, path) -> None:
    with open(path, "w") as fh:
        fh.write("k,branch_index,omega,classification\n")
        for j, kmag in enumerate(bs.k_samples):
            for i in range(bs.omega.shape[0]):
                fh.write(f"{kmag:.12e},{i},{bs.omega[i, j]:.12e},{bs.classification[i]}\n")


def write_gap_report(gaps, path) -> None:
    payload = [{"lo": g.lo, "hi": g.hi, "resolution": g.resolution} for g in gaps]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
