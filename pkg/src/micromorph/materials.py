"""Material parameters, fourth-order elasticity tensors, stresses and energies.

The isotropic parameter set is (mu_e, lambda_e, mu_c, mu_h, lambda_h,
alpha1, alpha2, alpha3) plus a model-variant selector.  Densities are
normalized: rho multiplies kinetic terms only and defaults to 1.

Variant conventions
-------------------
Relaxed                 symmetric Cauchy stress (mu_c must be 0), curvature on curl P
EringenClaus            mu_c > 0 adds 2*mu_c*skew(grad u - P) to the force stress
FurtherRelaxedDevDev    micro term on devsym P only; curvature drops the trace part
ClassicalMindlinEringen curvature mu_e*L_c^2*|grad P|^2 instead of the curl form
PopovKroener            further-relaxed system with no micro self-stress at all
TeisseyreEinstein       alpha1 = -6*alpha3, alpha2 = 6*alpha3 (indefinite curvature)
Microstrain/Cosserat/Microstretch/Microvoid   reduced kinematics (see reductions)
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import tensors
from .errors import DegenerateParams, DomainViolation, InadmissibleParams

__all__ = [
    "Variant",
    "MaterialParams",
    "AdmissibilityReport",
    "check_admissible",
    "is_weakly_admissible",
    "require_weakly_admissible",
    "ElasticityTensor",
    "embed_sym_to_full",
    "StressSet",
    "stresses_relaxed",
    "energy_density",
    "energy_density_parts",
    "kinetic_density",
    "homogenized_moduli",
    "load_material_params",
    "save_material_params",
]


class Variant(str, Enum):
    RELAXED = "Relaxed"
    FURTHER_RELAXED_DEV_DEV = "FurtherRelaxedDevDev"
    ERINGEN_CLAUS = "EringenClaus"
    CLASSICAL = "ClassicalMindlinEringen"
    MICROSTRAIN = "Microstrain"
    COSSERAT = "Cosserat"
    MICROSTRETCH = "Microstretch"
    MICROVOID = "Microvoid"
    POPOV_KROENER = "PopovKroener"
    TEISSEYRE_EINSTEIN = "TeisseyreEinstein"


# Variants whose force stress carries the 2*mu_c*skew(...) term.
_MU_C_ACTIVE = {
    Variant.ERINGEN_CLAUS,
    Variant.CLASSICAL,
    Variant.COSSERAT,
    Variant.MICROSTRETCH,
}


@dataclass(frozen=True)
class MaterialParams:
    mu_e: float
    lambda_e: float
    mu_c: float
    mu_h: float
    lambda_h: float
    alpha1: float
    alpha2: float
    alpha3: float
    variant: Variant = Variant.RELAXED
    rho: float = 1.0
    # Characteristic length of the classical grad-P curvature (modulus
    # mu_e * L_c^2); not part of the parameter-file schema.
    L_c: float = 1.0

    def replace(self, **kw) -> "MaterialParams":
        return replace(self, **kw)

    @property
    def kappa_e(self) -> float:
        return 2.0 * self.mu_e + 3.0 * self.lambda_e

    @property
    def kappa_h(self) -> float:
        return 2.0 * self.mu_h + 3.0 * self.lambda_h


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    value: float
    ok: bool


@dataclass(frozen=True)
class AdmissibilityReport:
    variant: Variant
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.ok]

    def lines(self):
        return [
            f"{'PASS' if c.ok else 'FAIL'}  {c.name}  (value = {c.value:.12g})"
            for c in self.checks
        ]


def _gt(name, value):
    return InequalityCheck(name, float(value), value > 0.0)


def _ge(name, value):
    return InequalityCheck(name, float(value), value >= 0.0)


def _eq(name, value, target=0.0, rtol=1e-12):
    scale = max(abs(value), abs(target), 1.0)
    return InequalityCheck(name, float(value), abs(value - target) <= rtol * scale)


def check_admissible(p: MaterialParams) -> AdmissibilityReport:
    """Per-inequality admissibility report for the given variant.

    The strict base set is mu_e>0, 2mu_e+3lambda_e>0, mu_h>0,
    2mu_h+3lambda_h>0, alpha1>0, alpha2>0, alpha3>0 together with the
    variant's rule for mu_c; variants that drop unused moduli drop the
    corresponding inequalities (e.g. PopovKroener has no micro self-stress,
    FurtherRelaxedDevDev no trace terms).  TeisseyreEinstein replaces the
    alpha positivity by the Einstein relations; its curvature energy is
    deliberately indefinite.
    """
    v = p.variant
    base = [_gt("mu_e > 0", p.mu_e), _gt("2*mu_e + 3*lambda_e > 0", p.kappa_e)]
    micro_all = [_gt("mu_h > 0", p.mu_h), _gt("2*mu_h + 3*lambda_h > 0", p.kappa_h)]
    alphas = [
        _gt("alpha1 > 0", p.alpha1),
        _gt("alpha2 > 0", p.alpha2),
        _gt("alpha3 > 0", p.alpha3),
    ]
    mu_c_zero = _eq("mu_c == 0", p.mu_c)
    mu_c_pos = _gt("mu_c > 0", p.mu_c)

    if v is Variant.RELAXED or v is Variant.MICROSTRAIN:
        checks = base + micro_all + alphas + [mu_c_zero]
    elif v is Variant.ERINGEN_CLAUS:
        checks = base + micro_all + alphas + [mu_c_pos]
    elif v is Variant.FURTHER_RELAXED_DEV_DEV:
        checks = base + [_gt("mu_h > 0", p.mu_h)] + alphas[:2] + [mu_c_zero]
    elif v is Variant.POPOV_KROENER:
        checks = base + alphas[:2] + [mu_c_zero]
    elif v is Variant.CLASSICAL:
        checks = base + micro_all + alphas + [_ge("mu_c >= 0", p.mu_c), _gt("L_c > 0", p.L_c)]
    elif v is Variant.COSSERAT:
        checks = base + alphas + [mu_c_pos]
    elif v is Variant.MICROSTRETCH:
        checks = base + [_gt("2*mu_h + 3*lambda_h > 0", p.kappa_h)] + alphas + [
            _ge("mu_c >= 0", p.mu_c)
        ]
    elif v is Variant.MICROVOID:
        checks = base + [_gt("2*mu_h + 3*lambda_h > 0", p.kappa_h), _gt("alpha2 > 0", p.alpha2)]
        checks += [mu_c_zero]
        checks += _cowin_nunziato_checks(p)
    elif v is Variant.TEISSEYRE_EINSTEIN:
        checks = base + micro_all + [
            mu_c_zero,
            _eq("alpha1 == -6*alpha3", p.alpha1, -6.0 * p.alpha3),
            _eq("alpha2 == 6*alpha3", p.alpha2, 6.0 * p.alpha3),
        ]
    else:  # pragma: no cover
        raise ValueError(f"unknown variant {v}")
    return AdmissibilityReport(v, tuple(checks))


def _cowin_nunziato_checks(p: MaterialParams):
    """Derived positivity system of the void-elasticity coefficient mapping."""
    mu_v = p.mu_e
    lam_v = p.lambda_e
    alpha_v = 2.0 / 3.0 * p.alpha2
    b_v = -p.kappa_e / 3.0
    xi_v = -3.0 * b_v + p.kappa_h
    return [
        _gt("void: mu_v > 0", mu_v),
        _gt("void: 2*mu_v + 3*lambda_v > 0", 2 * mu_v + 3 * lam_v),
        _gt("void: alpha_v > 0", alpha_v),
        _gt("void: xi_v > 0", xi_v),
        _gt("void: (2*mu_v + 3*lambda_v)*xi_v - 3*b_v^2 > 0", (2 * mu_v + 3 * lam_v) * xi_v - 3 * b_v**2),
    ]


def is_weakly_admissible(p: MaterialParams) -> bool:
    """Semidefinite gate used by operators: every modulus may sit on its
    boundary (mu_h = 0, alpha_i = 0, ...) but none may be negative.

    TeisseyreEinstein is exempt from the alpha signs (its curvature is
    indefinite by construction) but must satisfy the Einstein relations.
    """
    if p.variant is Variant.TEISSEYRE_EINSTEIN:
        scale = max(abs(p.alpha3), 1.0)
        return (
            p.mu_e >= 0
            and p.kappa_e >= 0
            and p.mu_h >= 0
            and p.kappa_h >= 0
            and abs(p.mu_c) <= 1e-12
            and abs(p.alpha1 + 6 * p.alpha3) <= 1e-12 * scale
            and abs(p.alpha2 - 6 * p.alpha3) <= 1e-12 * scale
        )
    return (
        p.mu_e >= 0
        and p.kappa_e >= 0
        and p.mu_h >= 0
        and p.kappa_h >= 0
        and p.alpha1 >= 0
        and p.alpha2 >= 0
        and p.alpha3 >= 0
        and p.mu_c >= 0
    )


def require_weakly_admissible(p: MaterialParams) -> None:
    if not is_weakly_admissible(p):
        report = check_admissible(p)
        bad = "; ".join(c.name for c in report.failures())
        raise InadmissibleParams(f"parameters are not even semidefinite-admissible ({bad})")


# ---------------------------------------------------------------------------
# Fourth-order elasticity tensors
# ---------------------------------------------------------------------------

_SQRT2 = np.sqrt(2.0)

# Orthonormal Mandel basis of Sym(3): diagonal entries then sqrt(2)-scaled
# off-diagonals in the order 23, 13, 12.
_MANDEL_PAIRS = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)]


def sym_to_mandel(X):
    X = np.asarray(X, dtype=float)
    out = np.empty(X.shape[:-2] + (6,))
    for col, (i, j) in enumerate(_MANDEL_PAIRS):
        out[..., col] = X[..., i, j] * (1.0 if i == j else _SQRT2)
    return out


def mandel_to_sym(v):
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    for col, (i, j) in enumerate(_MANDEL_PAIRS):
        if i == j:
            out[..., i, j] = v[..., col]
        else:
            out[..., i, j] = out[..., j, i] = v[..., col] / _SQRT2
    return out


def full_to_vec9(X):
    return np.asarray(X, dtype=float).reshape(np.asarray(X).shape[:-2] + (9,))


def vec9_to_full(v):
    return np.asarray(v, dtype=float).reshape(np.asarray(v).shape[:-1] + (3, 3))


class ElasticityTensor:
    """Fourth-order tensor with major symmetry acting on 3x3 matrices.

    Three storage kinds:
      * isotropic on Sym(3):       X -> 2*mu*sym X + lambda*tr(X)*I
      * isotropic on all of gl(3): X -> c_dev*devsym X + c_skew*skew X + c_sph*tr(X)*I
      * anisotropic: symmetric matrix in an orthonormal basis, 6x6 (Mandel,
        acting on Sym(3)) or 9x9 (row-major tensor basis, acting on gl(3)).

    For the full isotropic kind the quadratic form is
    c_dev*|devsym X|^2 + c_skew*|skew X|^2 + c_sph*tr(X)^2, matching the
    output convention of tensors.quadform_decompose.
    """

    def __init__(self, kind, domain, payload):
        self.kind = kind  # "iso-sym" | "iso-full" | "matrix"
        self.domain = domain  # "sym" | "full"
        self._payload = payload

    @classmethod
    def isotropic_sym(cls, mu, lam):
        return cls("iso-sym", "sym", (float(mu), float(lam)))

    @classmethod
    def isotropic_full(cls, c_devsym, c_skew, c_sph):
        return cls("iso-full", "full", (float(c_devsym), float(c_skew), float(c_sph)))

    @classmethod
    def from_matrix(cls, M, rtol=1e-10):
        M = np.asarray(M, dtype=float)
        if M.shape == (6, 6):
            domain = "sym"
        elif M.shape == (9, 9):
            domain = "full"
        else:
            raise ValueError(f"matrix must be 6x6 or 9x9, got {M.shape}")
        if np.max(np.abs(M - M.T)) > rtol * max(1.0, np.max(np.abs(M))):
            raise ValueError("matrix must be symmetric (major symmetry)")
        return cls("matrix", domain, 0.5 * (M + M.T))

    def _check_domain(self, X):
        if self.domain == "sym":
            residue = np.max(np.abs(tensors.skew(X)))
            if residue > 1e-12 * max(1.0, np.max(np.abs(X))):
                raise DomainViolation(
                    f"tensor acts on Sym(3) but input has |skew X| = {residue:.3e}"
                )

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        self._check_domain(X)
        if self.kind == "iso-sym":
            mu, lam = self._payload
            return 2.0 * mu * tensors.sym(X) + lam * tensors.trace(X)[..., None, None] * tensors.IDENTITY
        if self.kind == "iso-full":
            c_dev, c_skew, c_sph = self._payload
            d, w, _ = tensors.cartan_decompose(X)
            return c_dev * d + c_skew * w + c_sph * tensors.trace(X)[..., None, None] * tensors.IDENTITY
        M = self._payload
        if self.domain == "sym":
            return mandel_to_sym(sym_to_mandel(X) @ M.T)
        return vec9_to_full(full_to_vec9(X) @ M.T)

    def matrix(self) -> np.ndarray:
        """Representation in the orthonormal basis of the tensor's domain."""
        if self.kind == "matrix":
            return self._payload.copy()
        if self.domain == "sym":
            cols = [sym_to_mandel(self.apply(mandel_to_sym(e))) for e in np.eye(6)]
        else:
            cols = [full_to_vec9(self.apply(vec9_to_full(e))) for e in np.eye(9)]
        return np.column_stack(cols)

    def definiteness(self) -> tuple[float, float]:
        """(min, max) eigenvalue of the quadratic form on the tensor's domain."""
        if self.kind == "iso-sym":
            mu, lam = self._payload
            vals = (2.0 * mu, 2.0 * mu + 3.0 * lam)
            return min(vals), max(vals)
        if self.kind == "iso-full":
            c_dev, c_skew, c_sph = self._payload
            vals = (c_dev, c_skew, 3.0 * c_sph)
            return min(vals), max(vals)
        eig = np.linalg.eigvalsh(self._payload)
        return float(eig[0]), float(eig[-1])


def embed_sym_to_full(C: ElasticityTensor) -> ElasticityTensor:
    """Semidefinite 9x9 embedding X -> C.sym(X) of a Sym(3) tensor.

    The skew subspace becomes an exact kernel, so min_eig drops to 0 while
    the restriction to Sym(3) keeps its original definiteness bounds.
    """
    if C.domain != "sym":
        raise ValueError("embedding is defined for Sym(3)-domain tensors")
    cols = [full_to_vec9(C.apply(tensors.sym(vec9_to_full(e)))) for e in np.eye(9)]
    return ElasticityTensor.from_matrix(np.column_stack(cols))


# ---------------------------------------------------------------------------
# Stress evaluation and energy densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StressSet:
    sigma: np.ndarray  # Cauchy force stress
    s: np.ndarray      # micro self-stress
    m: np.ndarray      # moment stress (conjugate to curl P)


def _iso_stress(mu, lam, X):
    return 2.0 * mu * tensors.sym(X) + lam * tensors.trace(X)[..., None, None] * tensors.IDENTITY


def stresses_relaxed(gradu, P, curlP, p: MaterialParams) -> StressSet:
    """Stresses of the curl-curvature family evaluated pointwise.

    sigma = 2*mu_e*sym(e) + lambda_e*tr(e)*I (+ 2*mu_c*skew(e) when the
    variant carries the couple modulus), s = micro self-stress, m = moment
    stress conjugate to curl P.  Broadcasts over leading axes.
    """
    require_weakly_admissible(p)
    e = np.asarray(gradu, dtype=float) - np.asarray(P, dtype=float)
    sigma = _iso_stress(p.mu_e, p.lambda_e, e)
    if p.variant in _MU_C_ACTIVE and p.mu_c != 0.0:
        sigma = sigma + 2.0 * p.mu_c * tensors.skew(e)

    if p.variant is Variant.POPOV_KROENER:
        s = np.zeros_like(sigma)
    elif p.variant is Variant.FURTHER_RELAXED_DEV_DEV:
        s = 2.0 * p.mu_h * tensors.devsym(P)
    else:
        s = _iso_stress(p.mu_h, p.lambda_h, np.asarray(P, dtype=float))

    theta = np.asarray(curlP, dtype=float)
    d, w, _ = tensors.cartan_decompose(theta)
    if p.variant in (Variant.FURTHER_RELAXED_DEV_DEV, Variant.POPOV_KROENER):
        m = p.alpha1 * d + p.alpha2 * w
    else:
        m = (
            p.alpha1 * d
            + p.alpha2 * w
            + p.alpha3 * tensors.trace(theta)[..., None, None] * tensors.IDENTITY
        )
    return StressSet(sigma, s, m)


def energy_density_parts(gradu, P, curlP, p: MaterialParams, gradP=None):
    """(elastic, micro, curvature) energy densities, broadcast over leading axes.

    The classical variant measures curvature on the full gradient of P and
    therefore needs gradP (shape (..., 3, 3, 3), last axis the derivative
    direction).
    """
    require_weakly_admissible(p)
    e = np.asarray(gradu, dtype=float) - np.asarray(P, dtype=float)
    es = tensors.sym(e)
    tre = tensors.trace(e)
    elastic = p.mu_e * tensors.frob_inner(es, es) + 0.5 * p.lambda_e * tre**2
    if p.variant in _MU_C_ACTIVE and p.mu_c != 0.0:
        ew = tensors.skew(e)
        elastic = elastic + p.mu_c * tensors.frob_inner(ew, ew)

    Pa = np.asarray(P, dtype=float)
    if p.variant is Variant.POPOV_KROENER:
        micro = np.zeros(np.shape(elastic))
    elif p.variant is Variant.FURTHER_RELAXED_DEV_DEV:
        dP = tensors.devsym(Pa)
        micro = p.mu_h * tensors.frob_inner(dP, dP)
    else:
        sP = tensors.sym(Pa)
        micro = p.mu_h * tensors.frob_inner(sP, sP) + 0.5 * p.lambda_h * tensors.trace(Pa) ** 2

    if p.variant is Variant.CLASSICAL:
        if gradP is None:
            raise ValueError("classical variant needs gradP for the curvature energy")
        g = np.asarray(gradP, dtype=float)
        curvature = 0.5 * p.mu_e * p.L_c**2 * np.einsum("...ijk,...ijk->...", g, g)
    else:
        theta = np.asarray(curlP, dtype=float)
        d, w, _ = tensors.cartan_decompose(theta)
        curvature = 0.5 * p.alpha1 * tensors.frob_inner(d, d) + 0.5 * p.alpha2 * tensors.frob_inner(w, w)
        if p.variant not in (Variant.FURTHER_RELAXED_DEV_DEV, Variant.POPOV_KROENER):
            curvature = curvature + 0.5 * p.alpha3 * tensors.trace(theta) ** 2
    return elastic, micro, curvature


def energy_density(gradu, P, curlP, p: MaterialParams, gradP=None):
    """Total elastic energy density (quadratic, homogeneous of degree two)."""
    elastic, micro, curvature = energy_density_parts(gradu, P, curlP, p, gradP=gradP)
    return elastic + micro + curvature


def kinetic_density(udot, Pdot, rho=1.0):
    """0.5*rho*(|udot|^2 + |Pdot|^2) pointwise."""
    u = np.asarray(udot, dtype=float)
    P = np.asarray(Pdot, dtype=float)
    return 0.5 * rho * (np.einsum("...i,...i->...", u, u) + tensors.frob_inner(P, P))


def homogenized_moduli(p: MaterialParams) -> tuple[float, float]:
    """Macroscopic (mu, 2*mu + 3*lambda) of the scale-transition series law.

    mu = mu_e*mu_h/(mu_e + mu_h) and the bulk-type analogue on
    2*mu + 3*lambda; always below min of the two constituent moduli.
    """
    if p.mu_e <= 0 or p.mu_h <= 0 or p.kappa_e <= 0 or p.kappa_h <= 0:
        raise InadmissibleParams("homogenized moduli need mu_e, mu_h, 2mu+3lambda pairs > 0")
    den_mu = p.mu_e + p.mu_h
    den_k = p.kappa_e + p.kappa_h
    if den_mu == 0.0 or den_k == 0.0:
        raise DegenerateParams("vanishing denominator in the series formula")
    return p.mu_e * p.mu_h / den_mu, p.kappa_e * p.kappa_h / den_k


# ---------------------------------------------------------------------------
# Parameter files: flat key-value text
# ---------------------------------------------------------------------------

_PARAM_KEYS = (
    "mu_e",
    "lambda_e",
    "mu_c",
    "mu_h",
    "lambda_h",
    "alpha1",
    "alpha2",
    "alpha3",
)


def parse_material_text(text: str) -> MaterialParams:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        if key in _PARAM_KEYS or key == "rho":
            values[key] = float(val)
        elif key == "variant":
            try:
                values["variant"] = Variant(val)
            except ValueError:
                names = ", ".join(v.value for v in Variant)
                raise ValueError(f"line {lineno}: unknown variant {val!r} (one of: {names})")
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    missing = [k for k in _PARAM_KEYS if k not in values]
    if missing:
        raise ValueError(f"missing parameter keys: {', '.join(missing)}")
    if "variant" not in values:
        raise ValueError("missing parameter key: variant")
    return MaterialParams(**values)


def load_material_params(path) -> MaterialParams:
    with open(path) as fh:
        return parse_material_text(fh.read())


def save_material_params(p: MaterialParams, path) -> None:
    with open(path, "w") as fh:
        for key in _PARAM_KEYS:
            fh.write(f"{key} = {getattr(p, key):.17g}\n")
        fh.write(f"variant = {p.variant.value}\n")
        fh.write(f"rho = {p.rho:.17g}\n")
