import numpy as np
import pytest

from conftest import WITNESS_SEED, random_admissible, reference_params
from micromorph import tensors
from micromorph.dynamics import Forcing, State, estimate_stable_dt, rhs, run, zero_state
from micromorph.errors import NonSkewField, PoissonOutOfRange, UnsupportedVariant
from micromorph.fields import (
    Grid,
    ScalarField,
    TensorField,
    VectorField,
    curl,
    norm,
    random_band_limited,
    zeros,
)
from micromorph.materials import MaterialParams, Variant, check_admissible
from micromorph.reductions import (
    CosseratState,
    CosseratTensorState,
    MicrostrainState,
    MicrostretchState,
    MicrovoidState,
    SymTensorField,
    check_symmetry,
    eringen_claus_moment_stress,
    estimate_stable_dt_reduced,
    full_to_sym6,
    invert_eringen_claus,
    map_cowin_nunziato,
    map_eringen_claus,
    map_popov_kroener,
    nye_identities,
    popov_kroener_quadform_coefficients,
    rhs_cosserat,
    rhs_cosserat_tensor,
    rhs_microstrain,
    rhs_microstretch,
    rhs_microvoid,
    run_reduced,
    sym6_to_full,
    symmetry_residual,
    teisseyre_einstein,
)

# ---------------------------------------------------------------------------
# Coefficient mappings
# ---------------------------------------------------------------------------


def test_map_eringen_claus_values():
    assert map_eringen_claus(0, 1, 0) == (1.0, 1.0, pytest.approx(1 / 3))
    alpha = map_eringen_claus(1, 0, 0)
    assert alpha == (0.0, -2.0, 0.0)
    # flags inadmissibility: alpha2 < 0
    p = MaterialParams(1, 0, 0, 1, 0, *alpha, Variant.RELAXED)
    report = check_admissible(p)
    assert any(c.name == "alpha2 > 0" and not c.ok for c in report.checks)


def test_map_eringen_claus_roundtrip(rng):
    for _ in range(100):
        a = rng.standard_normal(3)
        alphas = map_eringen_claus(*a)
        back = invert_eringen_claus(*alphas)
        np.testing.assert_allclose(back, a, atol=1e-13)


def test_eringen_claus_moment_stress_field_level(grid, rng):
    # the transposed dislocation-dynamics moment stress equals the
    # dislocation-format moment stress with mapped coefficients, so the curl
    # terms in the equations of motion coincide
    a1, a2, a3 = 0.4, 1.1, 0.3
    alpha1, alpha2, alpha3 = map_eringen_claus(a1, a2, a3)
    for _ in range(5):
        P = random_band_limited(grid, "tensor", rng)
        theta = curl(P).values
        m_ec = eringen_claus_moment_stress(theta, a1, a2, a3)
        d, w, _ = tensors.cartan_decompose(theta)
        m_rx = alpha1 * d + alpha2 * w + alpha3 * tensors.trace(theta)[..., None, None] * np.eye(3)
        np.testing.assert_allclose(np.swapaxes(m_ec, -1, -2), m_rx, atol=1e-12)
        lhs = curl(TensorField(np.swapaxes(m_ec, -1, -2), grid)).values
        rhs_v = curl(TensorField(m_rx, grid)).values
        assert np.max(np.abs(lhs - rhs_v)) < 1e-10 * max(np.max(np.abs(rhs_v)), 1.0)


def test_map_popov_kroener_values():
    assert map_popov_kroener(1.0, 0.5, 0.0) == (0.125, 0.125, 0.0)
    a1, a2, a3 = map_popov_kroener(1.0, 0.5, 0.25)
    assert a1 == pytest.approx(0.125)
    assert a2 == pytest.approx(13 / 72)
    assert a3 == 0.0


def test_map_popov_kroener_positive_on_range(rng):
    for _ in range(100):
        nu = rng.uniform(-0.99, 0.49)
        a1, a2, a3 = map_popov_kroener(rng.uniform(0.1, 3), rng.uniform(0.1, 2), nu)
        assert a1 > 0 and a2 > 0 and a3 == 0.0


def test_map_popov_kroener_rejects_poisson():
    with pytest.raises(PoissonOutOfRange):
        map_popov_kroener(1.0, 0.5, 0.5)
    with pytest.raises(PoissonOutOfRange):
        map_popov_kroener(1.0, 0.5, -1.0)


def test_popov_kroener_quadform_route(rng):
    for _ in range(50):
        mu, d, nu = rng.uniform(0.1, 2), rng.uniform(0.1, 1), rng.uniform(-0.9, 0.45)
        frak = popov_kroener_quadform_coefficients(mu, d, nu)
        via_quadform = tensors.quadform_decompose(*frak)
        direct = map_popov_kroener(mu, d, nu)
        np.testing.assert_allclose(via_quadform, direct, atol=1e-14)
        assert abs(via_quadform[2]) < 1e-14  # the trace part is absent


def test_map_cowin_nunziato_values():
    p = MaterialParams(1, 1, 0, 1, 1, 1, 3.0, 1, Variant.MICROVOID)
    cn = map_cowin_nunziato(p)
    assert (cn.mu_v, cn.lambda_v, cn.alpha_v) == (1.0, 1.0, 2.0)
    assert cn.b_v == pytest.approx(-5 / 3)
    assert cn.xi_v == pytest.approx(10.0)


def test_cowin_nunziato_positivity_implied(rng):
    for _ in range(100):
        p = random_admissible(rng, Variant.MICROVOID, mu_c=0.0)
        cn = map_cowin_nunziato(p)
        assert cn.b_v < 0
        assert cn.positive_definite


# ---------------------------------------------------------------------------
# Teisseyre symmetry
# ---------------------------------------------------------------------------


def test_teisseyre_einstein_mapping():
    assert teisseyre_einstein(1.0) == (-6.0, 6.0)
    assert teisseyre_einstein(-0.5) == (3.0, -3.0)


def test_einstein_choice_symmetric_for_all_P(grid):
    rng = np.random.default_rng(WITNESS_SEED)
    a1, a2 = teisseyre_einstein(1.0)
    p = MaterialParams(1, 0, 0, 1, 0, a1, a2, 1.0, Variant.TEISSEYRE_EINSTEIN)
    for _ in range(5):
        P = random_band_limited(grid, "tensor", rng)
        assert symmetry_residual(p, P) < 1e-9
        assert check_symmetry(p, P)


def test_symmetry_iff_alpha1_equals_minus_alpha2(grid):
    rng = np.random.default_rng(WITNESS_SEED)
    S = TensorField(tensors.sym(random_band_limited(grid, "tensor", rng).values), grid)
    p_good = MaterialParams(1, 0, 0, 1, 0, 1.0, -1.0, 0.0, Variant.RELAXED)
    assert symmetry_residual(p_good, S) < 1e-9
    # recorded witness: alpha1 = +alpha2 breaks the symmetry
    p_bad = MaterialParams(1, 0, 0, 1, 0, 1.0, 1.0, 0.0, Variant.RELAXED)
    assert symmetry_residual(p_bad, S) > 1e-3
    assert not check_symmetry(p_bad, S)


# ---------------------------------------------------------------------------
# Nye formulas
# ---------------------------------------------------------------------------


def test_nye_constant_field(grid):
    A = TensorField(np.broadcast_to(tensors.anti(np.ones(3)), (grid.n,) * 3 + (3, 3)).copy(), grid)
    r1, r2 = nye_identities(A)
    assert r1 < 1e-12 and r2 < 1e-12


def test_nye_single_mode(grid):
    x1, x2, _ = grid.meshgrid()
    w = np.zeros((grid.n,) * 3 + (3,))
    w[..., 0] = np.sin(x2)
    A = TensorField(tensors.anti(w), grid)
    r1, r2 = nye_identities(A)
    assert r1 < 1e-11 and r2 < 1e-11


def test_nye_random_fields(grid, rng):
    for _ in range(5):
        w = random_band_limited(grid, "vector", rng)
        A = TensorField(tensors.anti(w.values), grid)
        r1, r2 = nye_identities(A)
        assert r1 < 1e-10 and r2 < 1e-10


def test_nye_roundtrip(grid, rng):
    # the two affine relations are mutually inverse
    from micromorph.fields import grad

    w = random_band_limited(grid, "vector", rng)
    A = TensorField(tensors.anti(w.values), grid)
    C = curl(A).values
    Ct = np.swapaxes(C, -1, -2)
    G = -Ct + 0.5 * tensors.trace(Ct)[..., None, None] * np.eye(3)  # grad axl A
    back = np.swapaxes(G, -1, -2) - tensors.trace(G)[..., None, None] * np.eye(3)
    np.testing.assert_allclose(back, -C, atol=1e-10)


def test_nye_rejects_non_skew(grid, rng):
    with pytest.raises(NonSkewField):
        nye_identities(random_band_limited(grid, "tensor", rng))


# ---------------------------------------------------------------------------
# Reduced dynamics
# ---------------------------------------------------------------------------


def cosserat_params():
    return MaterialParams(1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, Variant.COSSERAT)


def test_cosserat_tensor_vs_vector_trajectories(grid, rng):
    p = cosserat_params()
    th0 = random_band_limited(grid, "vector", rng, 0.5)
    th0d = random_band_limited(grid, "vector", rng, 0.5)
    z3 = zeros(grid, "vector")
    s_vec = CosseratState(z3, z3, th0, th0d)
    s_ten = CosseratTensorState(
        z3, z3, TensorField(tensors.anti(th0.values), grid), TensorField(tensors.anti(th0d.values), grid)
    )
    dt = 0.5 * min(
        estimate_stable_dt_reduced(p, grid, "cosserat"),
        estimate_stable_dt_reduced(p, grid, "cosserat-tensor"),
    )
    f_vec, tr_vec = run_reduced(Variant.COSSERAT, p, s_vec, dt=dt, n_steps=500)
    f_ten, tr_ten = run_reduced(Variant.COSSERAT, p, s_ten, dt=dt, n_steps=500)
    diff = np.max(np.abs(f_ten.A.values - tensors.anti(f_vec.theta.values)))
    assert diff < 1e-8
    assert tr_vec.drift() < 1e-9
    assert tr_ten.drift() < 1e-9


def test_microvoid_matches_spherical_projection(grid, rng):
    p = MaterialParams(1.0, 0.3, 0.0, 1.0, 0.2, 1.0, 1.5, 1.0, Variant.MICROVOID)
    u = random_band_limited(grid, "vector", rng)
    zeta = random_band_limited(grid, "scalar", rng)
    s = MicrovoidState(u, zeros(grid, "vector"), zeta, zeros(grid, "scalar"))
    ua, za = rhs_microvoid(s, p)
    # spherical projection of the full dislocation-format rhs on P = zeta*I
    p_full = p.replace(variant=Variant.RELAXED)
    P = TensorField(zeta.values[..., None, None] * np.eye(3), grid)
    sf = State(u, zeros(grid, "vector"), P, zeros(grid, "tensor"))
    ua_f, Pa_f = rhs(sf, p_full)
    np.testing.assert_allclose(ua.values, ua_f.values, atol=1e-12)
    np.testing.assert_allclose(za.values, tensors.trace(Pa_f.values) / 3.0, atol=1e-10)


def test_microvoid_projection_along_trajectory(grid, rng):
    p = MaterialParams(1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, Variant.MICROVOID)
    u = random_band_limited(grid, "vector", rng, 0.5)
    zeta = random_band_limited(grid, "scalar", rng, 0.5)
    s = MicrovoidState(u, zeros(grid, "vector"), zeta, zeros(grid, "scalar"))
    dt = 0.5 * estimate_stable_dt_reduced(p, grid, "microvoid")
    worst = [0.0]

    def check(state):
        ua, za = rhs_microvoid(state, p)
        P = TensorField(state.zeta.values[..., None, None] * np.eye(3), grid)
        sf = State(state.u, state.udot, P, zeros(grid, "tensor"))
        _, Pa_f = rhs(sf, p.replace(variant=Variant.RELAXED))
        worst[0] = max(worst[0], float(np.max(np.abs(za.values - tensors.trace(Pa_f.values) / 3.0))))

    run_reduced(Variant.MICROVOID, p, s, dt=dt, n_steps=50, observers=[(10, check)])
    assert worst[0] < 1e-10


def test_microstretch_zeta_zero_degenerates_to_cosserat(grid, rng):
    p_ms = MaterialParams(1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, Variant.MICROSTRETCH)
    p_cs = cosserat_params()
    th0 = random_band_limited(grid, "vector", rng, 0.5)
    th0d = random_band_limited(grid, "vector", rng, 0.5)
    z3, zs = zeros(grid, "vector"), zeros(grid, "scalar")
    dt = 0.4 * min(
        estimate_stable_dt_reduced(p_ms, grid, "microstretch"),
        estimate_stable_dt_reduced(p_cs, grid, "cosserat"),
    )
    f_ms, _ = run_reduced(
        Variant.MICROSTRETCH, p_ms, MicrostretchState(z3, z3, th0, th0d, zs, zs), dt=dt, n_steps=300
    )
    f_cs, _ = run_reduced(Variant.COSSERAT, p_cs, CosseratState(z3, z3, th0, th0d), dt=dt, n_steps=300)
    assert np.max(np.abs(f_ms.zeta.values)) < 1e-12
    assert np.max(np.abs(f_ms.theta.values - f_cs.theta.values)) < 1e-10
    assert np.max(np.abs(f_ms.u.values - f_cs.u.values)) < 1e-10


@pytest.mark.parametrize("curvature", ["curl", "grad"])
def test_microstrain_conservation(grid, rng, curvature):
    p = MaterialParams(1.0, 0.2, 0.0, 1.0, 0.1, 1.0, 1.0, 1.0, Variant.MICROSTRAIN)
    u = random_band_limited(grid, "vector", rng, 0.5)
    ep = SymTensorField(
        full_to_sym6(tensors.sym(random_band_limited(grid, "tensor", rng, 0.5).values)), grid
    )
    epd = SymTensorField(
        full_to_sym6(tensors.sym(random_band_limited(grid, "tensor", rng, 0.5).values)), grid
    )
    s = MicrostrainState(u, zeros(grid, "vector"), ep, epd)
    dt = 0.5 * estimate_stable_dt_reduced(p, grid, "microstrain", curvature)
    _, trace = run_reduced(
        Variant.MICROSTRAIN, p, s, dt=dt, n_steps=200, microstrain_curvature=curvature
    )
    assert trace.drift() < 1e-9


def test_microstrain_symmetry_structural(grid, rng):
    full = rng.standard_normal((grid.n,) * 3 + (3, 3))
    back = sym6_to_full(full_to_sym6(full))
    np.testing.assert_allclose(back, tensors.sym(full), atol=1e-14)
    np.testing.assert_allclose(back, np.swapaxes(back, -1, -2))


@pytest.mark.parametrize(
    "kind", ["cosserat", "microstretch", "microvoid"], ids=str
)
def test_reduced_energy_conservation(grid, rng, kind):
    variant = {
        "cosserat": Variant.COSSERAT,
        "microstretch": Variant.MICROSTRETCH,
        "microvoid": Variant.MICROVOID,
    }[kind]
    p = MaterialParams(1.0, 0.2, 1.0 if kind != "microvoid" else 0.0, 1.0, 0.1, 1.0, 1.0, 1.0, variant)
    z3, zs = zeros(grid, "vector"), zeros(grid, "scalar")
    th = random_band_limited(grid, "vector", rng, 0.5)
    u = random_band_limited(grid, "vector", rng, 0.5)
    zeta = random_band_limited(grid, "scalar", rng, 0.5)
    state = {
        "cosserat": CosseratState(u, z3, th, z3),
        "microstretch": MicrostretchState(u, z3, th, z3, zeta, zs),
        "microvoid": MicrovoidState(u, z3, zeta, zs),
    }[kind]
    dt = 0.5 * estimate_stable_dt_reduced(p, grid, kind)
    _, trace = run_reduced(variant, p, state, dt=dt, n_steps=300)
    assert trace.drift() < 1e-9
    wnorm = trace.energy_norm()
    assert np.max(wnorm) <= wnorm[0] * (1 + 1e-6)


def test_run_reduced_state_variant_mismatch(grid):
    p = cosserat_params()
    z3 = zeros(grid, "vector")
    s = CosseratState(z3, z3, z3, z3)
    with pytest.raises(UnsupportedVariant):
        run_reduced(Variant.MICROVOID, p, s, dt=0.01, n_steps=1)


def test_reduced_forcing_enters_the_right_slots(grid, rng):
    p = cosserat_params()
    z3 = zeros(grid, "vector")
    s = CosseratState(z3, z3, z3, z3)
    M = random_band_limited(grid, "tensor", rng)
    ua, ta = rhs_cosserat(s, p, Forcing(M=M))
    assert norm(ua) == 0.0
    expected = tensors.axl(tensors.skew(M.values))
    np.testing.assert_allclose(ta.values, expected, atol=1e-13)
    # microstretch: the trace of M drives zeta
    sms = MicrostretchState(z3, z3, z3, z3, zeros(grid, "scalar"), zeros(grid, "scalar"))
    p_ms = MaterialParams(1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, Variant.MICROSTRETCH)
    _, _, za = rhs_microstretch(sms, p_ms, Forcing(M=M))
    np.testing.assert_allclose(za.values, tensors.trace(M.values) / 3.0, atol=1e-13)
