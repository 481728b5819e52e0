import numpy as np
import pytest

from micromorph import tensors
from micromorph.errors import GridMismatch, NonSkewField
from micromorph.fields import (
    Grid,
    ScalarField,
    TensorField,
    VectorField,
    curl,
    curl_of_scalar_identity,
    div,
    grad,
    inner,
    laplacian,
    load_field,
    norm,
    project_divergence_free,
    random_band_limited,
    require_skew_field,
    save_field,
)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(3)
    with pytest.raises(ValueError):
        Grid(12)  # not a power of two
    with pytest.raises(ValueError):
        Grid(16, "upwind")
    g = Grid()
    assert g.n == 16 and g.h == pytest.approx(2 * np.pi / 16)


def test_field_shape_and_finiteness(grid):
    with pytest.raises(ValueError):
        VectorField(np.zeros((grid.n,) * 3), grid)
    bad = np.zeros((grid.n,) * 3)
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        ScalarField(bad, grid)


def test_grad_constant_is_zero(grid):
    f = ScalarField(np.full((grid.n,) * 3, 2.5), grid)
    assert norm(grad(f)) < 1e-13


def test_grad_single_mode_exact(grid):
    x1, _, _ = grid.meshgrid()
    v = np.zeros((grid.n,) * 3 + (3,))
    v[..., 0] = np.sin(x1)
    G = grad(VectorField(v, grid))
    expected = np.zeros_like(G.values)
    expected[..., 0, 0] = np.cos(x1)
    assert np.max(np.abs(G.values - expected)) < 1e-12


def test_fd2_exact_for_quadratic_interior():
    g = Grid(16, "fd2")
    x1, _, _ = g.meshgrid()
    v = np.zeros((g.n,) * 3 + (3,))
    v[..., 0] = x1**2
    G = grad(VectorField(v, g))
    interior = (slice(1, g.n - 1),) * 3
    assert np.max(np.abs(G.values[interior][..., 0, 0] - 2 * x1[interior])) < 1e-12


def test_curl_grad_and_div_curl_vanish(grid, rng):
    v = random_band_limited(grid, "vector", rng)
    r = curl(grad(v))
    assert norm(r) < 1e-11 * max(norm(grad(v)), 1.0)
    P = random_band_limited(grid, "tensor", rng)
    r2 = div(curl(P))
    assert norm(r2) < 1e-11 * max(norm(curl(P)), 1.0)


def test_curl_matches_row_convention(grid, rng):
    # (curl w)_k = eps_klm d_l w_m, row-wise on tensors
    P = random_band_limited(grid, "tensor", rng)
    C = curl(P)
    for i in range(3):
        row = VectorField(P.values[..., i, :], grid)
        np.testing.assert_allclose(curl(row).values, C.values[..., i, :], atol=1e-12)


def test_coordinate_skew_field_curl_identity_fd2():
    # curl(anti(x/2)) = I: the skew field whose axial vector is half the
    # coordinate field has the identity as its curl (consistent with the
    # axial-vector formula: curl(anti(w)) picks up a factor 2 on grad w trace)
    g = Grid(16, "fd2")
    x1, x2, x3 = g.meshgrid()
    A = TensorField(tensors.anti(0.5 * np.stack([x1, x2, x3], axis=-1)), g)
    C = curl(A)
    interior = (slice(1, g.n - 1),) * 3
    np.testing.assert_allclose(
        C.values[interior], np.broadcast_to(np.eye(3), C.values[interior].shape), atol=1e-12
    )


def test_curl_of_scalar_identity(grid):
    zc = ScalarField(np.full((grid.n,) * 3, 3.0), grid)
    assert norm(curl_of_scalar_identity(zc)) < 1e-13

    x1, x2, x3 = grid.meshgrid()
    z = ScalarField(np.sin(x3), grid)
    C = curl_of_scalar_identity(z)
    expected = np.zeros_like(C.values)
    expected[..., 0, 1] = np.cos(x3)
    expected[..., 1, 0] = -np.cos(x3)
    assert np.max(np.abs(C.values - expected)) < 1e-12
    # skew at every node, and identical to the generic row-wise curl
    assert np.max(np.abs(tensors.sym(C.values))) < 1e-12
    sph = TensorField(z.values[..., None, None] * np.eye(3), grid)
    np.testing.assert_allclose(C.values, curl(sph).values, atol=1e-12)


def test_curl_curl_spherical_trace(grid):
    x1, x2, _ = grid.meshgrid()
    z = ScalarField(np.sin(x1) * np.sin(x2), grid)
    CC = curl(curl_of_scalar_identity(z))
    assert np.max(np.abs(tensors.skew(CC.values))) < 1e-12
    lap = laplacian(z)
    np.testing.assert_allclose(tensors.trace(CC.values), -2.0 * lap.values, atol=1e-11)


def test_inner_product_properties(grid, rng):
    f = random_band_limited(grid, "scalar", rng)
    assert inner(f, f) > 0
    zero = ScalarField(np.zeros((grid.n,) * 3), grid)
    assert inner(zero, zero) == 0.0
    one = ScalarField(np.ones((grid.n,) * 3), grid)
    assert inner(one, one) == pytest.approx((2 * np.pi) ** 3)
    g2 = random_band_limited(grid, "scalar", rng)
    assert inner(f, g2) == pytest.approx(inner(g2, f))


def test_inner_parseval(grid, rng):
    # nodal sum vs spectral coefficients
    f = random_band_limited(grid, "scalar", rng)
    nodal = inner(f, f)
    spec = np.fft.fftn(f.values)
    spectral = float(np.sum(np.abs(spec) ** 2)) / grid.n**6 * grid.volume
    assert abs(nodal - spectral) < 1e-12 * nodal


def test_grid_mismatch_raises(grid, rng):
    other = Grid(8, "spectral")
    f = random_band_limited(grid, "scalar", rng)
    g2 = random_band_limited(other, "scalar", rng)
    with pytest.raises(GridMismatch):
        inner(f, g2)


def test_adjointness_grad_div_and_curl(grid, rng):
    v = random_band_limited(grid, "vector", rng)
    P = random_band_limited(grid, "tensor", rng)
    lhs = inner(grad(v), P)
    rhs = -inner(v, div(P))
    assert abs(lhs - rhs) < 1e-10 * max(abs(lhs), 1.0)
    Q = random_band_limited(grid, "tensor", rng)
    lhs = inner(curl(P), Q)
    rhs = inner(P, curl(Q))
    assert abs(lhs - rhs) < 1e-10 * max(abs(lhs), 1.0)


@pytest.mark.parametrize("backend", ["spectral", "fd2"])
def test_adjointness_both_backends(backend, rng):
    g = Grid(8, backend)
    v = random_band_limited(Grid(8, "spectral"), "vector", rng)
    P = random_band_limited(Grid(8, "spectral"), "tensor", rng)
    v = VectorField(v.values, g)
    P = TensorField(P.values, g)
    assert abs(inner(grad(v), P) + inner(v, div(P))) < 1e-10 * max(abs(inner(grad(v), P)), 1.0)


def test_fd2_second_order_convergence():
    errs = []
    for n in (16, 32):
        g = Grid(n, "fd2")
        x1, x2, _ = g.meshgrid()
        f = ScalarField(np.sin(x1) * np.cos(x2), g)
        G = grad(f)
        exact = np.stack(
            [np.cos(x1) * np.cos(x2), -np.sin(x1) * np.sin(x2), np.zeros_like(x1)], axis=-1
        )
        errs.append(np.max(np.abs(G.values - exact)))
    ratio = errs[0] / errs[1]
    assert 4 * 0.8 < ratio < 4 * 1.2


def test_project_divergence_free(grid, rng):
    v = random_band_limited(grid, "vector", rng)
    w = project_divergence_free(v)
    assert norm(div(w)) < 1e-11 * max(norm(w), 1.0)
    # projection is idempotent
    np.testing.assert_allclose(project_divergence_free(w).values, w.values, atol=1e-12)


def test_require_skew_field(grid, rng):
    w = random_band_limited(grid, "vector", rng)
    require_skew_field(TensorField(tensors.anti(w.values), grid))
    with pytest.raises(NonSkewField):
        require_skew_field(random_band_limited(grid, "tensor", rng))


@pytest.mark.parametrize("kind", ["scalar", "vector", "tensor"])
def test_snapshot_roundtrip(tmp_path, grid, rng, kind):
    f = random_band_limited(grid, kind, rng)
    path = tmp_path / f"{kind}.csv"
    save_field(f, path)
    g2 = load_field(path)
    assert g2.grid == f.grid
    np.testing.assert_allclose(g2.values, f.values, rtol=0, atol=1e-15)


def test_snapshot_order_x1_fastest(tmp_path):
    g = Grid(4, "spectral")
    vals = np.zeros((4, 4, 4))
    vals[1, 0, 0] = 7.0  # second point along x1
    save_field(ScalarField(vals, g), tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    data = [float(x) for x in lines[2:6]]
    assert data == [0.0, 7.0, 0.0, 0.0]


def test_band_limited_has_no_high_modes(grid, rng):
    f = random_band_limited(grid, "scalar", rng)
    spec = np.fft.fftn(f.values)
    k = np.fft.fftfreq(grid.n, 1.0 / grid.n)
    mask = np.abs(k) > grid.n / 3.0
    assert np.max(np.abs(spec[mask, :, :])) < 1e-10
    assert np.max(np.abs(spec[:, mask, :])) < 1e-10
    assert np.max(np.abs(spec[:, :, mask])) < 1e-10
