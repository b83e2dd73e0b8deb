import numpy as np
import pytest

from rotlimit.spectral import Grid
from rotlimit.thermo import DimensionError, DomainError

from conftest import smooth_field


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(12, 16)
    with pytest.raises(ValueError):
        Grid(2, 16)
    g = Grid(16, 32, 4, lx=3.0, ly=5.0)
    assert g.shape == (16, 32, 4)
    assert g.volume == pytest.approx(15.0)
    assert g.horizontal().shape == (16, 32, 1)


def test_check_rejects_wrong_shapes(grid2d):
    with pytest.raises(DimensionError):
        grid2d.check(np.zeros((16, 16, 1)))
    with pytest.raises(DimensionError):
        grid2d.div(np.zeros((2, 8, 8, 1)))
    with pytest.raises(DimensionError):
        grid2d.lift(np.zeros((8, 8, 1)))


def test_grad_of_constant_is_zero(grid3d):
    np.testing.assert_allclose(grid3d.grad(np.full(grid3d.shape, 3.7)), 0, atol=1e-14)


def test_derivatives_of_trig_polynomial(grid3d):
    x, y, z = grid3d.coords()
    f = np.broadcast_to(np.sin(2 * x) * np.cos(3 * y) + np.cos(2 * np.pi * z), grid3d.shape)
    g = grid3d.grad(f)
    np.testing.assert_allclose(g[0], 2 * np.cos(2 * x) * np.cos(3 * y) + 0 * z, atol=1e-12)
    np.testing.assert_allclose(g[1], -3 * np.sin(2 * x) * np.sin(3 * y) + 0 * z, atol=1e-12)
    np.testing.assert_allclose(g[2], -2 * np.pi * np.sin(2 * np.pi * z) + 0 * x * y, atol=1e-11)


def test_curl_of_perp_grad_is_laplacian():
    g = Grid(32, 32)
    x, y, _ = g.coords()
    f = np.broadcast_to(np.cos(x) + np.sin(2 * y), g.shape)
    out = g.curl_h(g.perp_grad_h(f))
    np.testing.assert_allclose(out, np.broadcast_to(-np.cos(x) - 4 * np.sin(2 * y), g.shape),
                               atol=1e-12)
    np.testing.assert_allclose(g.laplacian_h(f), out, atol=1e-12)


def test_perp_grad_is_divergence_free(grid3d):
    f = smooth_field(grid3d, np.random.default_rng(4))
    np.testing.assert_allclose(grid3d.div(grid3d.perp_grad_h(f)), 0, atol=1e-13)


@pytest.mark.parametrize("alpha,expected_factor", [(1.0, 0.5), (0.0, 1.0)])
def test_helmholtz_examples(alpha, expected_factor):
    g = Grid(32, 32)
    x, _, _ = g.coords()
    f = np.broadcast_to(np.cos(x), g.shape).copy()
    np.testing.assert_allclose(g.solve_helmholtz_h(f, alpha), expected_factor * f, atol=1e-14)
    np.testing.assert_array_equal(g.solve_helmholtz_h(np.zeros(g.shape), alpha), 0)


def test_helmholtz_zero_alpha_projects_mean(grid2d):
    f = 1.0 + np.broadcast_to(np.cos(grid2d.coords()[0]), grid2d.shape)
    q, removed = grid2d.solve_helmholtz_h(f, 0.0, return_projection=True)
    assert removed == pytest.approx(1.0)
    assert abs(np.mean(q)) < 1e-15
    with pytest.raises(DomainError):
        grid2d.solve_helmholtz_h(f, -1.0)


def test_dealias_identity_on_low_mode_and_kills_high_mode():
    g = Grid(32, 32)
    x, _, _ = g.coords()
    low = np.broadcast_to(np.cos(3 * x), g.shape)
    np.testing.assert_allclose(g.dealias(low), low, atol=1e-15)
    assert g.is_dealiased(low)
    high = np.broadcast_to(np.cos(12 * x), g.shape)
    np.testing.assert_allclose(g.dealias(high), 0, atol=1e-14)
    assert not g.is_dealiased(high)


def test_integrate_is_exact_for_trig(grid3d):
    x, y, z = grid3d.coords()
    assert grid3d.integrate(np.broadcast_to(np.cos(x) ** 2 + 0 * y * z, grid3d.shape)) == \
        pytest.approx(grid3d.volume / 2, rel=1e-14)


def test_vertical_average(grid3d):
    x, y, z = grid3d.coords()
    f = np.broadcast_to(np.sin(x) * np.cos(y), grid3d.shape)
    avg = grid3d.vertical_average(f)
    assert avg.shape == (16, 16, 1)
    np.testing.assert_allclose(avg[..., 0], f[..., 0], atol=1e-15)
    zdep = np.broadcast_to(np.cos(2 * np.pi * z) + 0 * x, grid3d.shape)
    np.testing.assert_allclose(grid3d.vertical_average(zdep), 0, atol=1e-15)


def test_lift_roundtrip(grid3d):
    h = np.random.default_rng(0).normal(size=(16, 16, 1))
    np.testing.assert_array_equal(grid3d.vertical_average(grid3d.lift(h)), h)


def test_project_symmetry_examples(grid3d):
    x, y, z = grid3d.coords()
    rho = np.ones(grid3d.shape)
    mom = np.zeros((3,) + grid3d.shape)
    mom[2] = np.broadcast_to(np.cos(2 * np.pi * z), grid3d.shape)
    mom[0] = np.broadcast_to(np.sin(2 * np.pi * z) * np.cos(x), grid3d.shape)
    r, m = grid3d.project_symmetry(rho, mom)
    np.testing.assert_allclose(m[2], 0, atol=1e-15)
    np.testing.assert_allclose(m[0], 0, atol=1e-15)
    np.testing.assert_array_equal(r, rho)
    # projection is idempotent
    f = smooth_field(grid3d, np.random.default_rng(1))
    p1 = grid3d.parity_part(f, 1)
    np.testing.assert_allclose(grid3d.parity_part(p1, 1), p1, atol=1e-15)
    np.testing.assert_allclose(p1 + grid3d.parity_part(f, -1), f, atol=1e-15)
