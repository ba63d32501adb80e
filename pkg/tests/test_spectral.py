import numpy as np
import pytest

from nspd.spectral import (
    Grid,
    SpectralField,
    dealias,
    divergence,
    gradient,
    l2_norm,
    laplacian,
    leray_project,
    linf_norm,
    mean_value,
    partial_derivative,
    semigroup_apply,
    sobolev_norm,
    to_physical,
    to_spectral,
)

from helpers import restrict, upsample

PI_SQRT2 = np.pi * np.sqrt(2.0)  # L2 norm of sin(x1) on [-pi,pi]^2


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(dim=4, n=32)
    with pytest.raises(ValueError):
        Grid(dim=2, n=24)  # not a power of two
    with pytest.raises(ValueError):
        Grid(dim=2, n=4)


def test_constant_field_coefficient(grid2d):
    f = to_spectral(grid2d, np.full(grid2d.shape, 3.25))
    assert f.coeffs[0, 0, 0] == pytest.approx(3.25, abs=1e-14)
    others = f.coeffs.copy()
    others[0, 0, 0] = 0.0
    assert np.abs(others).max() < 1e-14


def test_sin_has_exactly_two_modes(grid2d):
    xs = grid2d.meshgrid()
    f = to_spectral(grid2d, np.sin(xs[0]))
    nonzero = np.argwhere(np.abs(f.coeffs[0]) > 1e-13)
    assert len(nonzero) == 2
    rows = sorted(tuple(r) for r in nonzero)
    assert rows == [(1, 0), (grid2d.n - 1, 0)]  # k = +1 and k = -1


def test_round_trip_identity(grid2d, rng):
    samples = rng.standard_normal((3,) + grid2d.shape)
    back = to_physical(to_spectral(grid2d, samples))
    assert np.abs(back - samples).max() < 1e-12 * np.abs(samples).max()


def test_parseval(grid2d, rng):
    samples = rng.standard_normal((2,) + grid2d.shape)
    f = to_spectral(grid2d, samples)
    quadrature = np.sqrt((samples**2).sum() * grid2d.cell_volume)
    assert abs(quadrature - l2_norm(f)) < 1e-12 * quadrature


def test_gradient_of_constant_is_zero(grid2d):
    f = to_spectral(grid2d, np.ones(grid2d.shape))
    assert np.abs(gradient(f).coeffs).max() < 1e-15


def test_gradient_analytic(grid2d):
    xs = grid2d.meshgrid()
    f = to_spectral(grid2d, np.sin(xs[0]))
    grad = to_physical(gradient(f))
    assert np.abs(grad[0] - np.cos(xs[0])).max() < 1e-13
    assert np.abs(grad[1]).max() < 1e-13


def test_gradient_single_mode_multiplier(grid2d):
    # a pure mode picks up the factor i k_j
    f = SpectralField(grid2d, np.zeros((1,) + grid2d.shape, dtype=complex))
    f.coeffs[0, 3, 2] = 1.0 + 0.5j
    g = gradient(f)
    assert g.coeffs[0, 3, 2] == pytest.approx(1j * 3 * (1.0 + 0.5j))
    assert g.coeffs[1, 3, 2] == pytest.approx(1j * 2 * (1.0 + 0.5j))


def test_laplacian_analytic(grid2d):
    xs = grid2d.meshgrid()
    f = to_spectral(grid2d, np.sin(xs[0]))
    assert np.abs(to_physical(laplacian(f)) + np.sin(xs[0])).max() < 1e-13
    g = to_spectral(grid2d, np.sin(xs[0]) * np.cos(xs[1]))
    expected = -2.0 * np.sin(xs[0]) * np.cos(xs[1])
    assert np.abs(to_physical(laplacian(g))[0] - expected).max() < 1e-13


def test_laplacian_of_constant(grid2d):
    f = to_spectral(grid2d, np.full(grid2d.shape, 2.0))
    assert np.abs(laplacian(f).coeffs).max() == 0.0


def test_leray_annihilates_gradients(grid2d, rng):
    phi = to_spectral(grid2d, rng.standard_normal(grid2d.shape))
    grad_phi = gradient(phi)
    assert np.abs(leray_project(grad_phi).coeffs).max() < 1e-13


def test_leray_fixes_taylor_green(grid2d):
    xs = grid2d.meshgrid()
    u = to_spectral(
        grid2d, np.stack([np.sin(xs[0]) * np.cos(xs[1]), -np.cos(xs[0]) * np.sin(xs[1])])
    )
    pu = leray_project(u)
    assert np.abs(pu.coeffs - u.coeffs).max() < 1e-14


def test_leray_single_mode_formula_and_divergence(grid2d, rng):
    # mode k=(2,1), amplitude a: projection is a - (a.k) k/|k|^2
    a = np.array([0.7 - 0.2j, 0.3 + 0.4j])
    k = np.array([2.0, 1.0])
    f = SpectralField(grid2d, np.zeros((2,) + grid2d.shape, dtype=complex))
    f.coeffs[:, 2, 1] = a
    p = leray_project(f)
    expected = a - k * (a @ k) / 5.0
    assert np.abs(p.coeffs[:, 2, 1] - expected).max() < 1e-14
    # physical-space divergence oracle on a real-valued projected field
    u = leray_project(to_spectral(grid2d, rng.standard_normal((2,) + grid2d.shape)))
    assert np.abs(divergence(u).coeffs).max() < 1e-12 * l2_norm(u)


def test_leray_idempotent_and_mean_zero(grid2d, rng):
    u = to_spectral(grid2d, rng.standard_normal((2,) + grid2d.shape))
    pu = leray_project(u)
    ppu = leray_project(pu)
    assert l2_norm(SpectralField(grid2d, ppu.coeffs - pu.coeffs)) < 1e-14 * l2_norm(u)
    assert np.abs(mean_value(pu)).max() == 0.0


def test_sobolev_norm_values(grid2d):
    xs = grid2d.meshgrid()
    zero = to_spectral(grid2d, np.zeros(grid2d.shape))
    assert sobolev_norm(zero, 2.0) == 0.0
    f = to_spectral(grid2d, np.sin(xs[0]))
    assert sobolev_norm(f, 0.0) == pytest.approx(PI_SQRT2, rel=1e-13)
    for r in (0.5, 1.0, 2.7):
        assert sobolev_norm(f, r) == pytest.approx(2 ** (r / 2) * PI_SQRT2, rel=1e-13)
    with pytest.raises(ValueError):
        sobolev_norm(f, -1.0)


def test_semigroup_identity_and_decay(grid2d):
    xs = grid2d.meshgrid()
    f = to_spectral(grid2d, np.sin(xs[0]))
    assert np.abs(semigroup_apply(f, 0.0).coeffs - f.coeffs).max() == 0.0
    decayed = semigroup_apply(f, 1.0)
    assert np.abs(to_physical(decayed)[0] - np.exp(-1.0) * np.sin(xs[0])).max() < 1e-13
    with pytest.raises(ValueError):
        semigroup_apply(f, -0.1)


def test_semigroup_law_and_contraction(grid2d, rng):
    f = dealias(to_spectral(grid2d, rng.standard_normal((2,) + grid2d.shape)))
    for t, s in ((0.1, 0.7), (0.7, 0.1)):
        ab = semigroup_apply(semigroup_apply(f, t), s)
        a_plus_b = semigroup_apply(f, t + s)
        assert l2_norm(SpectralField(grid2d, ab.coeffs - a_plus_b.coeffs)) < 1e-13 * l2_norm(f)
    g = f.copy()
    g.coeffs[:, 0, 0] = 0.0  # mean-zero
    for t in (0.01, 0.5, 4.0):
        assert l2_norm(semigroup_apply(g, t)) <= l2_norm(g)


def test_semigroup_smoothing_ratio_bounded(grid2d, rng):
    # ||S(t)f||_{H^3} <= M (1 + t^-1/2) ||f||_{H^2} with one fitted M
    worst = 0.0
    for _ in range(10):
        f = to_spectral(grid2d, rng.standard_normal(grid2d.shape))
        nf = sobolev_norm(f, 2.0)
        for t in (1e-3, 1e-2, 0.1, 1.0):
            ratio = sobolev_norm(semigroup_apply(f, t), 3.0) / (nf * (1 + t**-0.5))
            worst = max(worst, ratio)
    assert np.isfinite(worst)
    assert worst < 10.0  # single-grid fitted constant, zero-slack sanity cap


def test_stokes_variant_projects(grid2d, rng):
    u = to_spectral(grid2d, rng.standard_normal((2,) + grid2d.shape))
    s = semigroup_apply(u, 0.3, which="stokes")
    assert np.abs(divergence(s).coeffs).max() < 1e-12 * max(l2_norm(s), 1e-300)


def test_dealias_idempotent_and_count(grid2d, rng):
    f = to_spectral(grid2d, rng.standard_normal(grid2d.shape))
    once = dealias(f)
    twice = dealias(once)
    assert np.abs(twice.coeffs - once.coeffs).max() == 0.0
    kmax = grid2d.k_max_retained  # floor(2/3 * 16) = 10
    assert kmax == 10
    expected = (2 * kmax + 1) ** 2
    assert int((np.abs(once.coeffs[0]) > 0).sum()) == expected


def test_dealias_matches_double_resolution_product(grid2d, rng):
    # pseudospectral product of dealiased inputs vs the exact product on a
    # doubled grid, restricted and masked the same way
    f = dealias(to_spectral(grid2d, rng.standard_normal(grid2d.shape)))
    g = dealias(to_spectral(grid2d, rng.standard_normal(grid2d.shape)))
    ours = dealias(to_spectral(grid2d, to_physical(f)[0] * to_physical(g)[0]))
    product_fine = to_physical(upsample(f))[0] * to_physical(upsample(g))[0]
    oracle = dealias(restrict(to_spectral(upsample(f).grid, product_fine), grid2d))
    assert np.abs(ours.coeffs - oracle.coeffs).max() < 1e-13


def test_dealias_kills_near_nyquist_square(grid2d):
    # sin((n/2-1) x1)^2 with the same dealiased pipeline agrees with the
    # double-resolution oracle: the input mode sits beyond the 2/3 cutoff,
    # so both reduce to zero
    xs = grid2d.meshgrid()
    m = grid2d.n // 2 - 1
    f = dealias(to_spectral(grid2d, np.sin(m * xs[0])))
    ours = dealias(to_spectral(grid2d, to_physical(f)[0] ** 2))
    fine = upsample(f)
    oracle = dealias(restrict(to_spectral(fine.grid, to_physical(fine)[0] ** 2), grid2d))
    assert np.abs(ours.coeffs - oracle.coeffs).max() < 1e-10


def test_shape_mismatch_raises(grid2d):
    with pytest.raises(ValueError):
        to_spectral(grid2d, np.zeros((grid2d.n, grid2d.n + 1)))


def test_linf_norm(grid2d):
    xs = grid2d.meshgrid()
    f = to_spectral(grid2d, np.stack([3.0 * np.cos(xs[0]), 4.0 * np.cos(xs[0])]))
    assert linf_norm(f) == pytest.approx(5.0, rel=1e-12)


def test_partial_derivative_matches_gradient(grid2d, rng):
    f = to_spectral(grid2d, rng.standard_normal(grid2d.shape))
    g = gradient(f)
    for j in range(2):
        assert np.abs(partial_derivative(f, j).coeffs[0] - g.coeffs[j]).max() == 0.0


def test_product_estimate_ratio_stable_across_seeds(grid2d):
    # || fg ||_{H^s} / (||f||_inf ||g||_{H^s} + ||f||_{H^s} ||g||_inf)
    def max_ratio(seed: int) -> float:
        gen = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(100):
            f = dealias(to_spectral(grid2d, gen.standard_normal(grid2d.shape)))
            g = dealias(to_spectral(grid2d, gen.standard_normal(grid2d.shape)))
            fg = to_spectral(grid2d, to_physical(f)[0] * to_physical(g)[0])
            denom = linf_norm(f) * sobolev_norm(g, 2.0) + sobolev_norm(f, 2.0) * linf_norm(g)
            worst = max(worst, sobolev_norm(fg, 2.0) / denom)
        return worst

    r1, r2 = max_ratio(7), max_ratio(8)
    assert np.isfinite(r1) and np.isfinite(r2)
    assert max(r1, r2) / min(r1, r2) < 3.0


def test_3d_grid_basics(grid3d, rng):
    samples = rng.standard_normal((3,) + grid3d.shape)
    f = to_spectral(grid3d, samples)
    assert np.abs(to_physical(f) - samples).max() < 1e-12
    xs = grid3d.meshgrid()
    g = to_spectral(grid3d, np.sin(xs[2]))
    grad = to_physical(gradient(g))
    assert np.abs(grad[2] - np.cos(xs[2])).max() < 1e-13
