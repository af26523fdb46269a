import math

import numpy as np
import pytest

from lib.bodies import ball, cube
from lib.helper_handler import SpecValidationError, ball_volume
from lib.sobolev import (bv_char_lhs, c_np, char_norm, classical_bv_constant, from_raster, gradient_measure,
                         gromov_compare, lp_sobolev_check, projection_average_bv_constant,
                         projection_average_lp_constant, sobolev_zhang_value, synthesize, theorem3_constant,
                         theorem3_rhs, tilde_c_np, verify_theorem3)
from lib.sphere_quadrature import make_grid
from lib.zonal_measures import blend, discrete_poles, equatorial, lebesgue


@pytest.fixture(scope="module")
def sobolev_grid():
    return make_grid(3, 12)


def test_sharp_constants():
    assert c_np(3, 2.0) == pytest.approx((math.pi / 16.0) ** (1.0 / 3.0), rel=1e-12)
    assert tilde_c_np(3, 2.0) == pytest.approx((3.0 * math.pi / 16.0) ** (1.0 / 3.0), rel=1e-12)
    for p in (1.2, 1.5, 2.0, 2.7):
        assert c_np(3, p) == pytest.approx(c_np(3, p, method="gamma"), rel=1e-12)


def test_constants_reject_p_outside_range():
    for p in (1.0, 3.0, 4.0):
        with pytest.raises(SpecValidationError):
            c_np(3, p)
        with pytest.raises(SpecValidationError):
            tilde_c_np(3, p)


def test_classical_and_projection_average_constants():
    assert classical_bv_constant(3) == pytest.approx(3.0 * (4.0 * math.pi / 3.0) ** (1.0 / 3.0), rel=1e-14)
    # equatorial measure of mass 2 omega_1 = 4
    assert projection_average_bv_constant(3) == pytest.approx(theorem3_constant(equatorial(4.0)), rel=1e-14)
    assert projection_average_lp_constant(3, 2.0) == pytest.approx(c_np(3, 2.0) / math.sqrt(math.pi), rel=1e-12)


def test_bv_rhs_constant():
    assert theorem3_constant(equatorial(0.5)) == pytest.approx(3.0 ** (2.0 / 3.0) / 4.0, rel=1e-14)
    assert char_norm(cube()) == pytest.approx(1.0, rel=1e-12)
    assert char_norm(ball(1.0)) == pytest.approx(ball_volume(3) ** (2.0 / 3.0), rel=1e-14)


def test_ball_is_an_equality_case(grid, unit_ball):
    mu = equatorial(0.5)
    lhs = bv_char_lhs(unit_ball, mu, grid)
    rhs = theorem3_rhs(mu, 3, char_norm(unit_ball))
    assert lhs == pytest.approx((math.pi ** 2 / 4.0) ** (1.0 / 3.0), rel=1e-10)
    assert rhs == pytest.approx(lhs, rel=1e-10)


def test_direct_and_polar_paths_agree(grid, unit_ball, unit_cube, half_measures):
    for K in (unit_ball, unit_cube):
        for mu in half_measures.values():
            direct = bv_char_lhs(K, mu, grid)
            assert bv_char_lhs(K, mu, grid, path="polar") == pytest.approx(direct, rel=1e-10)
    with pytest.raises(SpecValidationError):
        bv_char_lhs(unit_cube, half_measures["discrete"], grid, path="other")


def test_sobolev_zhang_value_of_ball(grid, unit_ball):
    assert sobolev_zhang_value(unit_ball, grid) == pytest.approx((2.0 * math.pi ** 2) ** (1.0 / 3.0), rel=1e-10)


def test_cube_is_strict(grid, unit_cube, half_measures):
    mu = half_measures["discrete"]
    lhs = bv_char_lhs(unit_cube, mu, grid)
    rhs = theorem3_rhs(mu, 3, char_norm(unit_cube))
    assert lhs == pytest.approx(4.0 ** (-1.0 / 3.0), rel=1e-3)
    assert rhs == pytest.approx(3.0 ** (2.0 / 3.0) / 4.0, rel=1e-12)
    assert (lhs - rhs) / rhs > 0.01


def test_discrete_lhs_is_the_smallest(grid, unit_cube, half_measures):
    zhang = bv_char_lhs(unit_cube, half_measures["discrete"], grid)
    for mu in half_measures.values():
        assert bv_char_lhs(unit_cube, mu, grid) >= zhang - 1e-6
    assert bv_char_lhs(unit_cube, half_measures["lebesgue"], grid) == pytest.approx(
        (4.0 * math.pi / 1.5 ** 3) ** (-1.0 / 3.0), rel=1e-12)


def test_gromov_comparison(grid):
    ball_case = gromov_compare(lebesgue(0.5), grid)
    assert ball_case.thm3_rhs == pytest.approx(3.0 ** (2.0 / 3.0) / 4.0, rel=1e-14)
    assert ball_case.avg_gromov_rhs == pytest.approx(ball_case.thm3_rhs, rel=1e-7)
    assert gromov_compare(lebesgue(0.5), grid, method="halfspace").avg_gromov_rhs == pytest.approx(
        ball_case.thm3_rhs, rel=2e-2)

    flat = gromov_compare(equatorial(0.5), grid)
    assert flat.avg_gromov_rhs == 0.0
    assert flat.thm3_rhs > 0.0

    mixed = gromov_compare(blend(lebesgue(0.25), discrete_poles(0.25)), grid)
    assert mixed.gap > 1e-4

    with pytest.raises(SpecValidationError):
        gromov_compare(lebesgue(0.5), grid, method="other")


def test_synthesized_profiles_fit_their_box():
    for profile in ("gaussian", "bump", "aubin-talenti"):
        f = synthesize(profile, 2.0, points=32, half_width=24.0)
        assert f.values.shape == (32, 32, 32)
        assert f.gradient.shape == (32, 32, 32, 3)
        assert f.boundary_layer() <= 1e-12
    with pytest.raises(SpecValidationError):
        synthesize("sawtooth")


def test_gradient_measure_keeps_total_mass(sobolev_grid):
    f = synthesize("gaussian", 2.0, points=24, half_width=6.0, scale=1.0)
    binned = gradient_measure(f, 2.0, sobolev_grid)
    direct = np.sum(np.linalg.norm(f.gradient, axis=-1) ** 2) * f.cell_volume
    assert binned.sum() == pytest.approx(direct, rel=1e-12)


def test_aubin_talenti_is_near_equality(sobolev_grid):
    f = synthesize("aubin-talenti", 2.0)
    check = lp_sobolev_check(f, lebesgue(1.0), 2.0, sobolev_grid)
    assert check.ratio == pytest.approx(1.0, abs=5e-2)


def test_gaussian_has_positive_margin(sobolev_grid):
    f = synthesize("gaussian", 2.0, points=48, half_width=8.0, scale=1.0)
    check = lp_sobolev_check(f, equatorial(1.0), 2.0, sobolev_grid)
    assert check.margin > 0.0


def test_ratio_is_scale_free(sobolev_grid):
    ratios = []
    for dilation in (0.5, 1.0, 2.0):
        f = synthesize("gaussian", 2.0, points=64, half_width=8.0, scale=1.0, dilation=dilation)
        ratios.append(lp_sobolev_check(f, lebesgue(1.0), 2.0, sobolev_grid).ratio)
    assert ratios[0] == pytest.approx(ratios[1], rel=2e-3)
    assert ratios[2] == pytest.approx(ratios[1], rel=2e-3)


def test_raster_gradient_matches_analytic():
    f = synthesize("gaussian", 2.0, points=48, half_width=8.0, scale=2.0)
    g = from_raster(f.values, f.spacing, f.lower + 0.5 * f.spacing)
    interior = (slice(4, -4),) * 3
    assert np.allclose(g.gradient[interior], f.gradient[interior], atol=2e-2)


def test_lp_check_rejects_bad_input(sobolev_grid):
    f = synthesize("gaussian", 2.0, points=16, half_width=8.0, scale=1.0)
    with pytest.raises(SpecValidationError):
        lp_sobolev_check(f, lebesgue(1.0), 3.0, sobolev_grid)
    zero = from_raster(np.zeros((8, 8, 8)), 1.0)
    with pytest.raises(SpecValidationError):
        lp_sobolev_check(zero, lebesgue(1.0), 2.0, sobolev_grid)
    with pytest.raises(SpecValidationError):
        from_raster(np.zeros((8, 8)), 1.0)


def test_verify_theorem3(coarse_grid, half_measures):
    report = verify_theorem3(2, 42, coarse_grid, list(half_measures.values()), tolerance=1e-4, hull_vertices=12)
    assert len(report.trials) == 6
    assert report.violations == []
