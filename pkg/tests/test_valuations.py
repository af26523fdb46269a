import math

import numpy as np
import pytest

from lib.bodies import (ball, box_surface_measure, cauchy_shadow_area, ellipsoid, linear_image, polar_volume,
                        polytope_from_vertices, simplex, surface_measure)
from lib.helper_handler import SpecValidationError
from lib.sphere_quadrature import random_directions, random_rotation
from lib.valuations import (ValuationParams, a_np, evaluate_phi_mu, evaluate_phi_mu_p, evaluate_pi, evaluate_pi_p,
                            lemma41_check, phi_mu, phi_mu_of_measure, phi_mu_p, pi, pi_p)
from lib.zonal_measures import blend, discrete_poles, equatorial, latitude, lebesgue


def test_a_np_closed_forms():
    assert a_np(3, 1.0) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-14)
    assert a_np(3, 2.0) == pytest.approx(3.0 / (4.0 * math.pi), rel=1e-14)
    with pytest.raises(SpecValidationError):
        a_np(2, 1.0)
    with pytest.raises(SpecValidationError):
        ValuationParams(discrete_poles(0.5), p=0.5)


def test_projection_body_of_ball(grid, unit_ball):
    h = pi(unit_ball, grid)
    assert np.allclose(h.values, math.pi, rtol=1e-10)
    assert polar_volume(h) == pytest.approx(4.0 / (3.0 * math.pi ** 2), rel=1e-10)


def test_lp_projection_body_of_ball_is_ball(grid, unit_ball):
    for p in (1.0, 2.0):
        assert np.allclose(pi_p(unit_ball, p, grid).values, 1.0, rtol=1e-10)


def test_projection_body_of_cube(grid, unit_cube):
    h = pi(unit_cube, grid)
    assert np.allclose(h.values, np.abs(grid.nodes).sum(axis=1), rtol=1e-12)
    assert polar_volume(h) == pytest.approx(4.0 / 3.0, rel=1e-12)


def test_cauchy_projection_formula(unit_cube):
    K = simplex()
    for u in random_directions(np.random.default_rng(4), 5, 3):
        assert evaluate_pi(K, u)[0] == pytest.approx(cauchy_shadow_area(K, u), rel=1e-10)
    assert evaluate_pi(unit_cube, [0.0, 0.0, 1.0])[0] == pytest.approx(1.0)


def test_pi_1_is_scaled_projection_body(grid, unit_cube):
    assert np.allclose(pi_p(unit_cube, 1.0, grid).values, pi(unit_cube, grid).values / math.pi, rtol=1e-12)


def test_lp_projection_body_of_cube(grid, unit_cube):
    assert np.allclose(pi_p(unit_cube, 2.0, grid).values, math.sqrt(3.0 / math.pi), rtol=1e-12)


def test_discrete_mu_reproduces_projection_body(grid, unit_cube, unit_ball, half_measures):
    mu = half_measures["discrete"]
    for K in (unit_cube, unit_ball):
        assert np.allclose(phi_mu(K, mu, grid).values, pi(K, grid).values, rtol=1e-10)
    assert polar_volume(phi_mu(unit_cube, mu, grid)) == pytest.approx(4.0 / 3.0, rel=1e-12)


def test_every_half_measure_gives_pi_on_the_ball(grid, unit_ball, half_measures):
    for mu in half_measures.values():
        assert np.allclose(phi_mu(unit_ball, mu, grid).values, math.pi, rtol=1e-10)


def test_lebesgue_mu_gives_a_ball(grid, unit_cube, half_measures):
    h = phi_mu(unit_cube, half_measures["lebesgue"], grid)
    assert np.allclose(h.values, 0.25 * 6.0, rtol=1e-12)


def test_phi_mu_p_at_one_is_phi_mu(grid, unit_cube, half_measures):
    mu = half_measures["equatorial"]
    assert np.array_equal(phi_mu_p(unit_cube, mu, 1.0, grid).values, phi_mu(unit_cube, mu, grid).values)


def test_phi_mu_p_of_ball_with_lp_normalization(grid, unit_ball):
    mu = lebesgue(a_np(3, 2.0))
    # kernel a_{3,2} / 3 against the sphere area 4 pi
    assert np.allclose(phi_mu_p(unit_ball, mu, 2.0, grid).values, 1.0, rtol=1e-10)


def test_projection_body_covariance(grid):
    A = np.diag([1.5, 1.0, 0.8]) @ random_rotation(np.random.default_rng(9), 3)
    E = linear_image(ball(1.0), A)
    det = abs(np.linalg.det(A))
    inverse_t = np.linalg.inv(A).T
    for u in random_directions(np.random.default_rng(10), 4, 3):
        expected = det * math.pi * np.linalg.norm(inverse_t @ u)
        assert evaluate_pi(E, u, grid)[0] == pytest.approx(expected, rel=1e-6)


def test_lp_projection_body_covariance(grid):
    A = np.diag([1.3, 1.0, 0.9])
    E = ellipsoid([1.3, 1.0, 0.9])
    det = abs(np.linalg.det(A))
    p = 2.0
    for u in random_directions(np.random.default_rng(12), 3, 3):
        expected = det ** (1.0 / p) * np.linalg.norm(np.linalg.inv(A).T @ u)
        assert evaluate_pi_p(E, p, u, grid)[0] == pytest.approx(expected, rel=1e-6)


def test_evaluations_agree_with_fields(coarse_grid, unit_cube):
    mu = blend(lebesgue(0.25), latitude(0.25, 0.6))
    h = phi_mu(unit_cube, mu, coarse_grid)
    assert np.allclose(evaluate_phi_mu(unit_cube, mu, coarse_grid.nodes[:10]), h.values[:10], rtol=1e-14)
    S = surface_measure(unit_cube)
    assert np.allclose(phi_mu_of_measure(S, mu, coarse_grid.nodes[:10]), h.values[:10], rtol=1e-14)


def test_rotation_average_identity_on_polytopes(grid):
    u = random_directions(np.random.default_rng(21), 1, 3)[0]
    K = simplex()
    for mu, p in ((latitude(0.4, 0.5), 1.0), (latitude(0.4, 0.5), 2.0),
                  (blend(equatorial(0.3), latitude(0.2, 0.3)), 1.5), (discrete_poles(0.7), 1.0)):
        lhs, rhs = lemma41_check(K, mu, p, u, grid)
        assert lhs == pytest.approx(rhs, rel=1e-6)


def test_rotation_average_identity_on_ball(grid, unit_ball):
    u = np.array([0.0, 0.6, 0.8])
    for mu, p in ((equatorial(0.5), 1.0), (equatorial(0.5), 2.0), (discrete_poles(0.5), 1.5)):
        lhs, rhs = lemma41_check(unit_ball, mu, p, u, grid)
        assert lhs == pytest.approx(rhs, rel=1e-6)


def test_rotation_average_identity_with_lebesgue_part(grid, unit_cube):
    lhs, rhs = lemma41_check(unit_cube, lebesgue(0.5), 2.0, [0.0, 0.0, 1.0], grid)
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_phi_mu_is_rotation_equivariant():
    rng = np.random.default_rng(31)
    K = simplex()
    mu = blend(lebesgue(0.2), latitude(0.3, 0.45))
    for _ in range(3):
        R = random_rotation(rng, 3)
        RK = linear_image(K, R)
        u = random_directions(rng, 6, 3)
        assert np.allclose(evaluate_phi_mu(RK, mu, u), evaluate_phi_mu(K, mu, u @ R), rtol=1e-10)


def test_phi_mu_is_translation_invariant(grid, half_measures):
    mu = half_measures["equatorial"]
    u = random_directions(np.random.default_rng(32), 5, 3)
    shifted = ball(1.0, center=[0.2, -0.1, 0.3])
    assert np.allclose(evaluate_phi_mu(shifted, mu, u, grid), evaluate_phi_mu(ball(1.0), mu, u, grid), rtol=1e-12)

    points = simplex().vertices
    moved = polytope_from_vertices(points + np.array([3.0, -1.0, 2.0]))
    mu = latitude(0.5, 0.3)
    assert np.allclose(evaluate_phi_mu(moved, mu, u), evaluate_phi_mu(simplex(), mu, u), rtol=1e-10)


def test_phi_mu_p_scales_with_the_mass_of_mu(unit_cube):
    mu = latitude(0.4, 0.5)
    u = random_directions(np.random.default_rng(33), 6, 3)
    c = 3.0
    for p in (1.0, 2.0, 2.5):
        base = evaluate_phi_mu_p(unit_cube, mu, p, u)
        assert np.allclose(evaluate_phi_mu_p(unit_cube, mu.scaled(c), p, u), c ** (1.0 / p) * base, rtol=1e-12)


@pytest.mark.parametrize("K_box, L_box, union, meet", [
    (([0, 0, 0], [2, 1, 1]), ([1, 0, 0], [3, 1, 1]), ([0, 0, 0], [3, 1, 1]), ([1, 0, 0], [2, 1, 1])),
    (([0, 0, 0], [1, 1, 1]), ([1, 0, 0], [2, 1, 1]), ([0, 0, 0], [2, 1, 1]), ([1, 0, 0], [1, 1, 1])),
])
def test_phi_mu_is_a_valuation_on_boxes(K_box, L_box, union, meet):
    mu = blend(lebesgue(0.25), latitude(0.25, 0.6))
    u = random_directions(np.random.default_rng(34), 8, 3)

    def h(corners):
        return phi_mu_of_measure(box_surface_measure(*corners), mu, u)

    assert np.allclose(h(union) + h(meet), h(K_box) + h(L_box), rtol=1e-12)
