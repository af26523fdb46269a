"""
Minkowski valuations Pi, Pi_p, Phi^mu and Phi_p^mu as maps from bodies to support functions.

Every operator is an integral of a zonal kernel k(u . v) against S_p(K, .):

    h(Phi_p^mu K, u)^p = integral of kernel(mu, p, u . v) dS_p(K, v)

Polytopes sum over facet atoms. Smooth bodies integrate their surface density on the
grid rotated so that its pole lands on u; the kernel is then only ever evaluated at the
grid's polar heights and its singular set lies on the grid's equator and poles.

Rotation-average reduction used by lemma41_check: lifting mu to SO(n) through the rotations
fixing e and conjugating by any rotation carrying e to u, the average of F(phi u) over
the lifted measure equals the integral of F(rotation_to(u) w) dmu(w). With F = h(Pi_p K, .)^p
this gives

    h(Phi_p^mu K, u)^p = (1 / a_{n,p}) * integral of h(Pi_p K, rotation_to(u) w)^p dmu(w).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from lib.bodies import Ball, Polytope, SupportField, lp_surface_measure, require_origin_interior, surface_density
from lib.helper_handler import SpecValidationError, sphere_area, weighted_sum
from lib.sphere_quadrature import as_unit_vector, make_grid, rotation_to, rotations_to, DEFAULT_LEVEL
from lib.zonal_measures import ZonalMeasure, kernel

module_logger = logging.getLogger('isoval.valuations')

ROTATED_BLOCK = 1 << 20
CIRCLE_POINTS = 8192


@dataclass(frozen=True)
class ValuationParams:
    measure: ZonalMeasure
    p: float = 1.0

    def __post_init__(self):
        if not self.p >= 1.0:
            raise SpecValidationError(f"p must be >= 1, got {self.p}")

    def describe(self):
        return {"mu": self.measure.describe(), "p": self.p}


def a_np(n, p):
    """Gamma((n+p)/2) / (2 pi^{(n-1)/2} Gamma((p+1)/2)), the constant making Pi_p B = B."""
    if n < 3 or p < 1.0:
        raise SpecValidationError(f"a_np needs n >= 3 and p >= 1, got n={n}, p={p}")
    return math.exp(gammaln(0.5 * (n + p)) - gammaln(0.5 * (p + 1)) - 0.5 * (n - 1) * math.log(math.pi)) / 2.0


def _directions(directions, n):
    u = np.atleast_2d(np.asarray(directions, dtype=float))
    if u.shape[1] != n:
        raise SpecValidationError(f"Directions must have {n} coordinates, got {u.shape[1]}")
    return u / np.linalg.norm(u, axis=1)[:, None]


def measure_support_power(S, kernel_fn, directions):
    """Sum over atoms of kernel_fn(u . normal) * weight, for each direction u."""
    u = np.atleast_2d(directions)
    return kernel_fn(u @ S.normals.T) @ S.weights


def _rotated_support_power(K, kernel_fn, p, u, grid):
    kernel_weights = kernel_fn(grid.polar) * grid.weights
    if isinstance(K, Ball) and not np.any(K.center):
        constant = K.radius ** (K.dim - 1) * K.radius ** (1.0 - p)
        return np.full(u.shape[0], constant * math.fsum(kernel_weights.tolist()))

    density = surface_density(K, p)
    out = np.empty(u.shape[0])
    block = max(1, ROTATED_BLOCK // grid.size)
    for start in range(0, u.shape[0], block):
        rotations = rotations_to(u[start:start + block])
        rotated = np.einsum('cij,nj->cni', rotations, grid.nodes)
        out[start:start + block] = density(rotated) @ kernel_weights
    return out


def support_power(K, kernel_fn, p, directions, grid=None):
    """integral of kernel_fn(u . v) dS_p(K, v) at every direction u."""
    if not isinstance(K, Polytope):
        grid = grid if grid is not None else make_grid(K.dim, DEFAULT_LEVEL)
        u = _directions(directions, K.dim)
        if p > 1.0:
            require_origin_interior(K)
        return _rotated_support_power(K, kernel_fn, p, u, grid)
    S = lp_surface_measure(K, p)
    return measure_support_power(S, kernel_fn, _directions(directions, K.dim))


def _pi_kernel(s):
    return 0.5 * np.abs(s)


def _pi_p_kernel(n, p):
    a = a_np(n, p)
    if p == 1.0:
        return lambda s: a * np.abs(s)
    return lambda s: a * np.abs(s) ** p


def _phi_kernel(measure, p):
    return lambda s: kernel(measure, p, s)


def _generators(K, scale):
    """Segment generators of a zonotope h(u) = scale * sum |u . normal_i| area_i."""
    if isinstance(K, Polytope) and K.dim == 3:
        return scale * K.areas[:, None] * K.normals
    return None


def evaluate_pi(K, directions, grid=None):
    return support_power(K, _pi_kernel, 1.0, directions, grid)


def evaluate_pi_p(K, p, directions, grid=None):
    return support_power(K, _pi_p_kernel(K.dim, p), p, directions, grid) ** (1.0 / p)


def evaluate_phi_mu(K, measure, directions, grid=None):
    return support_power(K, _phi_kernel(measure, 1.0), 1.0, directions, grid)


def evaluate_phi_mu_p(K, measure, p, directions, grid=None):
    return support_power(K, _phi_kernel(measure, p), p, directions, grid) ** (1.0 / p)


def pi(K, grid):
    values = evaluate_pi(K, grid.nodes, grid)
    return SupportField(grid=grid, values=values, label="pi", generators=_generators(K, 0.5))


def pi_p(K, p, grid):
    values = evaluate_pi_p(K, p, grid.nodes, grid)
    generators = _generators(K, a_np(K.dim, 1.0)) if p == 1.0 else None
    return SupportField(grid=grid, values=values, label=f"pi_{p:g}", generators=generators)


def phi_mu(K, measure, grid):
    values = evaluate_phi_mu(K, measure, grid.nodes, grid)
    generators = _generators(K, measure.total_mass) if measure.is_discrete else None
    return SupportField(grid=grid, values=values, label=f"phi[{measure.kind}]", generators=generators)


def phi_mu_p(K, measure, p, grid):
    if p == 1.0:
        return phi_mu(K, measure, grid)
    values = evaluate_phi_mu_p(K, measure, p, grid.nodes, grid)
    return SupportField(grid=grid, values=values, label=f"phi_{p:g}[{measure.kind}]")


def phi_mu_of_measure(S, measure, directions):
    """h(Phi^mu, u) for a surface area measure given directly as atoms."""
    return measure_support_power(S, _phi_kernel(measure, 1.0), np.atleast_2d(directions))


def _latitude_circle(t, n, points):
    if n != 3:
        raise SpecValidationError("Latitude circles are implemented for n = 3")
    phi = 2.0 * math.pi * np.arange(points) / points
    r = math.sqrt(max(0.0, 1.0 - t * t))
    return np.stack([r * np.cos(phi), r * np.sin(phi), np.full(points, t)], axis=1)


def lemma41_check(K, measure, p, u, grid, circle_points=CIRCLE_POINTS):
    """
    Both sides of the rotation-average identity at direction u.

    :return: (lhs, rhs) with lhs = h(Phi_p^mu K, u)^p and
        rhs = (1/a_{n,p}) * integral of h(Pi_p K, rotation_to(u) w)^p dmu(w)
    """
    n = K.dim
    u = as_unit_vector(u)
    a = a_np(n, p)
    lhs = float(support_power(K, _phi_kernel(measure, p), p, u, grid)[0])

    rotation = rotation_to(u)
    pi_p_kernel = _pi_p_kernel(n, p)
    parts = []
    for t, mass in measure.atoms:
        if t == 1.0:
            w = u[None, :]
        else:
            w = _latitude_circle(t, n, circle_points) @ rotation.T
        values = support_power(K, pi_p_kernel, p, w, grid)
        parts.append(mass * math.fsum(values.tolist()) / values.size)

    continuous = []
    if measure.lebesgue:
        continuous.append(np.full(grid.size, measure.lebesgue / sphere_area(n)))
    for coef, profile in measure.densities:
        continuous.append(coef * profile.g(np.abs(grid.polar)))
    if continuous:
        density = np.sum(continuous, axis=0)
        values = support_power(K, pi_p_kernel, p, grid.nodes @ rotation.T, grid)
        parts.append(weighted_sum(values * density, grid.weights))

    rhs = math.fsum(parts) / a
    module_logger.debug(f"Rotation average at u={np.round(u, 4)}: lhs={lhs:.12g} rhs={rhs:.12g}")
    return lhs, rhs
