"""
Quadrature on the unit sphere S^{n-1}.

For n = 3 the grid is a product rule: Gauss-Legendre in the polar angle, applied
separately on each hemisphere, times the uniform trapezoid rule in the azimuth. The
hemisphere split puts every kernel of the form k(|u . e|) on a node boundary, and the
azimuth nodes are shifted by (1 - 1/sqrt(3))/2 of a step, which cancels the leading
trapezoid error of kinks on the coordinate half-planes.

For n > 3 the grid is a symmetrized scrambled Sobol point set with equal weights.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri, roots_legendre
from scipy.stats import qmc, special_ortho_group

from lib.helper_handler import SpecValidationError, NumericFailure, sphere_area, weighted_sum

module_logger = logging.getLogger('isoval.sphere_quadrature')

DEFAULT_LEVEL = 16
AZIMUTH_OFFSET = 0.5 * (1.0 - 1.0 / math.sqrt(3.0))
UNIT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SphericalGrid:
    dim: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    level: int
    scheme: str

    @property
    def size(self):
        return self.weights.shape[0]

    @property
    def polar(self):
        """u . e for every node, e being the pole (last coordinate axis)."""
        return self.nodes[:, -1]

    def __hash__(self):
        return hash((self.dim, self.level, self.scheme))

    def __eq__(self, other):
        return isinstance(other, SphericalGrid) and (self.dim, self.level, self.scheme) == (
            other.dim, other.level, other.scheme)


def pole(n):
    e = np.zeros(n)
    e[-1] = 1.0
    return e


def as_unit_vector(u):
    u = np.asarray(u, dtype=float)
    norm = np.linalg.norm(u)
    if norm == 0.0 or not np.isfinite(norm):
        raise SpecValidationError(f"Not a direction: {u}")
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        u = u / norm
    return u


def _product_grid(level):
    polar_count = 2 * level
    azimuth_count = 8 * level

    x, w = roots_legendre(polar_count)
    theta = (x + 1.0) * math.pi / 4.0
    theta_weights = w * math.pi / 4.0
    # upper hemisphere then its mirror image
    theta = np.concatenate([theta, math.pi - theta[::-1]])
    theta_weights = np.concatenate([theta_weights, theta_weights[::-1]])

    step = 2.0 * math.pi / azimuth_count
    phi = (np.arange(azimuth_count) + AZIMUTH_OFFSET) * step

    sin_t = np.sin(theta)
    nodes = np.empty((theta.size, azimuth_count, 3))
    nodes[:, :, 0] = sin_t[:, None] * np.cos(phi)[None, :]
    nodes[:, :, 1] = sin_t[:, None] * np.sin(phi)[None, :]
    nodes[:, :, 2] = np.cos(theta)[:, None]
    weights = np.repeat((theta_weights * sin_t * step)[:, None], azimuth_count, axis=1)
    return nodes.reshape(-1, 3), weights.reshape(-1)


def _sobol_grid(n, level):
    exponent = min(6 + level // 2, 16)
    sampler = qmc.Sobol(d=n, scramble=True, seed=level)
    points = sampler.random_base2(exponent)
    points = np.clip(points, 1e-12, 1.0 - 1e-12)
    normal = ndtri(points)
    half = normal / np.linalg.norm(normal, axis=1)[:, None]
    nodes = np.concatenate([half, -half])
    weights = np.full(nodes.shape[0], sphere_area(n) / nodes.shape[0])
    return nodes, weights


def make_grid(n=3, level=DEFAULT_LEVEL):
    """
    Builds a spherical quadrature grid.

    :param n: ambient dimension, at least 3
    :param level: resolution; for n = 3 the grid has 4*level x 8*level nodes
    :return: SphericalGrid
    """
    if n < 3:
        raise SpecValidationError(f"Sphere quadrature needs n >= 3, got {n}")
    if level < 1:
        raise SpecValidationError(f"Grid level must be >= 1, got {level}")

    if n == 3:
        nodes, weights = _product_grid(level)
        scheme = "gauss-legendre-trapezoid"
    else:
        nodes, weights = _sobol_grid(n, level)
        scheme = "sobol"

    module_logger.debug(f"Built {scheme} grid n={n} level={level} with {weights.size} nodes")
    return SphericalGrid(dim=n, nodes=nodes, weights=weights, level=level, scheme=scheme)


def integrate(f, grid):
    """
    Sum of f(u_i) * w_i over the grid.

    :param f: callable taking an (N, n) array of directions, or an array of values at the nodes
    """
    values = f(grid.nodes) if callable(f) else f
    values = np.asarray(values, dtype=float)
    if values.shape != grid.weights.shape:
        raise SpecValidationError(f"Expected {grid.size} node values, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise NumericFailure("Integrand is not finite at every grid node")
    return weighted_sum(values, grid.weights)


def _flip(n):
    # rotation by pi in the plane of the second and the last axis
    if n == 2:
        return -np.eye(2)
    flip = np.eye(n)
    flip[1, 1] = -1.0
    flip[-1, -1] = -1.0
    return flip


def rotation_to(u):
    """
    Rotation carrying the pole e to u.

    The rotation is the geodesic one in span{e, u} when u lies in the closed northern
    hemisphere. On the southern hemisphere the result is the flip about the first axis
    orthogonal to e, composed with the geodesic rotation to the flipped target, which
    lies in the northern one.
    """
    u = as_unit_vector(u)
    n = u.size
    e = pole(n)
    c = float(u @ e)
    if c < 0.0:
        flip = _flip(n)
        return flip @ rotation_to(flip.T @ u)
    k = np.outer(u, e) - np.outer(e, u)
    return np.eye(n) + k + (k @ k) / (1.0 + c)


def rotations_to(directions):
    """Stack of rotation_to for an (M, n) array of directions."""
    return np.stack([rotation_to(u) for u in np.atleast_2d(directions)])


def random_rotation(rng, n=3):
    return special_ortho_group.rvs(n, random_state=rng)


def random_directions(rng, count, n=3):
    x = rng.standard_normal((count, n))
    return x / np.linalg.norm(x, axis=1)[:, None]
