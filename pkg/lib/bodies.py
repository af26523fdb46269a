"""
Convex bodies: balls, ellipsoids and polytopes.

Polytopes are recentered at their volume centroid when built, so every constructed
polytope holds the origin in its interior. Surface area measures of smooth bodies are
discretized on a spherical grid and also keep their density with respect to spherical
Lebesgue measure, which lets the valuations module integrate them on rotated grids.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from lib.helper_handler import SpecValidationError, NumericFailure, ball_volume, sphere_area, unit_rows, weighted_sum
from lib.sphere_quadrature import make_grid, DEFAULT_LEVEL

module_logger = logging.getLogger('isoval.bodies')

FACET_DECIMALS = 9
INTERIOR_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    @property
    def dim(self):
        return self.center.size

    def describe(self):
        return {"type": "ball", "radius": self.radius, "center": self.center.tolist()}


@dataclass(frozen=True)
class Ellipsoid:
    """R diag(semiaxes) B^n, centered at the origin."""
    semiaxes: np.ndarray
    rotation: np.ndarray

    @property
    def dim(self):
        return self.semiaxes.size

    @property
    def matrix(self):
        return self.rotation * self.semiaxes[None, :]

    def describe(self):
        return {"type": "ellipsoid", "semiaxes": self.semiaxes.tolist()}


@dataclass(frozen=True)
class Polytope:
    vertices: np.ndarray = field(repr=False)
    normals: np.ndarray = field(repr=False)
    offsets: np.ndarray = field(repr=False)
    areas: np.ndarray = field(repr=False)
    volume: float
    label: str = "hull"

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def facet_count(self):
        return self.areas.size

    def describe(self):
        return {"type": "polytope", "label": self.label, "vertices": int(self.vertices.shape[0]),
                "facets": int(self.facet_count), "volume": self.volume}


@dataclass(frozen=True)
class SurfaceMeasure:
    """
    Discrete surface area measure: atoms (normal, weight).

    For smooth bodies the atoms sit on grid nodes and `density` gives the Radon-Nikodym
    derivative with respect to spherical Lebesgue measure at arbitrary directions.
    """
    normals: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    p: float = 1.0
    density: Optional[Callable] = field(default=None, repr=False, compare=False)
    label: str = ""

    @property
    def total_mass(self):
        return math.fsum(self.weights.tolist())

    @property
    def is_smooth(self):
        return self.density is not None

    def closure_residual(self):
        return float(np.max(np.abs(self.weights @ self.normals)))


@dataclass(frozen=True)
class SupportField:
    grid: object
    values: np.ndarray = field(repr=False)
    label: str = ""
    generators: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.values.shape != (self.grid.size,):
            raise SpecValidationError(f"Support field needs {self.grid.size} values, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise NumericFailure(f"Support field {self.label} has non-finite values")
        if np.any(self.values <= 0.0):
            raise NumericFailure(f"Support field {self.label} is not positive; origin is not interior")

    def stats(self):
        return {"label": self.label, "min": float(self.values.min()), "max": float(self.values.max()),
                "mean": float(self.values.mean()), "nodes": int(self.values.size)}


def ball(radius=1.0, n=3, center=None):
    if not radius > 0.0:
        raise SpecValidationError(f"Ball radius must be positive, got {radius}")
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    return Ball(center=center, radius=float(radius))


def ellipsoid(semiaxes, rotation=None):
    semiaxes = np.asarray(semiaxes, dtype=float)
    if semiaxes.ndim != 1 or semiaxes.size < 3 or np.any(semiaxes <= 0.0):
        raise SpecValidationError(f"Ellipsoid semiaxes must be >= 3 positive numbers, got {semiaxes}")
    n = semiaxes.size
    rotation = np.eye(n) if rotation is None else np.asarray(rotation, dtype=float)
    if rotation.shape != (n, n) or not np.allclose(rotation @ rotation.T, np.eye(n), atol=1e-10):
        raise SpecValidationError("Ellipsoid rotation must be an orthogonal matrix")
    return Ellipsoid(semiaxes=semiaxes, rotation=rotation)


def _simplex_measure(points):
    """k-volume of the simplex spanned by k+1 points in R^n, via the Gram determinant."""
    edges = points[1:] - points[0]
    k = edges.shape[0]
    gram = edges @ edges.T
    return math.sqrt(max(0.0, np.linalg.det(gram))) / math.factorial(k)


def _volume_centroid(hull):
    points = hull.points
    inner = points[hull.vertices].mean(axis=0)
    n = points.shape[1]
    total = 0.0
    moment = np.zeros(n)
    for simplex in hull.simplices:
        corners = points[simplex]
        vol = abs(np.linalg.det(corners - inner)) / math.factorial(n)
        total += vol
        moment += vol * (corners.sum(axis=0) + inner) / (n + 1)
    return moment / total


def polytope_from_vertices(points, label="hull"):
    """
    Convex hull of the points, recentered at its volume centroid.

    Coplanar hull simplices are merged into facets; facet offsets are measured from the
    new origin.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] < 3:
        raise SpecValidationError(f"Expected an (m, n) array of points with n >= 3, got shape {points.shape}")
    n = points.shape[1]
    if points.shape[0] < n + 1:
        raise SpecValidationError(f"Need at least {n + 1} points for a full-dimensional hull")
    try:
        hull = ConvexHull(points)
    except (QhullError, ValueError) as e:
        raise SpecValidationError(f"Degenerate point set, hull failed: {e}")
    if not hull.volume > 1e-12:
        raise SpecValidationError("Degenerate point set, hull has no volume")

    centroid = _volume_centroid(hull)
    vertices = points[hull.vertices] - centroid

    facets = {}
    for simplex, equation in zip(hull.simplices, hull.equations):
        key = tuple(np.round(equation, FACET_DECIMALS))
        area = _simplex_measure(points[simplex])
        if key in facets:
            facets[key][1] += area
        else:
            facets[key] = [equation[:n], area]

    normals = unit_rows(np.array([v[0] for v in facets.values()]))
    areas = np.array([v[1] for v in facets.values()])
    offsets = np.max(vertices @ normals.T, axis=0)

    module_logger.debug(f"Hull {label}: {vertices.shape[0]} vertices, {areas.size} facets, volume {hull.volume:.6g}")
    return Polytope(vertices=vertices, normals=normals, offsets=offsets, areas=areas,
                    volume=float(hull.volume), label=label)


def cube(edge=1.0, n=3):
    corners = np.array(np.meshgrid(*[[-0.5, 0.5]] * n, indexing="ij")).reshape(n, -1).T
    return polytope_from_vertices(edge * corners, label="cube")


def simplex(n=3):
    """Regular simplex inscribed in the unit sphere."""
    basis = np.eye(n + 1) - 1.0 / (n + 1)
    q, _ = np.linalg.qr(basis.T)
    points = basis @ q[:, :n]
    points = points / np.linalg.norm(points[0])
    return polytope_from_vertices(points, label="simplex")


def box(lower, upper):
    """Axis-aligned box as a polytope; all sides must have positive width."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(upper <= lower):
        raise SpecValidationError("Box sides must have positive width; use box_surface_measure for slabs")
    n = lower.size
    corners = np.array(np.meshgrid(*[[lo, hi] for lo, hi in zip(lower, upper)], indexing="ij")).reshape(n, -1).T
    return polytope_from_vertices(corners, label="box")


def box_surface_measure(lower, upper):
    """
    Surface area measure of an axis-aligned box. One side may have zero width, in which
    case the box is a flat slab carrying two opposite atoms of equal area.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    widths = upper - lower
    if np.any(widths < 0.0) or np.count_nonzero(widths == 0.0) > 1:
        raise SpecValidationError(f"Invalid box widths {widths}")
    n = widths.size
    normals, weights = [], []
    for i in range(n):
        area = float(np.prod(np.delete(widths, i)))
        if area > 0.0:
            for sign in (1.0, -1.0):
                normal = np.zeros(n)
                normal[i] = sign
                normals.append(normal)
                weights.append(area)
    return SurfaceMeasure(normals=np.array(normals), weights=np.array(weights), p=1.0, label="box")


def linear_image(K, A):
    """Image of K under the invertible linear map A."""
    A = np.asarray(A, dtype=float)
    if isinstance(K, Polytope):
        return polytope_from_vertices(K.vertices @ A.T, label=K.label)
    if isinstance(K, Ball):
        if np.any(K.center != 0.0):
            raise SpecValidationError("Linear images are taken of origin-centered balls only")
        matrix = K.radius * A
    else:
        matrix = A @ K.matrix
    u, sigma, _ = np.linalg.svd(matrix)
    if np.linalg.det(u) < 0:
        u[:, -1] = -u[:, -1]
    return Ellipsoid(semiaxes=sigma, rotation=u)


def dilate(K, factor):
    if isinstance(K, Ball):
        return Ball(center=factor * K.center, radius=factor * K.radius)
    return linear_image(K, factor * np.eye(K.dim))


def support(K, u):
    """h(K, u) for a direction or an (M, n) array of directions."""
    u = np.asarray(u, dtype=float)
    if isinstance(K, Ball):
        return u @ K.center + K.radius
    if isinstance(K, Ellipsoid):
        return np.linalg.norm(u @ K.matrix, axis=-1)
    return np.max(u @ K.vertices.T, axis=-1)


def volume(K):
    if isinstance(K, Ball):
        return ball_volume(K.dim) * K.radius ** K.dim
    if isinstance(K, Ellipsoid):
        return ball_volume(K.dim) * float(np.prod(K.semiaxes))
    return K.volume


def has_origin_interior(K):
    if isinstance(K, Ball):
        return float(np.linalg.norm(K.center)) < K.radius
    if isinstance(K, Ellipsoid):
        return True
    return bool(np.all(K.offsets > INTERIOR_TOLERANCE))


def require_origin_interior(K):
    if not has_origin_interior(K):
        raise SpecValidationError("Body must contain the origin in its interior")


def surface_density(K, p=1.0):
    """Density of S_p(K, .) with respect to spherical Lebesgue measure, for smooth K."""
    n = K.dim
    if isinstance(K, Ball):
        r, c = K.radius, K.center
        if p == 1.0:
            return lambda u: np.full(np.shape(u)[:-1], r ** (n - 1))
        return lambda u: r ** (n - 1) * (np.asarray(u) @ c + r) ** (1.0 - p)
    if isinstance(K, Ellipsoid):
        det_sq = float(np.prod(K.semiaxes)) ** 2
        matrix = K.matrix

        def density(u):
            h = np.linalg.norm(np.asarray(u) @ matrix, axis=-1)
            return det_sq / h ** (n + 1) * h ** (1.0 - p)
        return density
    raise SpecValidationError("Polytopes have atomic surface measures")


def surface_measure(K, grid=None):
    """S(K, .): facet atoms for polytopes, a grid-discretized measure for smooth bodies."""
    if isinstance(K, Polytope):
        return SurfaceMeasure(normals=K.normals, weights=K.areas, p=1.0, label=K.label)
    grid = grid if grid is not None else make_grid(K.dim, DEFAULT_LEVEL)
    density = surface_density(K, 1.0)
    return SurfaceMeasure(normals=grid.nodes, weights=density(grid.nodes) * grid.weights, p=1.0,
                          density=density, label=type(K).__name__.lower())


def lp_surface_measure(K, p, grid=None):
    """S_p(K, .) = h(K, .)^{1-p} S(K, .)."""
    if p < 1.0:
        raise SpecValidationError(f"p must be >= 1, got {p}")
    if p == 1.0:
        return surface_measure(K, grid)
    require_origin_interior(K)
    if isinstance(K, Polytope):
        return SurfaceMeasure(normals=K.normals, weights=K.areas * K.offsets ** (1.0 - p), p=p, label=K.label)
    grid = grid if grid is not None else make_grid(K.dim, DEFAULT_LEVEL)
    density = surface_density(K, p)
    return SurfaceMeasure(normals=grid.nodes, weights=density(grid.nodes) * grid.weights, p=p,
                          density=density, label=type(K).__name__.lower())


def perimeter(K, grid=None):
    if isinstance(K, Polytope):
        return math.fsum(K.areas.tolist())
    if isinstance(K, Ball):
        return sphere_area(K.dim) * K.radius ** (K.dim - 1)
    return surface_measure(K, grid).total_mass


def support_field(K, grid):
    return SupportField(grid=grid, values=support(K, grid.nodes), label=f"h({type(K).__name__.lower()})")


def _merge_generators(generators):
    """Sums parallel segment generators; the result has one generator per direction."""
    merged = {}
    for g in generators:
        length = float(np.linalg.norm(g))
        if length == 0.0:
            continue
        direction = g / length
        pivot = np.flatnonzero(np.abs(direction) > 1e-12)[0]
        if direction[pivot] < 0:
            direction = -direction
        key = tuple(np.round(direction, FACET_DECIMALS))
        if key in merged:
            merged[key][1] += length
        else:
            merged[key] = [direction, length]
    return np.array([d * length for d, length in merged.values()])


def zonotope_polar_volume(generators):
    """
    Exact volume of Z° for the zonotope Z = sum of segments [-g_i, g_i] in R^3.

    The vertices of Z° are the facet normals of Z divided by the support values there.
    """
    gens = _merge_generators(np.asarray(generators, dtype=float))
    if gens.shape[0] < 3 or np.linalg.matrix_rank(gens) < 3:
        raise NumericFailure("Zonotope is not full-dimensional; its polar is unbounded")
    normals = []
    for i in range(gens.shape[0]):
        cross = np.cross(gens[i], gens[i + 1:])
        norms = np.linalg.norm(cross, axis=1)
        keep = norms > 1e-14
        normals.append(cross[keep] / norms[keep, None])
    normals = np.concatenate(normals)
    normals = np.concatenate([normals, -normals])
    h = np.sum(np.abs(normals @ gens.T), axis=1)
    return float(ConvexHull(normals / h[:, None]).volume)


def polar_volume(h):
    """|K°| = (1/n) * integral of h(K, u)^{-n} du, exact for fields carrying zonotope generators."""
    n = h.grid.dim
    if h.generators is not None and n == 3:
        return zonotope_polar_volume(h.generators)
    return weighted_sum(h.values ** (-float(n)), h.grid.weights) / n


def mean_width(h):
    n = h.grid.dim
    return 2.0 / sphere_area(n) * weighted_sum(h.values, h.grid.weights)


def cauchy_shadow_area(K, u):
    """(n-1)-volume of the projection of a polytope onto u-perp, from the projected hull (n = 3)."""
    if not isinstance(K, Polytope) or K.dim != 3:
        raise SpecValidationError("Shadow areas are computed for 3-dimensional polytopes")
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    helper = np.eye(3)[int(np.argmin(np.abs(u)))]
    e1 = np.cross(u, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u, e1)
    planar = K.vertices @ np.stack([e1, e2]).T
    return float(ConvexHull(planar).volume)
