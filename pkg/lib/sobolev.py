"""
Functional side: the BV and W^{1,p} Sobolev-type inequalities driven by zonal measures.

For a characteristic function 1_K the total variation measure is the surface area
measure of K, so the BV left-hand side reduces to n^{-1/n} |Phi^{mu,o} K|^{-1/n}. W^{1,p}
functions are sampled on a regular grid; their gradients are pushed to the sphere as the
measure |grad f|^p dx binned onto the nearest node of a spherical grid.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gamma, gammaln

from lib.bodies import polar_volume, volume
from lib.helper_handler import SpecValidationError, NumericFailure, ball_volume, trial_generators, weighted_sum
from lib.inequalities import VerificationReport, make_record, random_hull
from lib.valuations import phi_mu, support_power
from lib.zonal_measures import discrete_poles, kernel, normalize, tabulate_kernel, zonoid_mean_width, \
    zonoid_volume_estimate, zonoid_volume_revolution

module_logger = logging.getLogger('isoval.sobolev')

PROFILES = ("gaussian", "aubin-talenti", "bump")
BOUNDARY_LAYER = 1e-12
TABLE_POINTS = 4097


def _check_p_range(n, p):
    if not 1.0 < p < n:
        raise SpecValidationError(f"Sharp Sobolev constants need 1 < p < n, got p={p}, n={n}")


def c_np(n, p, method="log"):
    """
    Sharp constant of the L_p inequality.

    :param method: "log" evaluates through log-gamma, "gamma" through gamma directly
    """
    _check_p_range(n, p)
    first = ((n - p) / (p - 1.0)) ** (1.0 - 1.0 / p)
    if method == "gamma":
        second = (gamma(n / p) * gamma(n + 1.0 - n / p) / gamma(n + 1.0)) ** (1.0 / n)
        third = (n * gamma(n / 2.0) * gamma((p + 1.0) / 2.0) / (math.sqrt(math.pi) * gamma((n + p) / 2.0))) ** (1.0 / p)
        return float(first * second * third)
    log_second = (gammaln(n / p) + gammaln(n + 1.0 - n / p) - gammaln(n + 1.0)) / n
    log_third = (math.log(n) + gammaln(n / 2.0) + gammaln((p + 1.0) / 2.0)
                 - 0.5 * math.log(math.pi) - gammaln((n + p) / 2.0)) / p
    return first * math.exp(log_second + log_third)


def tilde_c_np(n, p):
    _check_p_range(n, p)
    first = ((n - p) / (p - 1.0)) ** (1.0 - 1.0 / p)
    return first * math.exp((gammaln(n / p) + gammaln(n + 1.0 - n / p) - gammaln(n)) / n)


def _a_constant(k, p):
    return math.exp(gammaln(0.5 * (k + p)) - gammaln(0.5 * (p + 1)) - 0.5 * (k - 1) * math.log(math.pi)) / 2.0


def theorem3_constant(measure, n=None):
    n = n or measure.dim
    return 2.0 * ball_volume(n - 1) * measure.total_mass / (n ** (1.0 / n) * ball_volume(n))


def theorem3_rhs(measure, n, f_norm):
    return theorem3_constant(measure, n) * f_norm


def char_norm(K):
    """||1_K||_{n/(n-1)} = |K|^{(n-1)/n}."""
    n = K.dim
    return volume(K) ** ((n - 1.0) / n)


def classical_bv_constant(n):
    """n omega_n^{1/n}, the sharp constant of ||Df|| >= c ||f||_{n/(n-1)}."""
    return n * ball_volume(n) ** (1.0 / n)


def projection_average_bv_constant(n):
    """BV Sobolev constant for the equatorial measure of mass 2 omega_{n-2}."""
    return 4.0 * ball_volume(n - 1) * ball_volume(n - 2) / (n ** (1.0 / n) * ball_volume(n))


def projection_average_lp_constant(n, p):
    """L_p Sobolev constant for the equatorial measure of mass a_{n-1,p}."""
    return c_np(n, p) * _a_constant(n - 1, p) ** (1.0 / p)


def bv_char_lhs(K, measure, grid, path="direct"):
    """
    Left-hand side of the BV inequality for f = 1_K.

    :param path: "direct" integrates (integral of h(Z^mu(u), nu) dS(K, nu))^{-n} over u;
        "polar" goes through n^{-1/n} |Phi^{mu,o} K|^{-1/n} on the same quadrature
    """
    n = K.dim
    if path == "polar":
        field_ = replace(phi_mu(K, measure, grid), generators=None)
        return (n * polar_volume(field_)) ** (-1.0 / n)
    if path != "direct":
        raise SpecValidationError(f"Unknown path {path}")
    inner = support_power(K, lambda s: kernel(measure, 1.0, s), 1.0, grid.nodes, grid)
    if np.any(inner <= 0.0):
        raise NumericFailure("Zonal projection integral vanished")
    return weighted_sum(inner ** (-float(n)), grid.weights) ** (-1.0 / n)


def sobolev_zhang_value(K, grid):
    """Left-hand side of the BV inequality for 1_K with mu the unit pole pair."""
    return bv_char_lhs(K, discrete_poles(1.0, K.dim), grid)


@dataclass(frozen=True)
class GridFunction:
    lower: np.ndarray
    upper: np.ndarray
    spacing: float
    values: np.ndarray = field(repr=False)
    gradient: np.ndarray = field(repr=False)
    label: str = "raster"

    @property
    def dim(self):
        return self.values.ndim

    @property
    def cell_volume(self):
        return self.spacing ** self.dim

    def boundary_layer(self):
        faces = []
        for axis in range(self.dim):
            faces.append(np.take(self.values, [0, -1], axis=axis))
        return float(max(np.max(np.abs(face)) for face in faces))

    def norm(self, q):
        return weighted_sum(np.abs(self.values.reshape(-1)) ** q, np.full(self.values.size, self.cell_volume)) ** (1.0 / q)


def _cell_centers(points, half_width, n):
    spacing = 2.0 * half_width / points
    axis = -half_width + (np.arange(points) + 0.5) * spacing
    mesh = np.stack(np.meshgrid(*[axis] * n, indexing="ij"), axis=-1)
    return mesh, spacing


def _aubin_talenti(n, p, scale, outer):
    """Radial profile and derivative: exact inside outer/4, p-harmonic tail vanishing at `outer`."""
    _check_p_range(n, p)
    q = p / (p - 1.0)
    e = 1.0 - n / p
    k = (n - p) / (p - 1.0)
    rho = 0.25 * outer

    def exact(r):
        return (1.0 + (r / scale) ** q) ** e

    def exact_d(r):
        return e * (1.0 + (r / scale) ** q) ** (e - 1.0) * q * (r / scale) ** (q - 1.0) / scale

    amplitude = exact(rho) / (rho ** (-k) - outer ** (-k))

    def value(r):
        tail = amplitude * (np.maximum(r, rho) ** (-k) - outer ** (-k))
        return np.where(r <= rho, exact(r), np.where(r < outer, tail, 0.0))

    def derivative(r):
        tail = -k * amplitude * np.maximum(r, rho) ** (-k - 1.0)
        return np.where(r <= rho, exact_d(r), np.where(r < outer, tail, 0.0))

    return value, derivative


def _gaussian(width):
    def value(r):
        return np.exp(-(r / width) ** 2)

    def derivative(r):
        return -2.0 * r / width ** 2 * np.exp(-(r / width) ** 2)

    return value, derivative


def _bump(radius):
    def value(r):
        x = np.minimum(r / radius, 1.0 - 1e-15)
        return np.where(r < radius, np.exp(1.0 - 1.0 / (1.0 - x * x)), 0.0)

    def derivative(r):
        x = np.minimum(r / radius, 1.0 - 1e-15)
        inner = 1.0 - x * x
        return np.where(r < radius, -2.0 * x / (radius * inner * inner) * np.exp(1.0 - 1.0 / inner), 0.0)

    return value, derivative


def synthesize(profile, p=2.0, n=3, points=96, half_width=24.0, scale=None, dilation=1.0):
    """
    Radial profile f(x) = F(dilation |x|) sampled at cell centers of [-half_width, half_width]^n,
    with its gradient taken analytically.
    """
    if profile not in PROFILES:
        raise SpecValidationError(f"Unknown profile {profile}; expected one of {', '.join(PROFILES)}")
    mesh, spacing = _cell_centers(points, half_width, n)
    outer = half_width - spacing
    if profile == "aubin-talenti":
        value, derivative = _aubin_talenti(n, p, scale or 0.6, outer)
    elif profile == "gaussian":
        value, derivative = _gaussian(scale or half_width / 6.0)
    else:
        value, derivative = _bump(scale or 0.8 * half_width)

    r = np.linalg.norm(mesh, axis=-1)
    values = value(dilation * r)
    radial = dilation * derivative(dilation * r)
    with np.errstate(invalid="ignore", divide="ignore"):
        gradient = np.where(r[..., None] > 0.0, radial[..., None] * mesh / r[..., None], 0.0)

    f = GridFunction(lower=np.full(n, -half_width), upper=np.full(n, half_width), spacing=spacing,
                     values=values, gradient=gradient, label=profile)
    if f.boundary_layer() > BOUNDARY_LAYER:
        module_logger.warning(f"Profile {profile} is not negligible on the box boundary: {f.boundary_layer():.3g}")
    return f


def from_raster(values, spacing, lower=None):
    """GridFunction from samples; gradient by central differences, one-sided on the boundary."""
    values = np.asarray(values, dtype=float)
    n = values.ndim
    if n < 3:
        raise SpecValidationError(f"Raster must be at least 3-dimensional, got {n}")
    lower = np.zeros(n) if lower is None else np.asarray(lower, dtype=float)
    upper = lower + spacing * (np.array(values.shape) - 1)
    gradient = np.stack(np.gradient(values, spacing, edge_order=1), axis=-1)
    f = GridFunction(lower=lower, upper=upper, spacing=float(spacing), values=values, gradient=gradient)
    if f.boundary_layer() > BOUNDARY_LAYER:
        module_logger.warning(f"Raster is not compactly supported in its box: boundary {f.boundary_layer():.3g}")
    return f


@dataclass(frozen=True)
class SobolevCheck:
    lhs: float
    rhs: float

    @property
    def ratio(self):
        return self.lhs / self.rhs

    @property
    def margin(self):
        return (self.lhs - self.rhs) / self.rhs


def gradient_measure(f, p, grid):
    """|grad f|^p dx pushed to grad f / |grad f| and binned onto the nearest grid node."""
    gradient = f.gradient.reshape(-1, f.dim)
    magnitude = np.linalg.norm(gradient, axis=1)
    moving = magnitude > 0.0
    if not np.any(moving):
        raise SpecValidationError("Function is constant; its gradient vanishes")
    directions = gradient[moving] / magnitude[moving, None]
    _, nearest = cKDTree(grid.nodes).query(directions)
    return np.bincount(nearest, weights=magnitude[moving] ** p * f.cell_volume, minlength=grid.size)


def lp_sobolev_check(f, measure, p, grid, block=512):
    """
    Both sides of the L_p inequality for a sampled function.

    lhs = (integral over u of (integral of h(Z_p^mu(u), grad f)^p dx)^{-n/p})^{-1/n}
    rhs = c_{n,p} mu(S)^{1/p} ||f||_{p*}
    """
    n = f.dim
    _check_p_range(n, p)
    if not np.any(f.values):
        raise SpecValidationError("Function is identically zero")
    binned = gradient_measure(f, p, grid)
    occupied = binned > 0.0
    nodes, masses = grid.nodes[occupied], binned[occupied]
    table = tabulate_kernel(measure, p, TABLE_POINTS)

    inner = np.empty(grid.size)
    for start in range(0, grid.size, block):
        inner[start:start + block] = table(grid.nodes[start:start + block] @ nodes.T) @ masses
    if np.any(inner <= 0.0):
        raise NumericFailure("Gradient measure is concentrated on a great subsphere")
    lhs = weighted_sum(inner ** (-n / p), grid.weights) ** (-1.0 / n)

    p_star = n * p / (n - p)
    rhs = c_np(n, p) * measure.total_mass ** (1.0 / p) * f.norm(p_star)
    module_logger.debug(f"L_p check {f.label} p={p}: lhs={lhs:.8g} rhs={rhs:.8g}")
    return SobolevCheck(lhs=lhs, rhs=rhs)


@dataclass(frozen=True)
class GromovComparison:
    avg_gromov_rhs: float
    thm3_rhs: float

    @property
    def gap(self):
        return self.thm3_rhs - self.avg_gromov_rhs


def gromov_compare(measure, grid, method="revolution"):
    """
    The two BV constants: from |Z^mu(e)| and from its mean width.

    :param method: "revolution" takes |Z^mu(e)| from its meridian section, "halfspace"
        from the outer grid polytope of zonoid_volume_estimate
    """
    n = measure.dim
    if n != 3:
        raise SpecValidationError("Gromov comparison is implemented for n = 3")
    if method == "revolution":
        zonoid_volume = zonoid_volume_revolution(measure)
    elif method == "halfspace":
        zonoid_volume = zonoid_volume_estimate(measure, grid)
    else:
        raise SpecValidationError(f"Unknown zonoid volume method {method}")
    factor = n ** ((n - 1.0) / n)
    return GromovComparison(avg_gromov_rhs=factor * (zonoid_volume / ball_volume(n)) ** (1.0 / n),
                            thm3_rhs=factor * zonoid_mean_width(measure) / 2.0)


def verify_theorem3(trials, seed, grid, measures, tolerance=1e-6, equality_tolerance=1e-6, hull_vertices=20):
    """BV inequality on characteristic functions of random hulls, one record per measure."""
    report = VerificationReport(theorem="thm3", seed=seed, grid_level=grid.level,
                                tolerances={"tolerance": tolerance, "equality_tolerance": equality_tolerance})
    generators = trial_generators(seed, trials)
    for index in range(trials):
        K = random_hull(generators[index], hull_vertices, grid.dim)
        for measure in measures:
            mu = normalize(measure, 0.5)
            lhs = bv_char_lhs(K, mu, grid)
            rhs = theorem3_rhs(mu, K.dim, char_norm(K))
            report.trials.append(make_record(index, "thm3", K, mu, 1.0, rhs, lhs, tolerance, equality_tolerance))
    module_logger.info(f"Checked BV inequality on <<{trials}>> bodies: {len(report.violations)} violations")
    return report
