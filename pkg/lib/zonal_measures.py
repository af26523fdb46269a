"""
Even zonal measures on S^{n-1} and the support functions of their L_p zonoids.

A measure is stored through its |u . e| profile only, e being the pole. It is a sum of

* atoms (t, m): mass m spread uniformly over the latitude set {v : |v . e| = t}; t = 1 is
  the pole pair, t = 0 the equator,
* a multiple of spherical Lebesgue measure,
* absolutely continuous parts g(|v . e|) dv, each scaled by a coefficient.

kernel(mu, p, s) returns h(Z_p^mu(w), v)^p for s = w . v.
"""
import functools
import logging
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.spatial import ConvexHull, HalfspaceIntersection
from scipy.special import gammaln, roots_legendre

from lib.helper_handler import SpecValidationError, NumericFailure, ball_volume, sphere_area

module_logger = logging.getLogger('isoval.zonal_measures')

KINDS = ("discrete_poles", "equatorial", "lebesgue", "custom")

CIRCLE_NODES = 64
LATITUDE_NODES = 96
INTERPOLATION_DEGREE = 48
CHUNK = 4096
DEGENERATE_RATIO = 1e-12
MERIDIAN_DIRECTIONS = 1 << 15


@functools.lru_cache(maxsize=None)
def _gauss(count):
    return roots_legendre(count)


def abs_moment(n, p):
    """Integral of |u . v|^p over v in S^{n-1}, for any unit u."""
    return 2.0 * math.exp(0.5 * (n - 1) * math.log(math.pi) + gammaln(0.5 * (p + 1)) - gammaln(0.5 * (n + p)))


def _circle_normalizer(n):
    # integral of sin^{n-3} over [0, pi]
    return math.exp(0.5 * math.log(math.pi) + gammaln(0.5 * (n - 2)) - gammaln(0.5 * (n - 1)))


def _closed_form_p1(a, b):
    absa = np.abs(a)
    out = absa.copy()
    mask = b > absa
    if np.any(mask):
        am, bm = a[mask], b[mask]
        phi0 = np.arccos(np.clip(-am / bm, -1.0, 1.0))
        out[mask] = (am * (2.0 * phi0 - math.pi) + 2.0 * np.sqrt(bm * bm - am * am)) / math.pi
    return out


def _quadrature_average(a, b, p, n):
    x, w = _gauss(CIRCLE_NODES)
    half = 0.5 * (x + 1.0)
    out = np.empty_like(a)
    norm = _circle_normalizer(n)
    for start in range(0, a.size, CHUNK):
        ac = a[start:start + CHUNK]
        bc = b[start:start + CHUNK]
        crossing = bc > np.abs(ac)
        ratio = np.divide(-ac, bc, out=np.zeros_like(ac), where=crossing)
        phi0 = np.where(crossing, np.arccos(np.clip(ratio, -1.0, 1.0)), 0.5 * math.pi)

        total = np.zeros_like(ac)
        for lo, width in ((np.zeros_like(phi0), phi0), (phi0, math.pi - phi0)):
            phi = lo[:, None] + width[:, None] * half[None, :]
            values = np.abs(ac[:, None] + bc[:, None] * np.cos(phi)) ** p
            if n > 3:
                values = values * np.sin(phi) ** (n - 3)
            total += 0.5 * width * (values @ w)
        out[start:start + CHUNK] = total / norm
    return out


def circle_average(a, b, p, n=3, method="auto"):
    """
    Average of |a + b cos(phi)|^p over phi in [0, pi] with weight sin^{n-3}(phi).

    This is the mean of |u . v|^p over the (n-2)-sphere of v at fixed heights, with
    a = s t and b = sqrt(1 - s^2) sqrt(1 - t^2).

    :param method: "auto" uses closed forms where available, "quadrature" always integrates
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    shape = a.shape
    a = a.reshape(-1).copy()
    b = np.maximum(b.reshape(-1), 0.0)
    if method == "auto" and p == 2:
        out = a * a + b * b / (n - 1)
    elif method == "auto" and p == 1 and n == 3:
        out = _closed_form_p1(a, b)
    else:
        out = _quadrature_average(a, b, p, n)
    return out.reshape(shape)


class DensityProfile:
    """
    Density g(|v . e|) with respect to spherical Lebesgue measure.

    Kernels are interpolated in the angle arccos(s) on [0, pi/2], one interpolant per p,
    and cached behind a lock so that a profile can be shared by worker threads.
    """

    def __init__(self, g, dim=3, label="custom"):
        self.g = g
        self.dim = dim
        self.label = label
        self._cache = {}
        self._lock = threading.Lock()
        self._mass = None

    def _values(self, t):
        values = np.asarray(self.g(np.abs(t)), dtype=float)
        values = np.broadcast_to(values, np.shape(t))
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise SpecValidationError(f"Density {self.label} must be finite and non-negative")
        return values

    def _theta_rule(self, lo, hi):
        x, w = _gauss(LATITUDE_NODES)
        theta = lo + (hi - lo) * 0.5 * (x + 1.0)
        return theta, 0.5 * (hi - lo) * w

    @property
    def mass(self):
        if self._mass is None:
            n = self.dim
            theta, w = self._theta_rule(0.0, 0.5 * math.pi)
            integrand = self._values(np.cos(theta)) * np.sin(theta) ** (n - 2)
            self._mass = 2.0 * sphere_area(n - 1) * float(integrand @ w)
        return self._mass

    def _direct_kernel(self, s, p):
        n = self.dim
        s = float(abs(s))
        c = math.sqrt(max(0.0, 1.0 - s * s))
        split = math.asin(min(s, 1.0))
        total = 0.0
        for lo, hi in ((0.0, split), (split, 0.5 * math.pi)):
            if hi - lo <= 0.0:
                continue
            theta, w = self._theta_rule(lo, hi)
            average = circle_average(s * np.cos(theta), c * np.sin(theta), p, n)
            integrand = self._values(np.cos(theta)) * np.sin(theta) ** (n - 2) * average
            total += float(integrand @ w)
        return 2.0 * sphere_area(n - 1) * total

    def interpolant(self, p):
        with self._lock:
            cached = self._cache.get(p)
            if cached is None:
                def angle_kernel(gamma):
                    return np.array([self._direct_kernel(math.cos(g), p) for g in np.atleast_1d(gamma)])

                cached = Chebyshev.interpolate(angle_kernel, INTERPOLATION_DEGREE, domain=[0.0, 0.5 * math.pi])
                self._cache[p] = cached
                module_logger.debug(f"Tabulated density kernel {self.label} for p={p}")
        return cached

    def kernel(self, s, p):
        gamma = np.arccos(np.clip(np.abs(np.asarray(s, dtype=float)), 0.0, 1.0))
        return self.interpolant(p)(gamma)

    def __repr__(self):
        return f"DensityProfile({self.label}, n={self.dim})"


@dataclass(frozen=True)
class ZonalMeasure:
    dim: int
    atoms: tuple = ()
    lebesgue: float = 0.0
    densities: tuple = field(default=(), compare=False)
    kind: str = "custom"

    @property
    def total_mass(self):
        return (math.fsum(m for _, m in self.atoms) + self.lebesgue
                + math.fsum(c * d.mass for c, d in self.densities))

    @property
    def is_discrete(self):
        return self.kind == "discrete_poles"

    def scaled(self, factor):
        if factor <= 0.0:
            raise SpecValidationError(f"Scale factor must be positive, got {factor}")
        return ZonalMeasure(dim=self.dim,
                            atoms=tuple((t, m * factor) for t, m in self.atoms),
                            lebesgue=self.lebesgue * factor,
                            densities=tuple((c * factor, d) for c, d in self.densities),
                            kind=self.kind)

    def describe(self):
        return {
            "kind": self.kind,
            "mass": self.total_mass,
            "atoms": [[t, m] for t, m in self.atoms],
            "lebesgue": self.lebesgue,
            "densities": [[c, d.label] for c, d in self.densities],
        }


def _check_mass(mass):
    if not mass > 0.0 or not math.isfinite(mass):
        raise SpecValidationError(f"Measure mass must be positive and finite, got {mass}")


def discrete_poles(mass, n=3):
    _check_mass(mass)
    return ZonalMeasure(dim=n, atoms=((1.0, float(mass)),), kind="discrete_poles")


def equatorial(mass, n=3):
    _check_mass(mass)
    return ZonalMeasure(dim=n, atoms=((0.0, float(mass)),), kind="equatorial")


def lebesgue(mass, n=3):
    _check_mass(mass)
    return ZonalMeasure(dim=n, lebesgue=float(mass), kind="lebesgue")


def latitude(mass, t, n=3):
    """Mass spread uniformly over the two latitude spheres at heights +t and -t."""
    _check_mass(mass)
    if not 0.0 <= t <= 1.0:
        raise SpecValidationError(f"Latitude height must lie in [0, 1], got {t}")
    if t == 1.0:
        return discrete_poles(mass, n)
    if t == 0.0:
        return equatorial(mass, n)
    return ZonalMeasure(dim=n, atoms=((float(t), float(mass)),), kind="custom")


def from_density(g, n=3, mass=None, label="custom"):
    """
    Absolutely continuous zonal measure g(|v . e|) dv.

    :param g: vectorized non-negative function on [0, 1]
    :param mass: optional target mass; when omitted the mass is the integral of g
    """
    profile = DensityProfile(g, dim=n, label=label)
    own_mass = profile.mass
    if not own_mass > 0.0:
        raise SpecValidationError("Density is identically zero")
    measure = ZonalMeasure(dim=n, densities=((1.0, profile),), kind="custom")
    if mass is not None:
        measure = normalize(measure, mass)
    return measure


def from_samples(samples, n=3, mass=None):
    """Density from [[t, g], ...] samples, linearly interpolated in t."""
    table = np.asarray(samples, dtype=float)
    if table.ndim != 2 or table.shape[1] != 2 or table.shape[0] < 2:
        raise SpecValidationError("density_samples must be a list of [t, g] pairs")
    order = np.argsort(table[:, 0])
    ts, gs = table[order, 0], table[order, 1]
    if np.any(gs < 0.0) or ts[0] < 0.0 or ts[-1] > 1.0:
        raise SpecValidationError("density_samples need t in [0, 1] and g >= 0")
    return from_density(lambda t: np.interp(t, ts, gs), n=n, mass=mass, label="samples")


def blend(*measures):
    """Sum of measures of the same dimension."""
    if not measures:
        raise SpecValidationError("blend needs at least one measure")
    dims = {m.dim for m in measures}
    if len(dims) != 1:
        raise SpecValidationError(f"Cannot blend measures of dimensions {sorted(dims)}")
    atoms = {}
    for m in measures:
        for t, mass in m.atoms:
            atoms[t] = atoms.get(t, 0.0) + mass
    kinds = {m.kind for m in measures}
    kind = kinds.pop() if len(kinds) == 1 else "custom"
    return ZonalMeasure(dim=dims.pop(),
                        atoms=tuple(sorted(atoms.items(), reverse=True)),
                        lebesgue=math.fsum(m.lebesgue for m in measures),
                        densities=tuple(d for m in measures for d in m.densities),
                        kind=kind)


def normalize(measure, target_mass):
    _check_mass(target_mass)
    return measure.scaled(target_mass / measure.total_mass)


def kernel(measure, p, s, method="auto"):
    """
    h(Z_p^mu(w), v)^p as a function of s = w . v.

    :param s: scalar or array in [-1, 1]
    :param method: "auto" or "quadrature"; the latter forces the p-generic atom path
    """
    if p < 1.0:
        raise SpecValidationError(f"p must be >= 1, got {p}")
    s = np.clip(np.asarray(s, dtype=float), -1.0, 1.0)
    n = measure.dim
    c = np.sqrt(np.maximum(0.0, 1.0 - s * s))
    out = np.zeros_like(s)
    for t, mass in measure.atoms:
        out = out + mass * circle_average(s * t, c * math.sqrt(max(0.0, 1.0 - t * t)), p, n, method)
    if measure.lebesgue:
        out = out + measure.lebesgue * abs_moment(n, p) / sphere_area(n)
    for coef, profile in measure.densities:
        out = out + coef * profile.kernel(s, p)
    if not np.all(np.isfinite(out)):
        raise NumericFailure("Zonal kernel produced non-finite values")
    return out


def kernel_p1(measure, s):
    return kernel(measure, 1.0, s)


def zonoid_mean_width(measure):
    n = measure.dim
    return 4.0 * ball_volume(n - 1) * measure.total_mass / (n * ball_volume(n))


def is_degenerate_zonoid(measure):
    """True when Z^mu(e) is flat: a segment (no width off the pole) or a disc (none along it)."""
    scale = measure.total_mass
    ends = kernel_p1(measure, np.array([0.0, 1.0]))
    return bool(np.min(ends) <= DEGENERATE_RATIO * scale)


def zonoid_volume_estimate(measure, grid):
    """
    Volume of the intersection of the half-spaces x . u <= h(Z^mu(e), u) over grid
    directions; an outer approximation of |Z^mu(e)|.
    """
    if measure.dim != 3 or grid.dim != 3:
        raise SpecValidationError("Zonoid volume estimate is implemented for n = 3")
    if is_degenerate_zonoid(measure):
        return 0.0
    h = kernel_p1(measure, grid.polar)
    halfspaces = np.hstack([grid.nodes, -h[:, None]])
    intersection = HalfspaceIntersection(halfspaces, np.zeros(3))
    volume = ConvexHull(intersection.intersections).volume
    module_logger.debug(f"Zonoid volume estimate {volume:.6g} from {grid.size} half-spaces")
    return volume


def _clip_to_right_half(polygon):
    """Part of a convex polygon, given counterclockwise, with first coordinate >= 0."""
    clipped = []
    for a, b in zip(polygon, np.roll(polygon, -1, axis=0)):
        if a[0] >= 0.0:
            clipped.append(a)
        if (a[0] >= 0.0) != (b[0] >= 0.0):
            clipped.append(a + a[0] / (a[0] - b[0]) * (b - a))
    return np.array(clipped)


def zonoid_volume_revolution(measure, directions=MERIDIAN_DIRECTIONS):
    """
    |Z^mu(e)| from its meridian section.

    Z^mu(e) is a body of revolution about e, so its section by a plane through e is the
    planar convex set with support function k(cos gamma) at angle gamma from e. The section
    is cut out by `directions` half-planes and revolved about the axis (Pappus).
    """
    if measure.dim != 3:
        raise SpecValidationError("Zonoid volume is implemented for n = 3")
    if is_degenerate_zonoid(measure):
        return 0.0
    angles = 2.0 * math.pi * np.arange(directions) / directions
    support_values = kernel_p1(measure, np.cos(angles))
    halfplanes = np.stack([np.sin(angles), np.cos(angles), -support_values], axis=1)
    section = HalfspaceIntersection(halfplanes, np.zeros(2)).intersections
    section = section[ConvexHull(section).vertices]
    half = _clip_to_right_half(section)
    x, y = half[:, 0], half[:, 1]
    x_next, y_next = np.roll(x, -1), np.roll(y, -1)
    moment = math.fsum(((x + x_next) * (x * y_next - x_next * y)).tolist()) / 6.0
    volume = 2.0 * math.pi * abs(moment)
    module_logger.debug(f"Zonoid volume {volume:.10g} from a {section.shape[0]}-gon meridian section")
    return volume


@dataclass(frozen=True)
class KernelTable:
    """Kernel sampled on a uniform grid in the angle arccos(s), linearly interpolated."""
    angles: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    p: float = 1.0

    def __call__(self, s):
        angle = np.arccos(np.clip(np.asarray(s, dtype=float), -1.0, 1.0))
        return np.interp(angle, self.angles, self.values)


def tabulate_kernel(measure, p, points=4097):
    angles = np.linspace(0.0, math.pi, points)
    return KernelTable(angles=angles, values=kernel(measure, p, np.cos(angles)), p=p)
