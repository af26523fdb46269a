"""
Volume products, the Petty-type inequality checks and the searches for their maximizers.

Checks produce TrialRecord entries; a failed inequality is data in the report, never an
exception. The margin of a check value <= bound is (bound - value) / bound.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import minimize

from lib.bodies import (Polytope, ball, cube, ellipsoid, linear_image, perimeter, polar_volume,
                        polytope_from_vertices, volume, zonotope_polar_volume)
from lib.helper_handler import SpecValidationError, ball_volume, random_special_linear, trial_generators
from lib.report_handler import SCHEMA
from lib.sphere_quadrature import make_grid, random_directions, random_rotation
from lib.valuations import a_np, lemma41_check, phi_mu, phi_mu_p, pi, pi_p
from lib.zonal_measures import blend, discrete_poles, equatorial, latitude, lebesgue, normalize

module_logger = logging.getLogger('isoval.inequalities')

TAGS = ("thm1", "thm2", "thm51", "thm52", "lemma41", "affine", "thm3")
FUZZ_CHECKS = ("thm1", "thm2", "thm51", "thm52")
MASS_TOLERANCE = 1e-12
STRICT_DROP = 1e-3


@dataclass
class TrialRecord:
    index: int
    check: str
    body: dict
    mu: dict
    p: float
    lhs: float
    bound: float
    margin: float
    passed: bool
    equality: bool = False


@dataclass
class VerificationReport:
    theorem: str
    seed: int
    grid_level: int
    tolerances: dict
    trials: list = field(default_factory=list)

    @property
    def violations(self):
        return [t for t in self.trials if not t.passed]

    def summary(self):
        margins = [t.margin for t in self.trials]
        equality = [abs(t.margin) for t in self.trials if t.equality]
        return {
            "trials": len(self.trials),
            "violations": len(self.violations),
            "min_margin": min(margins) if margins else None,
            "max_equality_residual": max(equality) if equality else None,
            "equality_cases": len(equality),
        }

    def to_dict(self):
        return {
            "schema": SCHEMA,
            "theorem": self.theorem,
            "seed": self.seed,
            "grid": self.grid_level,
            "tolerances": self.tolerances,
            "trials": [asdict(t) for t in self.trials],
            "summary": self.summary(),
        }


def describe_body(K):
    return K.describe()


def _margin(value, bound):
    return (bound - value) / bound


def make_record(index, check, K, measure, p, value, bound, tolerance, equality_tolerance):
    margin = _margin(value, bound)
    return TrialRecord(index=index, check=check, body=describe_body(K), mu=measure.describe() if measure else {},
                       p=p, lhs=value, bound=bound, margin=margin, passed=margin >= -tolerance,
                       equality=abs(margin) <= equality_tolerance)


def volume_product(K, measure, p, grid):
    """|Phi_p^{mu,o} K|^p |K|^{n-p}; for p = 1 this is |Phi^{mu,o} K| |K|^{n-1}."""
    n = K.dim
    return polar_volume(phi_mu_p(K, measure, p, grid)) ** p * volume(K) ** (n - p)


def petty_bound(n, p):
    if n < 3:
        raise SpecValidationError(f"n must be >= 3, got {n}")
    if p == 1.0:
        return (ball_volume(n) / ball_volume(n - 1)) ** n
    return ball_volume(n) ** n


def petty_product_zonotope(K):
    """|Pi^o K| |K|^{n-1} for a 3-dimensional polytope, from the exact zonotope polar."""
    if not isinstance(K, Polytope) or K.dim != 3:
        raise SpecValidationError("Exact Petty products are computed for 3-dimensional polytopes")
    generators = 0.5 * K.areas[:, None] * K.normals
    return zonotope_polar_volume(generators) * K.volume ** 2


@dataclass(frozen=True)
class Sandwich:
    left: float
    mid: float
    right: float

    @property
    def left_ok(self):
        return self.left <= self.mid

    @property
    def right_ok(self):
        return self.mid <= self.right


def _require_mass(measure, target):
    if abs(measure.total_mass - target) > MASS_TOLERANCE * target:
        raise SpecValidationError(f"Measure must have mass {target}, got {measure.total_mass}")


def theorem2_left(K):
    n = K.dim
    return n ** n * ball_volume(n) ** (n + 1) / ball_volume(n - 1) ** n * perimeter(K) ** (-n)


def theorem2_sandwich(K, measure, grid):
    """(left, mid, right) = (isoperimetric lower bound, |Phi^{mu,o} K|, |Pi^o K|) for mu of mass 1/2."""
    _require_mass(measure, 0.5)
    return Sandwich(left=theorem2_left(K),
                    mid=polar_volume(phi_mu(K, measure, grid)),
                    right=polar_volume(pi(K, grid)))


def affine_probe(K, measure, p, A, grid):
    A = np.asarray(A, dtype=float)
    if abs(np.linalg.det(A) - 1.0) > 1e-9:
        raise SpecValidationError(f"Affine probe needs det A = 1, got {np.linalg.det(A)}")
    before = volume_product(K, measure, p, grid)
    if np.array_equal(A, np.eye(K.dim)):
        return before, before
    return before, volume_product(linear_image(K, A), measure, p, grid)


def standard_measures(mass=0.5, n=3):
    """The measure set exercised by the fuzzer: discrete, equatorial, Lebesgue and a blend."""
    return [
        discrete_poles(mass, n),
        equatorial(mass, n),
        lebesgue(mass, n),
        blend(lebesgue(0.5 * mass, n), latitude(0.5 * mass, 0.6, n)),
    ]


def random_hull(rng, vertices=20, n=3):
    """Hull of uniform points on the sphere, recentered."""
    return polytope_from_vertices(random_directions(rng, vertices, n), label=f"random-{vertices}")


def _fuzz_trial(index, rng, measures, ps, body_generator, grid, checks, tolerance, equality_tolerance):
    K = body_generator(rng)
    n = K.dim
    records = []
    for measure in measures:
        for p in ps:
            if p == 1.0:
                mu = normalize(measure, 0.5)
                if "thm1" in checks:
                    records.append(make_record(index, "thm1", K, mu, p, volume_product(K, mu, p, grid),
                                               petty_bound(n, p), tolerance, equality_tolerance))
                if "thm2" in checks:
                    sandwich = theorem2_sandwich(K, mu, grid)
                    records.append(make_record(index, "thm2-left", K, mu, p, sandwich.left, sandwich.mid,
                                               tolerance, equality_tolerance))
                    records.append(make_record(index, "thm2-right", K, mu, p, sandwich.mid, sandwich.right,
                                               tolerance, equality_tolerance))
                continue

            mu = normalize(measure, a_np(n, p))
            phi_polar = polar_volume(phi_mu_p(K, mu, p, grid))
            if "thm51" in checks:
                records.append(make_record(index, "thm51", K, mu, p, phi_polar, polar_volume(pi_p(K, p, grid)),
                                           tolerance, equality_tolerance))
            if "thm52" in checks:
                records.append(make_record(index, "thm52", K, mu, p, phi_polar ** p * volume(K) ** (n - p),
                                           petty_bound(n, p), tolerance, equality_tolerance))
    return index, records


def fuzz(trials, seed, measures, ps, body_generator=None, grid=None, checks=FUZZ_CHECKS, tolerance=1e-6,
         equality_tolerance=1e-6, hull_vertices=20, jobs=1, theorem="fuzz"):
    """
    Random-body verification of the Petty-type inequalities.

    Each trial draws its body from its own generator spawned from `seed`, so the report
    does not depend on `jobs`.
    """
    grid = grid if grid is not None else make_grid(3)
    body_generator = body_generator or (lambda rng: random_hull(rng, hull_vertices, grid.dim))
    report = VerificationReport(theorem=theorem, seed=seed, grid_level=grid.level,
                                tolerances={"tolerance": tolerance, "equality_tolerance": equality_tolerance})
    if not measures or not ps or trials <= 0:
        return report

    generators = trial_generators(seed, trials)

    def run(index):
        return _fuzz_trial(index, generators[index], measures, ps, body_generator, grid, checks, tolerance,
                           equality_tolerance)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            results = list(executor.map(run, range(trials)))
    else:
        results = [run(i) for i in range(trials)]

    for _, records in sorted(results, key=lambda r: r[0]):
        report.trials.extend(records)
    module_logger.info(f"Fuzzed <<{trials}>> bodies: {len(report.violations)} violations")
    return report


def lemma41_samples(rng, n=3):
    """
    A (body, measure, p, u) sample for the rotation-average identity; atom measures only.

    Balls are paired with pole and equator atoms only, whose kernel kinks sit on grid
    node boundaries.
    """
    if rng.integers(3) == 0:
        K = ball(1.0, n)
        kind = rng.integers(2)
    else:
        K = random_hull(rng, int(rng.integers(8, 21)), n)
        kind = rng.integers(4)
    mass = float(rng.uniform(0.2, 1.0))
    if kind == 0:
        measure = discrete_poles(mass, n)
    elif kind == 1:
        measure = equatorial(mass, n)
    elif kind == 2:
        measure = latitude(mass, float(rng.uniform(0.1, 0.9)), n)
    else:
        measure = blend(equatorial(0.5 * mass, n), latitude(0.5 * mass, float(rng.uniform(0.1, 0.9)), n))
    p = float(rng.choice([1.0, 1.5, 2.0]))
    u = random_directions(rng, 1, n)[0]
    return K, measure, p, u


def verify_lemma41(trials, seed, grid, tolerance=1e-6, jobs=1):
    report = VerificationReport(theorem="lemma41", seed=seed, grid_level=grid.level,
                                tolerances={"tolerance": tolerance})
    generators = trial_generators(seed, trials)

    def run(index):
        K, measure, p, u = lemma41_samples(generators[index], grid.dim)
        lhs, rhs = lemma41_check(K, measure, p, u, grid)
        residual = abs(lhs - rhs) / abs(lhs)
        record = TrialRecord(index=index, check="lemma41", body=describe_body(K), mu=measure.describe(), p=p,
                             lhs=lhs, bound=rhs, margin=-residual, passed=residual <= tolerance,
                             equality=True)
        return index, record

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            results = list(executor.map(run, range(trials)))
    else:
        results = [run(i) for i in range(trials)]
    report.trials.extend(r for _, r in sorted(results, key=lambda r: r[0]))
    return report


def verify_affine(trials, seed, grid, tolerance=1e-5, K=None):
    """
    Discrete mu: invariance under SL(n), cross-checked against the exact zonotope product
    when K is a 3-dimensional polytope. Equatorial mu: a strict drop away from the ball.
    """
    report = VerificationReport(theorem="affine", seed=seed, grid_level=grid.level,
                                tolerances={"tolerance": tolerance, "strict_drop": STRICT_DROP})
    n = grid.dim
    K = K if K is not None else cube(1.0, n)
    discrete = discrete_poles(0.5, n)
    generators = trial_generators(seed, trials + 1)
    exact = petty_product_zonotope(K) if isinstance(K, Polytope) and n == 3 else None

    for index in range(trials):
        A = random_special_linear(generators[index], n)
        before, after = affine_probe(K, discrete, 1.0, A, grid)
        drift = abs(before - after) / before
        report.trials.append(TrialRecord(index=index, check="affine-invariance", body=describe_body(K),
                                          mu=discrete.describe(), p=1.0, lhs=after, bound=before,
                                          margin=-drift, passed=drift <= tolerance, equality=True))
        if exact is not None:
            exact_after = petty_product_zonotope(linear_image(K, A))
            exact_drift = abs(exact - exact_after) / exact
            report.trials.append(TrialRecord(index=index, check="affine-exact", body=describe_body(K),
                                              mu=discrete.describe(), p=1.0, lhs=exact_after, bound=exact,
                                              margin=-exact_drift, passed=exact_drift <= tolerance, equality=True))

    rotation = random_rotation(generators[trials], n)
    stretch = np.diag([2.0, 1.0, 0.5] + [1.0] * (n - 3)) @ rotation
    mu = equatorial(0.5, n)
    before, after = affine_probe(ball(1.0, n), mu, 1.0, stretch, grid)
    drop = (before - after) / before
    report.trials.append(TrialRecord(index=trials, check="affine-strict-drop", body={"type": "ball", "radius": 1.0},
                                     mu=mu.describe(), p=1.0, lhs=after, bound=before, margin=drop,
                                     passed=drop >= STRICT_DROP))
    return report


@dataclass
class ExtremizeStep:
    step: int
    semiaxes: list
    product: float


def _ellipsoid_from_log(x, log_volume):
    logs = np.append(x, log_volume - np.sum(x))
    return ellipsoid(np.exp(logs))


def extremize(measure, p, steps, seed, grid, start=(2.0, 1.0, 0.5), xatol=1e-6, fatol=1e-13):
    """
    Nelder-Mead ascent of the volume product over ellipsoids of fixed volume.

    The free variables are the logarithms of the first n-1 semiaxes. The trajectory
    records the best product reached after each iteration, so it never decreases.
    """
    start = np.asarray(start, dtype=float)
    if np.any(start <= 0.0):
        raise SpecValidationError(f"Start semiaxes must be positive, got {start}")
    log_volume = float(np.sum(np.log(start)))
    x0 = np.log(start[:-1])

    rng = np.random.default_rng(seed)
    simplex = [x0] + [x0 + 0.1 * (np.eye(x0.size)[i] + 0.05 * rng.standard_normal(x0.size))
                      for i in range(x0.size)]

    def objective(x):
        return -volume_product(_ellipsoid_from_log(x, log_volume), measure, p, grid)

    best = {"x": x0, "value": objective(x0)}
    trajectory = [ExtremizeStep(0, _ellipsoid_from_log(x0, log_volume).semiaxes.tolist(), -best["value"])]

    def callback(intermediate_result):
        if intermediate_result.fun < best["value"]:
            best.update(x=np.array(intermediate_result.x), value=intermediate_result.fun)
        trajectory.append(ExtremizeStep(len(trajectory), _ellipsoid_from_log(best["x"], log_volume).semiaxes.tolist(),
                                        -best["value"]))

    result = minimize(objective, x0, method="Nelder-Mead", callback=callback,
                      options={"maxiter": steps, "xatol": xatol, "fatol": fatol, "initial_simplex": np.array(simplex)})
    if result.fun < best["value"]:
        best.update(x=result.x, value=result.fun)
        trajectory.append(ExtremizeStep(len(trajectory), _ellipsoid_from_log(best["x"], log_volume).semiaxes.tolist(),
                                        -best["value"]))
    module_logger.info(f"Extremize finished after <<{result.nit}>> iterations, product {-best['value']:.10g}")
    return trajectory


def extremize_polytope(measure, p, steps, seed, grid, start=None, perturbation=0.05, vertices=20):
    """
    Random vertex-perturbation ascent over polytopes: a perturbed hull replaces the
    current one only if its volume product is larger.
    """
    rng = np.random.default_rng(seed)
    K = start if start is not None else random_hull(rng, vertices, grid.dim)
    if not isinstance(K, Polytope):
        raise SpecValidationError("Polytope search needs a polytope start")
    current = volume_product(K, measure, p, grid)
    trajectory = [ExtremizeStep(0, [], current)]
    for step in range(1, steps + 1):
        candidate_points = K.vertices + perturbation * rng.standard_normal(K.vertices.shape)
        try:
            candidate = polytope_from_vertices(candidate_points, label=K.label)
        except SpecValidationError:
            trajectory.append(ExtremizeStep(step, [], current))
            continue
        value = volume_product(candidate, measure, p, grid)
        if value > current:
            K, current = candidate, value
        trajectory.append(ExtremizeStep(step, [], current))
    module_logger.info(f"Polytope search finished: {K.vertices.shape[0]} vertices, product {current:.10g}")
    return trajectory, K


def single_body_report(tag, K, measure, p, grid, tolerance=1e-6, equality_tolerance=1e-6, seed=0):
    """Checks of one tag on a given body and measure, normalizing mu as the theorem requires."""
    n = K.dim
    report = VerificationReport(theorem=tag, seed=seed, grid_level=grid.level,
                                tolerances={"tolerance": tolerance, "equality_tolerance": equality_tolerance})
    if tag not in FUZZ_CHECKS:
        raise SpecValidationError(f"Tag {tag} does not take a single body")
    if tag in ("thm1", "thm2"):
        ps = [1.0]
    else:
        ps = [p] if p > 1.0 else [1.5, 2.0]
    _, records = _fuzz_trial(0, None, [measure], ps, lambda rng: K, grid, (tag,), tolerance, equality_tolerance)
    report.trials.extend(records)
    return report


def run_verification(tag, trials, seed, grid, measures=None, ps=None, tolerance=1e-6, equality_tolerance=1e-6,
                     lemma_tolerance=1e-6, affine_tolerance=1e-5, hull_vertices=20, jobs=1, K=None, measure=None,
                     p=1.0):
    """Dispatches a verification tag to its runner."""
    if tag not in TAGS:
        raise SpecValidationError(f"Unknown verification tag {tag}; expected one of {', '.join(TAGS)}")
    if tag == "lemma41":
        return verify_lemma41(trials, seed, grid, lemma_tolerance, jobs)
    if tag == "affine":
        return verify_affine(trials, seed, grid, affine_tolerance, K)
    if tag == "thm3":
        from lib.sobolev import verify_theorem3
        return verify_theorem3(trials, seed, grid, measures or standard_measures(0.5, grid.dim), tolerance,
                               equality_tolerance, hull_vertices)
    if K is not None and measure is not None:
        return single_body_report(tag, K, measure, p, grid, tolerance, equality_tolerance, seed)

    if ps is None:
        ps = [1.0] if tag in ("thm1", "thm2") else [1.5, 2.0]
    return fuzz(trials, seed, measures if measures is not None else standard_measures(0.5, grid.dim), ps,
                grid=grid, checks=(tag,), tolerance=tolerance, equality_tolerance=equality_tolerance,
                hull_vertices=hull_vertices, jobs=jobs, theorem=tag)
