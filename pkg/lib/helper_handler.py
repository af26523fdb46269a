import math

import numpy as np
from scipy.special import gammaln


class SpecValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class NumericFailure(ArithmeticError):
    """Raised when a computation produces non-finite or out-of-domain values."""


def ball_volume(k):
    """omega_k, the volume of the Euclidean unit ball in R^k."""
    return math.exp(0.5 * k * math.log(math.pi) - gammaln(1.0 + 0.5 * k))


def sphere_area(n):
    """Surface measure of S^{n-1}, that is n * omega_n."""
    return n * ball_volume(n)


def weighted_sum(values, weights):
    """
    Order independent sum of values * weights.

    :param values: 1D array of finite values
    :param weights: 1D array of weights with the same length
    :return: float
    """
    products = np.asarray(values, dtype=float) * np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(products)):
        raise NumericFailure("Non-finite values in quadrature sum")
    return math.fsum(products.tolist())


def unit_rows(vectors):
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0.0):
        raise SpecValidationError("Zero vector cannot be normalized to a direction")
    return vectors / norms[:, None]


def trial_generators(seed, count):
    """Independent, reproducible generators, one per trial index."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]


def random_special_linear(rng, n, spread=0.6):
    """Random matrix with determinant 1 (SL(n)), moderately conditioned."""
    while True:
        matrix = np.eye(n) + spread * rng.standard_normal((n, n))
        det = np.linalg.det(matrix)
        if abs(det) > 0.05:
            break
    if det < 0:
        matrix[:, 0] = -matrix[:, 0]
        det = -det
    return matrix / det ** (1.0 / n)


def to_jsonable(obj):
    """Recursively converts numpy scalars/arrays into JSON friendly python values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [to_jsonable(i) for i in obj]
    elif isinstance(obj, np.ndarray):
        return [to_jsonable(i) for i in obj.tolist()]
    elif isinstance(obj, (np.floating,)):
        return float(obj)
    elif isinstance(obj, (np.integer,)):
        return int(obj)
    elif isinstance(obj, np.bool_):
        return bool(obj)
    else:
        return obj
