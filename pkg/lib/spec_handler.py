"""
One-line body and measure specs used on the command line.

Bodies:   cube | cube:edge | simplex | ball:r | ellipsoid:a,b,c | box:l1,l2,l3 | hull:@file
Measures: discrete:m | equatorial:m | lebesgue:m | latitude:m:t | blend:m | custom:@file.json
"""
import json
import logging

from lib.bodies import ball, box, cube, ellipsoid, simplex
from lib.file_handler import load_polytope
from lib.helper_handler import SpecValidationError
from lib.zonal_measures import blend, discrete_poles, equatorial, from_samples, latitude, lebesgue, normalize

module_logger = logging.getLogger('isoval.spec')

MEASURE_KINDS = ("discrete", "discrete_poles", "equatorial", "lebesgue", "latitude", "blend", "custom")


def _numbers(text, spec):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise SpecValidationError(f"Expected comma separated numbers in {spec!r}")


def parse_body(spec, n=3):
    if not spec:
        raise SpecValidationError("Missing body spec")
    name, _, params = spec.strip().partition(":")
    name = name.lower()

    if name == "cube":
        return cube(_numbers(params, spec)[0] if params else 1.0, n)
    if name == "simplex":
        return simplex(n)
    if name == "ball":
        return ball(_numbers(params, spec)[0] if params else 1.0, n)
    if name == "ellipsoid":
        return ellipsoid(_numbers(params, spec))
    if name == "box":
        sides = _numbers(params, spec)
        return box([-0.5 * s for s in sides], [0.5 * s for s in sides])
    if name == "hull":
        if not params.startswith("@"):
            raise SpecValidationError(f"hull needs a file reference, e.g. hull:@points.json, got {spec!r}")
        return load_polytope(params[1:])
    raise SpecValidationError(f"Unknown body {name!r}")


def measure_from_dict(data, n=3):
    """Measure from {"kind": ..., "mass": m, "t": ..., "density_samples": [[t, g], ...]}."""
    kind = str(data.get("kind", "")).lower()
    mass = data.get("mass")
    if mass is None:
        raise SpecValidationError("Measure spec needs a mass")
    mass = float(mass)

    if kind in ("discrete", "discrete_poles"):
        return discrete_poles(mass, n)
    if kind == "equatorial":
        return equatorial(mass, n)
    if kind == "lebesgue":
        return lebesgue(mass, n)
    if kind == "latitude":
        return latitude(mass, float(data.get("t", 0.5)), n)
    if kind == "blend":
        return blend(lebesgue(0.5 * mass, n), latitude(0.5 * mass, float(data.get("t", 0.6)), n))
    if kind == "custom":
        samples = data.get("density_samples")
        if samples:
            return from_samples(samples, n, mass)
        parts = [measure_from_dict(part, n) for part in data.get("parts", [])]
        if not parts:
            raise SpecValidationError("custom measure needs density_samples or parts")
        return normalize(blend(*parts), mass)
    raise SpecValidationError(f"Unknown measure kind {kind!r}; expected one of {', '.join(MEASURE_KINDS)}")


def parse_measure(spec, n=3):
    if not spec:
        raise SpecValidationError("Missing measure spec")
    kind, _, rest = spec.strip().partition(":")
    kind = kind.lower()
    if kind == "custom":
        if not rest.startswith("@"):
            raise SpecValidationError(f"custom measures are read from JSON, e.g. custom:@mu.json, got {spec!r}")
        try:
            with open(rest[1:], "r") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise SpecValidationError(f"Cannot read measure file {rest[1:]}: {e}")
        return measure_from_dict(data, n)

    mass_text, _, param = rest.partition(":")
    try:
        mass = float(mass_text) if mass_text else 0.5
    except ValueError:
        raise SpecValidationError(f"Measure mass must be a number in {spec!r}")
    data = {"kind": kind, "mass": mass}
    if param:
        data["t"] = _numbers(param, spec)[0]
    module_logger.debug(f"Parsed measure {spec} as {data}")
    return measure_from_dict(data, n)
