import logging
from dataclasses import dataclass, field
from io import StringIO

from lib.bodies import Ellipsoid, Polytope, mean_width, perimeter, polar_volume, volume
from lib.file_handler import read_raster, write_grid_csv
from lib.helper_handler import SpecValidationError, NumericFailure
from lib.inequalities import (FUZZ_CHECKS, TAGS, extremize, extremize_polytope, petty_bound, run_verification,
                              single_body_report)
from lib.report_handler import SCHEMA, emit, render_json, render_rows, render_trials_csv
from lib.sobolev import (bv_char_lhs, c_np, char_norm, classical_bv_constant, from_raster, gromov_compare,
                         lp_sobolev_check, projection_average_bv_constant, projection_average_lp_constant, synthesize,
                         theorem3_rhs, tilde_c_np)
from lib.spec_handler import parse_body, parse_measure
from lib.sphere_quadrature import make_grid
from lib.valuations import ValuationParams, a_np, phi_mu, phi_mu_p, pi, pi_p
from lib.zonal_measures import normalize

module_logger = logging.getLogger('isoval.command_processor')

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_SPEC = 2
EXIT_NUMERIC = 3

SOBOLEV_MODES = ("char", "grid", "gromov", "constants")
DEFAULT_VERIFY_MEASURE = "discrete:0.5"


@dataclass
class RunConfig:
    command: str
    body: str = None
    measure: str = None
    p: float = None
    grid_level: int = 16
    seed: int = 42
    trials: int = 200
    jobs: int = 1
    out: str = None
    fmt: str = "json"
    options: dict = field(default_factory=dict)


def build_run_config(args, config_data):
    """Command-line flags over configuration values."""
    verification = config_data.get("verification", {})
    fmt = args.format or ("csv" if args.command == "extremize" else config_data.get("output", {}).get("format", "json"))
    options = {key: getattr(args, key) for key in ("tag", "mode", "profile", "raster", "start", "steps", "points")
               if getattr(args, key, None) is not None}
    return RunConfig(command=args.command,
                     body=args.body,
                     measure=args.measure,
                     p=float(args.p) if args.p is not None else None,
                     grid_level=args.grid_level or config_data.get("grid", {}).get("level", 16),
                     seed=args.seed if args.seed is not None else verification.get("seed", 42),
                     trials=args.trials if args.trials is not None else verification.get("trials", 200),
                     jobs=args.jobs or verification.get("jobs", 1),
                     out=args.out,
                     fmt=fmt,
                     options=options)


def _exponent(run, default):
    return run.p if run.p is not None else default


def _operator_entry(h, K, q):
    n = K.dim
    polar = polar_volume(h)
    entry = h.stats()
    entry.update({"p": q, "polar_volume": polar, "mean_width": mean_width(h),
                  "volume_product": polar ** q * volume(K) ** (n - q)})
    return entry


def cmd_compute(run, config_data):
    K = parse_body(run.body or "cube")
    params = ValuationParams(parse_measure(run.measure or "discrete:0.5", K.dim), _exponent(run, 1.0))
    measure, p = params.measure, params.p
    grid = make_grid(K.dim, run.grid_level)

    fields = {
        "pi": (pi(K, grid), 1.0),
        "pi_p": (pi_p(K, p, grid), p),
        "phi_mu": (phi_mu(K, measure, grid), 1.0),
        "phi_mu_p": (phi_mu_p(K, measure, p, grid), p),
    }

    if run.fmt == "csv":
        stream = StringIO()
        write_grid_csv(stream, grid, {f"h_{name}": h.values for name, (h, _) in fields.items()})
        emit(stream.getvalue(), run.out)
        return EXIT_OK

    report = {
        "schema": SCHEMA,
        "command": "compute",
        "seed": run.seed,
        "grid": grid.level,
        "body": K.describe(),
        **params.describe(),
        "volume": volume(K),
        "perimeter": perimeter(K, grid),
        "operators": {name: _operator_entry(h, K, q) for name, (h, q) in fields.items()},
    }
    emit(render_json(report), run.out)
    return EXIT_OK


def cmd_verify(run, config_data):
    tag = run.options.get("tag")
    if tag not in TAGS:
        raise SpecValidationError(f"Unknown verification tag {tag!r}; expected one of {', '.join(TAGS)}")
    verification = config_data.get("verification", {})
    grid = make_grid(3, run.grid_level)
    tolerance = verification.get("tolerance", 1e-6)
    equality_tolerance = verification.get("equality_tolerance", 1e-6)

    if run.body and tag in FUZZ_CHECKS:
        K = parse_body(run.body)
        measure = parse_measure(run.measure or DEFAULT_VERIFY_MEASURE, K.dim)
        report = single_body_report(tag, K, measure, _exponent(run, 1.0), grid, tolerance,
                                    equality_tolerance, run.seed)
    else:
        measures = [parse_measure(run.measure)] if run.measure else None
        report = run_verification(tag, run.trials, run.seed, grid, measures=measures, tolerance=tolerance,
                                  equality_tolerance=equality_tolerance,
                                  lemma_tolerance=verification.get("lemma_tolerance", 1e-6),
                                  affine_tolerance=verification.get("affine_tolerance", 1e-5),
                                  hull_vertices=verification.get("hull_vertices", 20), jobs=run.jobs,
                                  K=parse_body(run.body) if run.body else None)

    data = report.to_dict()
    emit(render_trials_csv(data) if run.fmt == "csv" else render_json(data), run.out)
    summary = report.summary()
    if summary["equality_cases"] and tag in FUZZ_CHECKS:
        module_logger.info(f"{summary['equality_cases']} equality case(s), max residual "
                           f"{summary['max_equality_residual']:.3g}")
    if report.violations:
        module_logger.warning(f"<<{len(report.violations)}>> violation(s) in {tag}")
        return EXIT_VIOLATION
    return EXIT_OK


def _sobolev_char(run, config_data):
    K = parse_body(run.body or "ball:1")
    measure = normalize(parse_measure(run.measure or "discrete:0.5", K.dim), 1.0)
    grid = make_grid(K.dim, run.grid_level)
    lhs = bv_char_lhs(K, measure, grid)
    rhs = theorem3_rhs(measure, K.dim, char_norm(K))
    tolerance = config_data.get("verification", {}).get("tolerance", 1e-6)
    report = {"mode": "char", "body": K.describe(), "mu": measure.describe(), "lhs": lhs,
              "lhs_polar": bv_char_lhs(K, measure, grid, path="polar"), "rhs": rhs, "margin": (lhs - rhs) / rhs}
    return report, report["margin"] >= -tolerance


def _sobolev_grid(run, config_data):
    settings = config_data.get("sobolev", {})
    p = _exponent(run, 2.0)
    measure = parse_measure(run.measure or "lebesgue:1")
    grid = make_grid(3, config_data.get("grid", {}).get("sobolev_level", 12))
    if run.options.get("raster"):
        values, spacing, lower = read_raster(run.options["raster"])
        f = from_raster(values, spacing, lower)
    else:
        profile = run.options.get("profile", "aubin-talenti")
        f = synthesize(profile, p, n=3, points=run.options.get("points", settings.get("points", 96)),
                       half_width=settings.get("half_width", 24.0),
                       scale=settings.get("profile_scale", 0.6) if profile == "aubin-talenti" else None)
    check = lp_sobolev_check(f, measure, p, grid)
    report = {"mode": "grid", "function": f.label, "mu": measure.describe(), "p": p, "lhs": check.lhs,
              "rhs": check.rhs, "ratio": check.ratio, "margin": check.margin}
    return report, check.margin >= -settings.get("tolerance", 0.05)


def _sobolev_gromov(run, config_data):
    measure = parse_measure(run.measure or "lebesgue:0.5")
    comparison = gromov_compare(measure, make_grid(3, run.grid_level))
    report = {"mode": "gromov", "mu": measure.describe(), "avg_gromov_rhs": comparison.avg_gromov_rhs,
              "thm3_rhs": comparison.thm3_rhs, "gap": comparison.gap}
    tolerance = config_data.get("verification", {}).get("tolerance", 1e-6)
    return report, comparison.gap >= -tolerance * comparison.thm3_rhs


def _sobolev_constants(run, config_data):
    n = 3
    p = _exponent(run, 2.0)
    report = {"mode": "constants", "n": n, "p": p, "c_np": c_np(n, p), "tilde_c_np": tilde_c_np(n, p),
              "a_np": a_np(n, p), "classical_bv": classical_bv_constant(n),
              "projection_average_bv": projection_average_bv_constant(n),
              "projection_average_lp": projection_average_lp_constant(n, p)}
    return report, True


def cmd_sobolev(run, config_data):
    mode = run.options.get("mode")
    handlers = {"char": _sobolev_char, "grid": _sobolev_grid, "gromov": _sobolev_gromov,
                "constants": _sobolev_constants}
    if mode not in handlers:
        raise SpecValidationError(f"Unknown sobolev mode {mode!r}; expected one of {', '.join(SOBOLEV_MODES)}")
    report, holds = handlers[mode](run, config_data)
    report.update({"schema": SCHEMA, "command": "sobolev", "seed": run.seed, "grid": run.grid_level})
    if run.fmt == "csv":
        keys = sorted(k for k, v in report.items() if not isinstance(v, dict))
        emit(render_rows(keys, [[report[k] for k in keys]]), run.out)
    else:
        emit(render_json(report), run.out)
    return EXIT_OK if holds else EXIT_VIOLATION


def cmd_extremize(run, config_data):
    settings = config_data.get("extremize", {})
    start = parse_body(run.options.get("start", "ellipsoid:2,1,0.5"))
    measure = parse_measure(run.measure or "equatorial:0.5", start.dim)
    grid = make_grid(start.dim, config_data.get("grid", {}).get("extremize_level", 8))
    steps = run.options.get("steps", settings.get("steps", 200))
    p = _exponent(run, 1.0)

    if isinstance(start, Polytope):
        trajectory, _ = extremize_polytope(measure, p, steps, run.seed, grid, start=start,
                                           perturbation=settings.get("perturbation", 0.05))
    else:
        # the search runs over axis-aligned ellipsoids; a start rotation is dropped
        semiaxes = start.semiaxes if isinstance(start, Ellipsoid) else [start.radius] * start.dim
        trajectory = extremize(measure, p, steps, run.seed, grid, start=semiaxes,
                               xatol=settings.get("xatol", 1e-6), fatol=settings.get("fatol", 1e-13))

    if run.fmt == "csv":
        width = max((len(s.semiaxes) for s in trajectory), default=0)
        header = ["step"] + [f"a{i + 1}" for i in range(width)] + ["product"]
        rows = [[s.step] + list(s.semiaxes) + [""] * (width - len(s.semiaxes)) + [s.product] for s in trajectory]
        emit(render_rows(header, rows), run.out)
    else:
        report = {"schema": SCHEMA, "command": "extremize", "seed": run.seed, "grid": grid.level,
                  "mu": measure.describe(), "p": p, "bound": petty_bound(start.dim, p),
                  "trajectory": [vars(s) for s in trajectory], "final_product": trajectory[-1].product}
        emit(render_json(report), run.out)
    return EXIT_OK


def cmd_grid(run, config_data):
    grid = make_grid(3, run.grid_level)
    stream = StringIO()
    write_grid_csv(stream, grid)
    emit(stream.getvalue(), run.out)
    return EXIT_OK


COMMANDS = {
    "compute": cmd_compute,
    "verify": cmd_verify,
    "sobolev": cmd_sobolev,
    "extremize": cmd_extremize,
    "grid": cmd_grid,
}


def run_command(run, config_data):
    """Runs one command and maps failures to exit codes."""
    handler = COMMANDS.get(run.command)
    if handler is None:
        module_logger.error(f"Unknown command {run.command}")
        return EXIT_SPEC
    try:
        return handler(run, config_data)
    except SpecValidationError as e:
        module_logger.error(f"Invalid input for {run.command}: {e}")
        return EXIT_SPEC
    except NumericFailure as e:
        module_logger.error(f"Numeric failure in {run.command}: {e}")
        return EXIT_NUMERIC
