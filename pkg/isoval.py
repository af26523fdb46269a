import argparse
import os
import sys
import traceback

from lib.command_processor import SOBOLEV_MODES, build_run_config, run_command, EXIT_SPEC
from lib.config_handler import load_config_file
from lib.inequalities import TAGS
from lib.logging_handler import CustomLogger
from lib.sobolev import PROFILES

app_name = "isoval"
__version__ = "1.0"

root_path = os.getcwd()
config_file_name = "config.json"
config_path = os.path.join(root_path, 'etc')


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--body", help="cube | cube:edge | simplex | ball:r | ellipsoid:a,b,c | box:l1,l2,l3 | hull:@file")
    common.add_argument("--measure", help="discrete:m | equatorial:m | lebesgue:m | latitude:m:t | blend:m | custom:@file")
    common.add_argument("--p", type=float, help="L_p exponent (default 1; 2 for sobolev grid/constants, which need 1 < p < n)")
    common.add_argument("--grid-level", type=int, help="spherical grid level; overrides ISOVAL_GRID_LEVEL")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int, help="worker threads for trials")
    common.add_argument("--out", help="output file; stdout when omitted")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--config", help=f"configuration file (default etc/{config_file_name})")
    common.add_argument("--log-level", type=int, choices=range(1, 6), help="1 debug ... 5 critical")

    parser = argparse.ArgumentParser(prog=app_name, description="Zonal Minkowski valuations and their inequalities")
    parser.add_argument("--version", action="version", version=f"{app_name} {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("compute", parents=[common], help="support fields and polar volumes of Pi, Pi_p, Phi, Phi_p")

    verify = commands.add_parser("verify", parents=[common], help="check an inequality on seeded bodies")
    verify.add_argument("tag", choices=TAGS)

    sobolev = commands.add_parser("sobolev", parents=[common], help="functional inequalities")
    sobolev.add_argument("mode", choices=SOBOLEV_MODES)
    sobolev.add_argument("--profile", choices=PROFILES)
    sobolev.add_argument("--raster", help="raster file: JSON header line and float64 samples")
    sobolev.add_argument("--points", type=int, help="samples per axis for synthesized profiles")

    extremize = commands.add_parser("extremize", parents=[common], help="search for volume product maximizers")
    extremize.add_argument("--start", help="start body, ellipsoid:a,b,c or hull:@file")
    extremize.add_argument("--steps", type=int)

    commands.add_parser("grid", parents=[common], help="export the spherical grid as CSV")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)

    try:
        config_data = load_config_file(args.config or os.path.join(config_path, config_file_name))
        logging_instance = CustomLogger(args.log_level or config_data["log_level"], f'{app_name}',
                                        config_data.get("log_path") or None)
        logger = logging_instance.logger
        logger.debug("Loaded Config File")
    except Exception as e:
        traceback.print_exc()
        print(f'Error while loading configuration : {e}', file=sys.stderr)
        return EXIT_SPEC

    run = build_run_config(args, config_data)
    logger.debug(f"Running {run.command} with grid level {run.grid_level}, seed {run.seed}")
    return run_command(run, config_data)


if __name__ == '__main__':
    sys.exit(main())
