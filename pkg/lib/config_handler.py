import copy
import json
import logging
import os

module_logger = logging.getLogger('isoval.config')

GRID_LEVEL_ENV = "ISOVAL_GRID_LEVEL"

default_config = {
    "log_level": 2,
    "log_path": "",
    "grid": {
        "level": 16,
        "extremize_level": 8,
        "sobolev_level": 12
    },
    "verification": {
        "tolerance": 1e-6,
        "equality_tolerance": 1e-6,
        "lemma_tolerance": 1e-6,
        "affine_tolerance": 1e-5,
        "trials": 200,
        "seed": 42,
        "hull_vertices": 20,
        "jobs": 1
    },
    "extremize": {
        "steps": 200,
        "xatol": 1e-6,
        "fatol": 1e-13,
        "perturbation": 0.05
    },
    "sobolev": {
        "points": 96,
        "half_width": 24.0,
        "profile_scale": 0.6,
        "tolerance": 0.05
    },
    "output": {
        "format": "json"
    }
}


def generate_default_config():
    return copy.deepcopy(default_config)


def merge_config(base, overrides):
    """Deep merges overrides into a copy of base. Unknown keys are kept."""
    merged = copy.deepcopy(base)
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = value
    return merged


def apply_environment(config_data, environ=None):
    environ = os.environ if environ is None else environ
    level = environ.get(GRID_LEVEL_ENV, "")
    if level:
        try:
            config_data["grid"]["level"] = int(level)
            module_logger.debug(f"Grid level overridden from environment: {level}")
        except ValueError:
            module_logger.warning(f"Ignoring {GRID_LEVEL_ENV}={level!r}, not an integer")
    return config_data


def load_config_file(file_path):
    """
    Loads the configuration file merged over the defaults.

    A missing file is created from the defaults. A file that cannot be parsed is
    reported and the defaults are used instead.
    """
    defaults = generate_default_config()

    if not file_path:
        return apply_environment(defaults)

    try:
        with open(file_path, 'r') as f:
            config_data = json.load(f)
    except FileNotFoundError:
        module_logger.warning(f'Configuration file {file_path} not found. Creating default.')
        save_config_file(file_path, defaults)
        config_data = {}
    except json.JSONDecodeError:
        module_logger.error(f'Configuration file {file_path} is not in valid JSON format. Using defaults.')
        config_data = {}
    except Exception as e:
        module_logger.error(f'Unexpected Exception Loading file {file_path} - {e}')
        config_data = {}

    return apply_environment(merge_config(defaults, config_data))


def save_config_file(file_path, default_data):
    """Creates a configuration file with default data if it doesn't exist."""
    try:
        directory = os.path.dirname(file_path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)
        with open(file_path, "w") as outfile:
            outfile.write(json.dumps(default_data, indent=4))
        return True
    except Exception as e:
        module_logger.error(f'Unexpected Exception Saving file {file_path} - {e}')
        return None
