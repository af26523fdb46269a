import csv
import json
import logging
import os

import numpy as np

from lib.bodies import polytope_from_vertices
from lib.helper_handler import SpecValidationError

module_logger = logging.getLogger('isoval.file_handler')

RASTER_DTYPE = "<f8"


def _read_off(file_path):
    with open(file_path, "r") as f:
        lines = [line.split("#")[0].strip() for line in f]
    lines = [line for line in lines if line]
    tokens = lines[0].split() if lines else []
    if not tokens or tokens[0].upper() != "OFF":
        raise SpecValidationError(f"{file_path} is not an OFF file")
    if len(tokens) > 1:
        counts, start = tokens[1:], 1
    else:
        counts, start = lines[1].split(), 2
    vertex_count = int(counts[0])
    return np.array([[float(v) for v in line.split()[:3]] for line in lines[start:start + vertex_count]])


def load_polytope(file_path):
    """Polytope from JSON {"vertices": [[x, y, z], ...]} or an OFF file; faces in OFF are ignored."""
    try:
        if file_path.lower().endswith(".off"):
            vertices = _read_off(file_path)
        else:
            with open(file_path, "r") as f:
                vertices = np.asarray(json.load(f)["vertices"], dtype=float)
    except (OSError, KeyError, ValueError, IndexError) as e:
        module_logger.error(f"Failed to read polytope from {file_path}: {e}")
        raise SpecValidationError(f"Cannot read polytope file {file_path}: {e}")
    module_logger.debug(f"Read {len(vertices)} vertices from {file_path}")
    return polytope_from_vertices(vertices, label=os.path.basename(file_path))


def save_polytope(file_path, K):
    with open(file_path, "w") as f:
        json.dump({"vertices": K.vertices.tolist()}, f, indent=4)


def write_grid_csv(stream, grid, columns=None):
    """Rows (u_1, ..., u_n, w[, extra columns...]) for every grid node."""
    columns = columns or {}
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([f"u{i + 1}" for i in range(grid.dim)] + ["w"] + list(columns))
    extra = [np.asarray(v) for v in columns.values()]
    for i in range(grid.size):
        writer.writerow([repr(float(x)) for x in grid.nodes[i]] + [repr(float(grid.weights[i]))]
                        + [repr(float(v[i])) for v in extra])


def write_raster(file_path, values, spacing, lower=None):
    """A JSON header line followed by the little-endian float64 samples in C order."""
    values = np.asarray(values, dtype=float)
    lower = np.zeros(values.ndim) if lower is None else np.asarray(lower, dtype=float)
    upper = lower + spacing * (np.array(values.shape) - 1)
    header = {"dims": list(values.shape), "box": [lower.tolist(), upper.tolist()], "spacing": float(spacing),
              "dtype": RASTER_DTYPE}
    try:
        with open(file_path, "wb") as f:
            f.write(json.dumps(header).encode("utf-8") + b"\n")
            f.write(values.astype(RASTER_DTYPE).tobytes(order="C"))
        module_logger.debug(f"Raster saved successfully at {file_path}")
    except Exception as e:
        module_logger.error(f"Failed to save raster at {file_path}: {e}")
        raise


def read_raster(file_path):
    """:return: (values, spacing, lower)"""
    try:
        with open(file_path, "rb") as f:
            header = json.loads(f.readline().decode("utf-8"))
            payload = f.read()
    except (OSError, ValueError) as e:
        raise SpecValidationError(f"Cannot read raster {file_path}: {e}")
    dims = tuple(int(d) for d in header.get("dims", []))
    values = np.frombuffer(payload, dtype=RASTER_DTYPE)
    if values.size != int(np.prod(dims)):
        raise SpecValidationError(f"Raster {file_path} holds {values.size} samples, header says {dims}")
    lower = np.asarray(header["box"][0], dtype=float)
    return values.reshape(dims).astype(float), float(header["spacing"]), lower
