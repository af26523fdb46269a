import csv
import io
import json
import logging
import os
import sys

from lib.helper_handler import to_jsonable

module_logger = logging.getLogger('isoval.report')

SCHEMA = "isoval/1"
TRIAL_COLUMNS = ("index", "check", "p", "lhs", "bound", "margin", "passed", "equality", "body", "mu")


def render_json(report):
    data = dict(report)
    data.setdefault("schema", SCHEMA)
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True) + "\n"


def render_rows(header, rows):
    stream = io.StringIO()
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return stream.getvalue()


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, dict):
        return json.dumps(to_jsonable(value), sort_keys=True)
    return value


def render_trials_csv(report):
    """Flat per-trial rows, one per check, for plotting margins."""
    rows = []
    for trial in report.get("trials", []):
        rows.append([trial.get(c) for c in TRIAL_COLUMNS])
    return render_rows(TRIAL_COLUMNS, rows)


def emit(text, out_path=None):
    """Writes to the output file, or to stdout when no path is given."""
    if not out_path:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        directory = os.path.dirname(out_path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)
        with open(out_path, "w", newline="") as f:
            f.write(text)
        module_logger.info(f"Report written to <<{out_path}>>")
    except OSError as e:
        module_logger.error(f"Failed to write report to {out_path}: {e}")
        raise
