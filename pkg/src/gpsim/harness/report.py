"""CSV and JSON output for experiment results."""

import csv
import io
import json
import platform
import sys

import numpy as np
import scipy

from .. import __version__
from .config import config_hash

COLUMNS = ["config_hash", "experiment", "n", "method", "param", "statistic", "value"]


def format_value(v):
    """Deterministic text for a float: 12 significant digits, fixed spellings for nan/inf."""
    v = float(v)
    if np.isnan(v):
        return "nan"
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".12g")


def report_rows(name, cfg, cells):
    h = config_hash(cfg)
    for cell in cells:
        n = "all" if cell.n == 0 else str(cell.n)
        for param, stat, value in cell.rows:
            yield [h, name, n, cell.method, param, stat, format_value(value)]


def render_csv(results):
    """``results`` maps experiment name to ``(cfg, cells)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for name, (cfg, cells) in results.items():
        w.writerows(report_rows(name, cfg, cells))
    return buf.getvalue()


def render_meta(results):
    meta = {
        "library": {"name": "gpsim", "version": __version__},
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "platform": sys.platform,
        "experiments": {name: {"config_hash": config_hash(cfg), "config": cfg} for name, (cfg, _) in results.items()},
    }
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"


def render_trace(cell):
    keys = []
    for d in cell.trace:
        keys += [k for k in d if k not in keys]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for d in cell.trace:
        w.writerow([format_value(d[k]) if k in d else "" for k in keys])
    return buf.getvalue()
