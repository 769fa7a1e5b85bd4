"""CSV curve dumps and JSON reports.

Floats are written with 17 significant digits, which round-trips every
IEEE double exactly.  JSON has no representation for ``inf``/``nan``;
those become ``null``.
"""

import csv
import json
import math

import numpy as np

from .errors import InputError
from .graze import GrazeCurve, OmegaCurve

GRAZE_HEADER = ["ux", "uy", "uz", "px", "py", "pz"]
OMEGA_HEADER = ["yx", "yy", "yz", "t"]


def _fmt(v):
    return "%.17g" % v


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_graze_csv(path, graze: GrazeCurve):
    _write_rows(path, GRAZE_HEADER, np.hstack([graze.normals, graze.points]))


def write_omega_csv(path, omega: OmegaCurve):
    _write_rows(path, OMEGA_HEADER, np.column_stack([omega.points, omega.ray_params]))


def read_curve_csv(path):
    """Returns ``(header, array)``; the header tells grazes from Omega curves."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty curve file")
    header = rows[0]
    if header not in (GRAZE_HEADER, OMEGA_HEADER):
        raise InputError(f"{path}: unknown curve header {header}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return header, data


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(jsonable(obj), fh, indent=2, sort_keys=False)
        fh.write("\n")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
