"""Trajectory and report files: CSV with %.17g numbers plus JSON sidecars."""
from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np
import scipy

from .core import Grid, Trajectory
from .errors import ConfigurationError

TRAJECTORY_CSV = "trajectory.csv"
META_JSON = "meta.json"


def prepare_output(path, force=False, names=()):
    """Create the output directory; refuse to overwrite listed files unless ``force``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    clash = [n for n in names if (out / n).exists()]
    if clash and not force:
        raise ConfigurationError(f"{out}: {', '.join(clash)} already exist (use --force to overwrite)")
    return out


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, data):
    Path(path).write_text(json.dumps(jsonable(data), indent=2), encoding="utf-8")


def versions():
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def write_trajectory(traj: Trajectory, outdir, force=False):
    """``trajectory.csv`` (t, x[, y], u, v per node per snapshot) and ``meta.json``."""
    out = prepare_output(outdir, force, (TRAJECTORY_CSV, META_JSON))
    grid = traj.grid
    coords = [c.ravel() for c in grid.coords()]
    names = ["x", "y"][:grid.dim]
    with (out / TRAJECTORY_CSV).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *names, "u", "v"])
        for i, t in enumerate(traj.times):
            u = traj.u[i].ravel()
            v = traj.v[i].ravel() if traj.v is not None else np.full(grid.size, np.nan)
            for n in range(grid.size):
                w.writerow(["%.17g" % t, *("%.17g" % c[n] for c in coords), "%.17g" % u[n], "%.17g" % v[n]])
    meta = dict(traj.meta)
    meta["grid"] = grid.to_dict()
    meta["times"] = [float(t) for t in traj.times]
    meta["versions"] = versions()
    write_json(out / META_JSON, meta)
    return out / TRAJECTORY_CSV, out / META_JSON


def read_trajectory(outdir) -> Trajectory:
    """Inverse of :func:`write_trajectory`."""
    out = Path(outdir)
    csv_path, meta_path = out / TRAJECTORY_CSV, out / META_JSON
    if not csv_path.is_file() or not meta_path.is_file():
        raise ConfigurationError(f"{out} does not hold {TRAJECTORY_CSV} and {META_JSON}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    g = meta["grid"]
    grid = Grid(tuple(tuple(e) for e in g["extents"]), tuple(g["points"]))
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    times = np.array(meta["times"], dtype=float)
    if data.shape[0] != len(times) * grid.size:
        raise ConfigurationError(f"{csv_path}: row count does not match grid and times")
    u = data[:, -2].reshape((len(times),) + grid.shape)
    v = data[:, -1].reshape((len(times),) + grid.shape)
    v = None if np.all(np.isnan(v)) else v
    return Trajectory(grid, times, u, v, meta)
