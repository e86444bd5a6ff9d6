"""TOML problem files: parsing, validation of keys, and command-line overrides.

Layout (every section and key is checked; unknown ones are rejected)::

    [domain]      extents = [[-1.0, 1.0]]
    [support]     kind = "intervals", intervals = [[-1.0, -0.3], [0.3, 1.0]]
    [initial.u0]  expr = "cos(pi*x/0.6)", region = "complement"
    [initial.v0]  expr = "1", region = "support"
    [params]      k, m3, m4, T
    [grid]        points = [801]
    [solver]      dt, c, seed, theta   (all optional)
"""
from __future__ import annotations

import copy
import sys
from pathlib import Path
from typing import Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import (SOLVER_KEYS, InitialData, ProblemSpec, build_grid, geometry_from_dict)
from .errors import ConfigurationError
from .expr import Expression

SECTIONS = {
    "domain": {"extents"},
    "support": {"kind", "intervals", "center", "radius", "half_widths", "corner_radius"},
    "initial": {"u0", "v0"},
    "params": {"k", "m3", "m4", "T"},
    "grid": {"points"},
    "solver": SOLVER_KEYS,
}
REQUIRED = ("domain", "support", "initial", "params", "grid")
EXPR_KEYS = {"expr", "region"}
DEFAULT_SEED = 20240601


def _check_keys(data: Mapping):
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigurationError(f"unknown section(s) {sorted(unknown)}")
    for name in REQUIRED:
        if name not in data:
            raise ConfigurationError(f"missing section [{name}]")
    for name, allowed in SECTIONS.items():
        sec = data.get(name, {})
        if not isinstance(sec, Mapping):
            raise ConfigurationError(f"[{name}] must be a table")
        bad = set(sec) - allowed
        if bad:
            raise ConfigurationError(f"unknown key(s) {sorted(bad)} in [{name}]")
    for which in ("u0", "v0"):
        sub = data["initial"].get(which)
        if not isinstance(sub, Mapping) or "expr" not in sub:
            raise ConfigurationError(f"[initial.{which}] needs an expr")
        bad = set(sub) - EXPR_KEYS
        if bad:
            raise ConfigurationError(f"unknown key(s) {sorted(bad)} in [initial.{which}]")
    for key in ("k", "m3", "m4", "T"):
        if key not in data["params"]:
            raise ConfigurationError(f"missing params.{key}")


def spec_from_dict(data: Mapping) -> ProblemSpec:
    """Build a validated ProblemSpec from parsed TOML (or a ``ProblemSpec.to_dict`` echo)."""
    _check_keys(data)
    try:
        extents = data["domain"]["extents"]
        grid = build_grid(extents, data["grid"]["points"])
        geometry = geometry_from_dict(data["support"])
        u0 = data["initial"]["u0"]
        v0 = data["initial"]["v0"]
        initial = InitialData(Expression(u0["expr"]), Expression(v0["expr"]),
                              u0.get("region", "complement"), v0.get("region", "support"))
        p = data["params"]
        return ProblemSpec(grid, geometry, initial, float(p["k"]), float(p["m3"]), float(p["m4"]),
                           float(p["T"]), dict(data.get("solver", {})))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid configuration: {exc}") from None


def _parse_value(text: str):
    """A TOML value, or the bare string when it does not parse as one."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(data: Mapping, overrides) -> dict:
    """Copy of ``data`` with dotted ``section.key=value`` overrides applied."""
    out = copy.deepcopy(dict(data))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        path = key.strip().split(".")
        if len(path) < 2:
            raise ConfigurationError(f"override key {key!r} needs a section, e.g. params.k")
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"override {key!r} does not name a table entry")
        node[path[-1]] = _parse_value(value.strip())
    return out


def read_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file {path} not found")
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def load_spec(path, overrides=()) -> ProblemSpec:
    """Read a TOML problem file, apply overrides, and validate."""
    return spec_from_dict(apply_overrides(read_config(path), overrides))


def seed_of(spec: ProblemSpec) -> int:
    return int(spec.solver.get("seed", DEFAULT_SEED))
