"""Container for sampled one-dimensional barrier profiles."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .scan import ResidualReport

TAGS = ("cosh", "ode", "traveling", "patched", "enlarged-heat", "global")


class ConstructionFailure(Exception):
    """A barrier could not be built for the requested parameters (k below threshold)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(eq=False)
class BarrierProfile:
    y: np.ndarray
    U: np.ndarray
    dU: np.ndarray
    segments: list
    tag: str
    params: dict = field(default_factory=dict)
    breakpoints: dict = field(default_factory=dict)
    V: np.ndarray | None = None
    dV: np.ndarray | None = None
    index: np.ndarray | None = None
    U_local: list | None = None
    d2U: np.ndarray | None = None
    exact: np.ndarray | None = None
    report: ResidualReport = field(default_factory=ResidualReport)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown construction tag {self.tag!r}")

    @property
    def passed(self) -> bool:
        return self.report.passed

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["y", "U", "dU", "V"])
            V = self.V if self.V is not None else np.full(len(self.y), np.nan)
            for row in zip(self.y, self.U, self.dU, V):
                w.writerow(["%.17g" % val for val in row])

    def summary(self) -> dict:
        return {
            "tag": self.tag,
            "params": _jsonable(self.params),
            "breakpoints": _jsonable(self.breakpoints),
            "report": self.report.to_dict(),
            "diagnostics": _jsonable({k: v for k, v in self.diagnostics.items() if not callable(v)}),
        }

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.summary(), indent=2), encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj
