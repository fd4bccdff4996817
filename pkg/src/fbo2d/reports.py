"""Experiment reports: tabular series, fitted constants, pass/fail verdicts.

CSV bodies are deterministic functions of the inputs (timestamps live only in
the JSON sidecar) so reruns with the same config are byte-identical.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


@dataclass
class Verdict:
    name: str
    passed: bool
    rule: str
    value: float | None = None

    def as_dict(self):
        return {"name": self.name, "passed": bool(self.passed),
                "rule": self.rule, "value": self.value}


@dataclass
class NormReport:
    experiment: str
    params: dict = field(default_factory=dict)
    columns: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def add_verdict(self, name: str, passed: bool, rule: str, value=None):
        if value is not None:
            value = float(value)
            if not np.isfinite(value):
                raise ValueError(f"verdict {name!r} carries a non-finite value")
        self.verdicts.append(Verdict(name, bool(passed), rule, value))

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def write_csv(self, path):
        names = list(self.columns)
        rows = zip(*(self.columns[n] for n in names)) if names else []
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(names)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])

    def write_json(self, path):
        payload = {
            "experiment": self.experiment,
            "parameters": self.params,
            "fits": self.fits,
            "verdicts": [v.as_dict() for v in self.verdicts],
            "warnings": list(self.warnings),
            "passed": self.passed,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, default=_json_default)
            fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj)!r}")
