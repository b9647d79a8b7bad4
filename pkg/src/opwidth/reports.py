"""Structured experiment reports with a hashable, timestamp-free body.

A report separates what an experiment *found* (the body: job echo, check
records, artifact names) from when and how long it ran (the meta block).
Only the body is hashed, so two runs of the same job with the same seed
produce byte-identical bodies even though their timestamps differ.  The
output location is likewise excluded from the body — it names where the
results live, not what they are.

Check records carry a sweep coordinate when they belong to a parameter
sweep; `emit_plot_data` collects those keyed records from a set of reports
into one tidy CSV for external plotting.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ValidationError

TOOL_VERSION = __version__


def _plain(value):
    """Recursively convert to JSON-encodable plain data.

    Non-finite floats have no strict-JSON encoding; they become strings,
    which keeps the canonical form parseable everywhere.
    """
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace, strict floats."""
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass(frozen=True)
class CheckRecord:
    """One audited inequality: a bound, a measurement, and the verdict."""

    name: str
    bound: float
    measured: float
    margin: float
    passed: bool
    key: float = None  # sweep coordinate when the check belongs to a sweep

    def as_record(self) -> dict:
        return dataclasses.asdict(self)


def upper_check(name: str, measured: float, bound: float, tol: float = 0.0, key: float = None) -> CheckRecord:
    """Check that `measured <= bound + tol`; margin is the remaining slack."""
    return CheckRecord(
        name=name,
        bound=float(bound),
        measured=float(measured),
        margin=float(bound) + tol - float(measured),
        passed=bool(measured <= bound + tol),
        key=key,
    )


def lower_check(name: str, measured: float, bound: float, tol: float = 0.0, key: float = None) -> CheckRecord:
    """Check that `measured >= bound - tol`; margin is the remaining slack."""
    return CheckRecord(
        name=name,
        bound=float(bound),
        measured=float(measured),
        margin=float(measured) - (float(bound) - tol),
        passed=bool(measured >= bound - tol),
        key=key,
    )


@dataclass
class ExperimentReport:
    """Job echo, version, check records, and artifact names — plus run meta."""

    job: dict
    checks: list
    artifacts: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    sweep_key: str = None
    version: str = TOOL_VERSION
    wall_time: float = None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def body(self) -> dict:
        """The hashed content: everything except timing and location."""
        return {
            "job": self.job,
            "version": self.version,
            "sweep_key": self.sweep_key,
            "checks": [check.as_record() for check in self.checks],
            "artifacts": list(self.artifacts),
            "results": self.results,
            "passed": self.passed,
        }

    def body_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.body()).encode()).hexdigest()

    def to_json(self) -> dict:
        return {
            "body": _plain(self.body()),
            "body_sha256": self.body_hash(),
            "meta": {
                "wall_time_s": self.wall_time,
                "written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            },
        }

    def write(self, path) -> None:
        with open(path, "w") as handle:
            json.dump(self.to_json(), handle, indent=2, sort_keys=True)
            handle.write("\n")


def load_report_body(path) -> dict:
    """Read a written report back and re-verify its body hash."""
    with open(path) as handle:
        payload = json.load(handle)
    for key in ("body", "body_sha256"):
        if key not in payload:
            raise ValidationError(f"report file {path} lacks the {key!r} field")
    digest = hashlib.sha256(canonical_json(payload["body"]).encode()).hexdigest()
    if digest != payload["body_sha256"]:
        raise ValidationError(f"report file {path} fails its own hash check")
    return payload["body"]


def emit_plot_data(bodies, path) -> str:
    """Collect keyed check records from report bodies into one tidy CSV.

    All bodies must agree on the sweep key; rows are sorted by it.  Nothing
    is written unless at least one keyed record exists.
    """
    if not bodies:
        raise ValidationError("no reports to emit plot data from")
    keys, rows = set(), []
    for body in bodies:
        if isinstance(body, ExperimentReport):
            body = body.body()
        if body.get("sweep_key") is None:
            raise ValidationError("report has no sweep key; nothing to plot")
        keys.add(body["sweep_key"])
        for check in body["checks"]:
            if check.get("key") is not None:
                rows.append((check["key"], check["measured"], check["bound"], check["margin"]))
    if len(keys) != 1:
        raise ValidationError(f"inconsistent sweep keys across reports: {sorted(keys)}")
    if not rows:
        raise ValidationError("no keyed check records to emit")
    rows.sort(key=lambda row: row[0])
    key_name = next(iter(keys))
    with open(path, "w") as handle:
        handle.write(f"{key_name},measured,bound,margin\n")
        for row in rows:
            handle.write(",".join(repr(float(v)) for v in row) + "\n")
    return str(path)
