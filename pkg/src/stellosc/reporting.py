"""Shared report containers, JSON helpers, and run manifests."""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and complex numbers.

    Non-finite floats become null so the emitted JSON stays RFC-valid.
    """
    import math

    import numpy as np

    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": jsonable(float(obj.real)), "im": jsonable(float(obj.imag))}
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    return obj


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class IdentityReport:
    """Outcome of one algebraic-identity check."""

    identity: str
    lhs: complex
    rhs: complex
    abs_err: float
    rel_err: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return jsonable(
            {
                "identity": self.identity,
                "lhs": self.lhs,
                "rhs": self.rhs,
                "abs_err": self.abs_err,
                "rel_err": self.rel_err,
                "pass": self.passed,
                **self.extra,
            }
        )


def make_identity_report(identity, lhs, rhs, tol_rel, tol_abs=1e-12, scale=None, **extra):
    lhs, rhs = complex(lhs), complex(rhs)
    abs_err = abs(lhs - rhs)
    if scale is None:
        scale = max(abs(lhs), abs(rhs))
    rel_err = abs_err / scale if scale > 0 else 0.0
    passed = abs_err <= max(tol_abs, tol_rel * scale)
    return IdentityReport(identity, lhs, rhs, abs_err, rel_err, passed, dict(extra))


@dataclass
class RunManifest:
    command: str
    config_path: str
    resolved: dict
    version: str
    seed: int
    outputs: list = field(default_factory=list)
    wall_clock_s: float = 0.0

    def write(self, out_dir):
        path = os.path.join(out_dir, "manifest.json")
        write_json(
            path,
            {
                "command": self.command,
                "config": self.config_path,
                "resolved": self.resolved,
                "version": self.version,
                "seed": self.seed,
                "outputs": sorted(self.outputs),
                "wall_clock_s": self.wall_clock_s,
            },
        )
        return path


class Stopwatch:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
