"""JSON run records: one per CLI invocation.

Schema: {command, config, seed, metrics, artifacts: [paths], duration_s,
versions}.
"""

from __future__ import annotations

import json
import os
import platform
import time

import numpy as np

from .. import __version__


def versions() -> dict:
    return {
        "fewmotion": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def write_record(out_dir, command: str, config: dict, seed: int,
                 metrics: dict, artifacts: list, duration_s: float) -> str:
    os.makedirs(out_dir, exist_ok=True)
    record = {
        "command": command,
        "config": _plain(config),
        "seed": int(seed),
        "metrics": _plain(metrics),
        "artifacts": [str(a) for a in artifacts],
        "duration_s": round(float(duration_s), 3),
        "versions": versions(),
    }
    path = os.path.join(out_dir, f"run_{command.replace('-', '_')}.json")
    with open(path, "w") as f:
        json.dump(record, f, indent=1, sort_keys=True)
    return path


class Stopwatch:
    def __enter__(self):
        self.t0 = time.time()
        return self

    def __exit__(self, *exc):
        self.duration = time.time() - self.t0
        return False


def _plain(obj):
    """Make numpy scalars/arrays JSON-serializable."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj
