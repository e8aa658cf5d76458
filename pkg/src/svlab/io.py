"""Result files: CSV tables with a provenance header, JSON summaries.

Every CSV starts with ``#`` comment lines recording the package version and
the run manifest (command, model, parameters, seed). The manifest holds no
wall-clock data and no thread count, so identical runs produce identical
bytes; the timestamp lives only in ``manifest.json``.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .model_core import ModelSpec


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, ModelSpec):
        return {k: _jsonable(v) for k, v in asdict(obj).items()}
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enums
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


@dataclass
class RunManifest:
    command: str
    spec: ModelSpec | None
    params: dict = field(default_factory=dict)
    seed: int | None = None
    output_dir: str = "."

    def as_dict(self) -> dict:
        return {
            "version": __version__,
            "command": self.command,
            "spec": _jsonable(self.spec) if self.spec is not None else None,
            "params": _jsonable(self.params),
            "seed": self.seed,
        }

    def header_lines(self) -> list[str]:
        return [f"# svlab {__version__}",
                "# manifest " + json.dumps(self.as_dict(), sort_keys=True)]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def write_csv(path, columns, rows, manifest: RunManifest | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if manifest is not None:
            for line in manifest.header_lines():
                fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Columns and rows of a CSV written by :func:`write_csv` (header comments skipped)."""
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def write_json(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


def write_manifest(out_dir, manifest: RunManifest, extra: dict | None = None) -> Path:
    data = manifest.as_dict()
    data["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    if extra:
        data.update(extra)
    return write_json(Path(out_dir) / "manifest.json", data)
