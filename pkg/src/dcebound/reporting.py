"""CSV/JSON writers for every exported artifact, and the run manifest."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .dynamics import Trajectory
from .noise import NoisePath


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def clean_json(obj):
    """Replace non-finite floats by None and numpy scalars/arrays by Python types."""
    if isinstance(obj, dict):
        return {str(k): clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean_json(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def json_text(obj) -> str:
    return json.dumps(clean_json(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


# -- module exports -------------------------------------------------------------

def noise_csv(path: NoisePath) -> str:
    return csv_text(("t", "delta_p"), zip(path.times, path.samples))


def noise_sidecar(path: NoisePath, manifest: str | None = None) -> dict:
    out = {
        "seed": path.seed,
        "dt": path.dt,
        "n_samples": len(path),
        "params": {"variance": path.params.variance, "rate": path.params.rate} if path.params else None,
        "index": path.meta.get("index", 0),
    }
    if manifest:
        out["manifest"] = manifest
    return out


def trajectory_csv(traj: Trajectory) -> str:
    return csv_text(("t", "x", "v", "a"), zip(traj.t, traj.x, traj.v, traj.a))


def spectrum_csv(spectra) -> str:
    rows = [(sp.k, n, val) for sp in spectra for n, val in sorted(sp.expected.items())]
    return csv_text(("k", "n", "expected_number"), rows)


def covariance_table_csv(rows) -> str:
    """rows of (t, t_prime, printed_value, oracle_value, mc_value, mc_stderr)."""
    return csv_text(("t", "t_prime", "printed_value", "oracle_value", "mc_value", "mc_stderr"), rows)


def sweep_csv(rows) -> str:
    """rows of (param value, log10 limit, regime)."""
    return csv_text(("param", "log10_sigma_limit", "regime"), rows)


# -- manifest -------------------------------------------------------------------

@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int
    argv: list
    version: str = __version__
    started: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    finished: str | None = None
    outputs: list = field(default_factory=list)

    @property
    def filename(self) -> str:
        return f"{self.subcommand}_manifest.json"

    def finish(self, out_dir: Path) -> Path:
        self.finished = datetime.now(timezone.utc).isoformat()
        payload = {
            "subcommand": self.subcommand,
            "config": self.config,
            "seed": self.seed,
            "argv": self.argv,
            "tool_version": self.version,
            "started": self.started,
            "finished": self.finished,
            "outputs": sorted(self.outputs),
        }
        return write_text(out_dir / self.filename, json_text(payload))
