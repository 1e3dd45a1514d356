"""Result files: CSV tables, gnuplot data blocks and run manifests.

CSV files use '.' decimals, LF line endings and a fixed column order given by
the caller. Floats are written with ``repr`` precision so reruns with the
same seed reproduce files byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, columns, rows) -> Path:
    """Write ``rows`` (iterables in ``columns`` order) to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> dict:
    """Read a CSV written by :func:`write_csv` into ``{column: ndarray}``."""
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = list(r)
    out = {}
    for j, name in enumerate(header):
        col = [row[j] for row in rows]
        try:
            out[name] = np.array([float(v) for v in col])
        except ValueError:
            out[name] = np.array(col)
    return out


def write_gnuplot(path, blocks, comment: str = "") -> Path:
    """Write whitespace-separated data blocks separated by two blank lines.

    Args:
        blocks: list of ``(title, columns, rows)``; each block is addressable
            with gnuplot's ``index``.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="\n") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        for i, (title, columns, rows) in enumerate(blocks):
            if i:
                fh.write("\n\n")
            fh.write(f"# {title}\n# {' '.join(columns)}\n")
            for row in rows:
                fh.write(" ".join(_fmt(v) for v in row) + "\n")
    return path


def config_hash(config: dict) -> str:
    text = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class RunManifest:
    """Everything needed to rerun an experiment and reproduce its files."""

    experiment: str
    config: dict
    base_seed: int
    seeds: list = field(default_factory=list)
    tool_version: str = __version__
    started: float = field(default_factory=time.time)
    wall_clock: float | None = None
    outputs: list = field(default_factory=list)

    @property
    def hash(self) -> str:
        return config_hash(self.config)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config_hash": self.hash,
            "config": self.config,
            "base_seed": self.base_seed,
            "seeds": list(self.seeds),
            "tool_version": self.tool_version,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "started": self.started,
            "wall_clock_s": self.wall_clock,
            "outputs": list(self.outputs),
        }

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, default=str) + "\n")
        return path


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
