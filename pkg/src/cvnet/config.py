"""Experiment configuration: YAML files with a versioned schema.

A configuration is a mapping like::

    schema: 1
    experiment: page
    graph: {D: 1, M: 21}          # or {edge_list: path/to/graph.txt}
    squeezers:                     # one of the forms below
      single: {x: 0, t: 0, r: 5}   # x is a coordinate; vertex: index also works
      # list: [{x: 0, t: 0, r: 5}, {x: -70, t: 200, r: 3}]
      # file: layout.csv           # columns x, t, r
      # poisson: {d: 60, t_max: 500, r_range: [1, 3], anisotropy: 1}
    ensemble: 100
    horizon: 1000
    entropy: von_neumann           # or renyi:2
    seed: 1
    out: results/page
    params: {...}                  # experiment-specific settings

:func:`validate_config` lists every problem with its field path.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

import yaml

from .gaussian import EntropyKind

SCHEMA_VERSION = 1

DEFAULTS = {
    "schema": SCHEMA_VERSION,
    "ensemble": 100,
    "horizon": None,
    "entropy": "von_neumann",
    "seed": 0,
    "out": None,
    "squeezers": None,
    "params": {},
}


@dataclass(frozen=True)
class Diagnostic:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("invalid configuration:\n" + "\n".join(f"  {d}" for d in self.diagnostics))


def load_config(path) -> dict:
    path = Path(path)
    data = yaml.safe_load(path.read_text()) or {}
    if not isinstance(data, dict):
        raise ConfigError([Diagnostic("<root>", "configuration must be a mapping")])
    data.setdefault("_base_dir", str(path.parent))
    return data


def with_defaults(config: dict) -> dict:
    out = copy.deepcopy(DEFAULTS)
    out.update(copy.deepcopy(config))
    out["params"] = dict(out.get("params") or {})
    return out


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _resolve(config: dict, p) -> Path:
    p = Path(p)
    if not p.is_absolute() and config.get("_base_dir"):
        p = Path(config["_base_dir"]) / p
    return p


def _check_graph(g, config, diags):
    if not isinstance(g, dict):
        diags.append(Diagnostic("graph", "must be a mapping with D and M, or edge_list"))
        return
    if "edge_list" in g:
        if not _resolve(config, g["edge_list"]).exists():
            diags.append(Diagnostic("graph.edge_list", f"file not found: {g['edge_list']}"))
        return
    D, M = g.get("D"), g.get("M")
    if not _is_int(D) or D < 1:
        diags.append(Diagnostic("graph.D", "must be an integer >= 1"))
    if M is None:
        diags.append(Diagnostic("graph.M", "missing"))
    elif not _is_int(M) or M < 2:
        diags.append(Diagnostic("graph.M", "must be an integer >= 2"))
    elif M % 2 == 0 and not (D == 1 and g.get("allow_even", False)):
        diags.append(Diagnostic("graph.M", f"side length must be odd for a centred lattice, got {M}"))


def _check_event(ev, path, diags):
    if not isinstance(ev, dict):
        diags.append(Diagnostic(path, "squeeze event must be a mapping"))
        return None
    if ("x" in ev) == ("vertex" in ev):
        diags.append(Diagnostic(path, "give exactly one of x (coordinate) or vertex (index)"))
    t = ev.get("t", 0)
    if not _is_int(t) or t < 0:
        diags.append(Diagnostic(f"{path}.t", "must be a nonnegative integer"))
        t = None
    r = ev.get("r")
    if not isinstance(r, (int, float)) or isinstance(r, bool) or not r > 0:
        diags.append(Diagnostic(f"{path}.r", "must be a positive number"))
    return t


def _check_squeezers(sq, config, diags):
    """Returns the latest explicit event time (or None)."""
    if sq is None:
        return None
    if not isinstance(sq, dict) or len(sq) != 1:
        diags.append(Diagnostic("squeezers", "must have exactly one of single, list, file, poisson"))
        return None
    (form, body), = sq.items()
    if form == "single":
        return _check_event(body, "squeezers.single", diags)
    if form == "list":
        if not isinstance(body, list) or not body:
            diags.append(Diagnostic("squeezers.list", "must be a nonempty list"))
            return None
        ts = [_check_event(ev, f"squeezers.list[{i}]", diags) for i, ev in enumerate(body)]
        ts = [t for t in ts if t is not None]
        return max(ts) if ts else None
    if form == "file":
        if not _resolve(config, body).exists():
            diags.append(Diagnostic("squeezers.file", f"file not found: {body}"))
        return None
    if form == "poisson":
        if not isinstance(body, dict):
            diags.append(Diagnostic("squeezers.poisson", "must be a mapping"))
            return None
        d = body.get("d")
        if not isinstance(d, (int, float)) or not d > 0:
            diags.append(Diagnostic("squeezers.poisson.d", "must be a positive number"))
        t_max = body.get("t_max")
        if not _is_int(t_max) or t_max < 1:
            diags.append(Diagnostic("squeezers.poisson.t_max", "must be a positive integer"))
            t_max = None
        rr = body.get("r_range", [1.0, 3.0])
        if not (isinstance(rr, (list, tuple)) and len(rr) == 2 and 0 < rr[0] <= rr[1]):
            diags.append(Diagnostic("squeezers.poisson.r_range", "must be [low, high] with 0 < low <= high"))
        return t_max - 1 if t_max else None
    diags.append(Diagnostic("squeezers", f"unknown form {form!r}"))
    return None


def validate_config(config: dict, experiments=None) -> list[Diagnostic]:
    """Every violated constraint, each tagged with its field path."""
    diags: list[Diagnostic] = []
    cfg = with_defaults(config)
    if cfg.get("schema") != SCHEMA_VERSION:
        diags.append(Diagnostic("schema", f"unsupported schema {cfg.get('schema')!r}; expected {SCHEMA_VERSION}"))
    name = cfg.get("experiment")
    if not isinstance(name, str):
        diags.append(Diagnostic("experiment", "missing experiment name"))
    elif experiments is not None and name not in experiments:
        diags.append(Diagnostic("experiment", f"unknown experiment {name!r}; known: {', '.join(sorted(experiments))}"))
    if "graph" in cfg:
        _check_graph(cfg["graph"], cfg, diags)
    latest = _check_squeezers(cfg.get("squeezers"), cfg, diags)
    n = cfg.get("ensemble")
    if not _is_int(n) or n < 2:
        diags.append(Diagnostic("ensemble", "must be an integer >= 2"))
    h = cfg.get("horizon")
    if h is not None:
        if not _is_int(h) or h < 0:
            diags.append(Diagnostic("horizon", "must be a nonnegative integer"))
        elif latest is not None and latest > h:
            diags.append(Diagnostic("horizon", f"squeeze event at t={latest} lies beyond the horizon {h}"))
    try:
        EntropyKind.parse(cfg.get("entropy"))
    except ValueError as exc:
        diags.append(Diagnostic("entropy", str(exc)))
    if not _is_int(cfg.get("seed")) or cfg["seed"] < 0:
        diags.append(Diagnostic("seed", "must be a nonnegative integer"))
    if not isinstance(cfg.get("params"), dict):
        diags.append(Diagnostic("params", "must be a mapping"))
    return diags
