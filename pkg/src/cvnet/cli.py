"""Command-line entry point: ``cvnet <subcommand> [flags]``.

Flags given on the command line override the matching fields of ``--config``.
Output goes to ``--out``, else ``$CVNET_OUT/<experiment>``, else
``results/<experiment>``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config, validate_config
from .experiments import REGISTRY, run_experiment

OUT_ENV = "CVNET_OUT"

# subcommand -> registered experiment
SUBCOMMANDS = {
    "simulate": "simulate",
    "theory": "theory",
    "page-curve": "page",
    "variance": "variance",
    "mixing-time": "mixing",
    "lightcone": "lightcone",
    "superposition": "superposition",
    "witness": "witness",
    "pde": "pde",
}


def int_range(text: str) -> list[int]:
    """Parse ``21,41,81``, ``21..201`` (step 2) or ``21..201:20``."""
    out = []
    for part in text.split(","):
        if ".." in part:
            lo, rest = part.split("..", 1)
            hi, _, step = rest.partition(":")
            out.extend(range(int(lo), int(hi) + 1, int(step) if step else 2))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return out


def float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("global")
    g.add_argument("--config", type=Path, help="YAML configuration file")
    g.add_argument("--seed", type=int, help="base seed (realization i uses seed ^ i)")
    g.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker processes")
    g.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV}/<experiment>)")
    g.add_argument("-v", "--verbose", action="store_true")


def _model(p: argparse.ArgumentParser):
    p.add_argument("--D", type=int, help="lattice dimension")
    p.add_argument("--M", help="side length (mixing-time accepts a range, e.g. 21..201)")
    p.add_argument("--edge-list", type=Path, help="graph and coloring file")
    p.add_argument("--r", help="squeezing strength(s), comma separated where allowed")
    p.add_argument("--x", type=int, help="squeezer coordinate (default: centre)")
    p.add_argument("--layout", type=Path, help="CSV of squeezers with columns x, t, r")
    p.add_argument("--ensemble", type=int, help="number of realizations")
    p.add_argument("--horizon", type=int)
    p.add_argument("--times", type=int_range, help="sample times, e.g. 0..1000:50")
    p.add_argument("--entropy", help="von_neumann or renyi:<alpha>")
    p.add_argument("--eps", type=float, help="mixing-time accuracy")
    p.add_argument("--engine", choices=["auto", "dense", "lowrank"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvnet", description="Gaussian entanglement dynamics on circuit networks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, exp in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {exp!r} experiment")
        _common(p)
        _model(p)
        if name == "superposition":
            p.add_argument("--d", type=float_list, help="Poisson spacings to sweep, e.g. 20,60,200")
            p.add_argument("--layouts", type=int, help="layouts per spacing")
        if name == "witness":
            p.add_argument("--N-S", dest="N_S", type=float, help="photons per mode")
    p = sub.add_parser("run", help="run any registered experiment from a config")
    _common(p)
    _model(p)
    p.add_argument("--experiment", choices=sorted(REGISTRY))
    p = sub.add_parser("validate", help="check a configuration and list every problem")
    _common(p)
    return parser


def config_from_args(args) -> dict:
    cfg = load_config(args.config) if args.config else {"schema": 1}
    if args.command in SUBCOMMANDS:
        cfg["experiment"] = SUBCOMMANDS[args.command]
    elif getattr(args, "experiment", None):
        cfg["experiment"] = args.experiment
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.command == "validate":
        return cfg
    params = dict(cfg.get("params") or {})
    graph = dict(cfg.get("graph") or {})
    if args.edge_list:
        graph = {"edge_list": str(args.edge_list)}
    if args.D is not None:
        graph["D"] = args.D
        params["D"] = args.D
    if args.M is not None:
        Ms = int_range(args.M)
        if cfg["experiment"] == "mixing":
            params["M"] = Ms
        else:
            graph["M"] = Ms[0]
    if graph and "edge_list" not in graph:
        graph.setdefault("D", 1)
        if graph.get("D") == 1 and graph.get("M", 1) % 2 == 0:
            graph["allow_even"] = True
    if "M" in graph or "edge_list" in graph:
        cfg["graph"] = graph
    if args.r is not None:
        rs = float_list(args.r)
        params["r"] = rs if len(rs) > 1 or cfg["experiment"] == "page" else rs[0]
    if args.layout:
        cfg["squeezers"] = {"file": str(args.layout.resolve())}
    elif args.x is not None:
        cfg["squeezers"] = {"single": {"x": args.x, "t": 0, "r": float(float_list(args.r)[0]) if args.r else 5.0}}
    for key in ("ensemble", "horizon", "entropy"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    if args.times is not None:
        params["times"] = args.times
    if args.eps is not None:
        params["epsilon"] = args.eps
    if args.engine is not None:
        params["engine"] = args.engine
    if getattr(args, "d", None):
        params["d_values"] = args.d
    if getattr(args, "layouts", None):
        params["layouts"] = args.layouts
    if getattr(args, "N_S", None) is not None:
        params["N_S"] = args.N_S
    cfg["params"] = params
    return cfg


def resolve_out(args, cfg) -> Path:
    if args.out:
        return args.out
    if cfg.get("out"):
        return Path(cfg["out"])
    root = Path(os.environ.get(OUT_ENV, "results"))
    return root / str(cfg.get("experiment", "run"))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (ConfigError, argparse.ArgumentTypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        diags = validate_config(cfg, REGISTRY)
        for d in diags:
            print(d, file=sys.stderr)
        if not diags:
            print("configuration OK")
        return 1 if diags else 0
    try:
        out = run_experiment(cfg, resolve_out(args, cfg), args.threads)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
