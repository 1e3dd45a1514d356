"""Registered experiments. Each one reads a validated configuration, runs the
engine and/or the theory, and writes CSV tables plus a gnuplot data file.

Experiment-specific settings live under ``params``; defaults are chosen to
finish in seconds to minutes on a laptop.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io, multi, pde, sensing, walk
from .circuit import CircuitRun, SqueezeEvent, autocorrelation, ensemble, seeds_for, simulate
from .config import ConfigError, Diagnostic, validate_config, with_defaults, _resolve
from .gaussian import EntropyKind
from .graph import cartesian_lattice, conductance, path_graph, read_edge_list

log = logging.getLogger(__name__)

REGISTRY: dict = {}


def register(name):
    def deco(fn):
        REGISTRY[name] = fn
        return fn
    return deco


@dataclass
class Context:
    config: dict
    out: Path
    threads: int
    manifest: io.RunManifest
    outputs: list = field(default_factory=list)

    @property
    def params(self) -> dict:
        return self.config["params"]

    @property
    def seed(self) -> int:
        return int(self.config["seed"])

    @property
    def kind(self) -> EntropyKind:
        return EntropyKind.parse(self.config["entropy"])

    def csv(self, name, columns, rows):
        p = io.write_csv(self.out / name, columns, rows)
        self.outputs.append(p.name)
        return p

    def dat(self, name, blocks, comment=""):
        p = io.write_gnuplot(self.out / name, blocks, comment)
        self.outputs.append(p.name)
        return p


# --------------------------------------------------------------------------
# shared builders


def build_graph(config: dict):
    g = config.get("graph") or {"D": 1, "M": 101}
    if "edge_list" in g:
        return read_edge_list(_resolve(config, g["edge_list"]))
    D, M = int(g.get("D", 1)), int(g["M"])
    if D == 1 and M % 2 == 0:
        return path_graph(M)
    return cartesian_lattice(D, M)


def _vertex(graph, ev: dict) -> int:
    if "vertex" in ev:
        return int(ev["vertex"])
    return graph.index_of(ev["x"])


def read_layout(path, graph) -> list:
    """Layout CSV with columns ``x, t, r`` (coordinates) or ``vertex, t, r``."""
    cols = io.read_csv(path)
    if "vertex" in cols:
        verts = cols["vertex"].astype(int)
    else:
        verts = [graph.index_of(int(x)) for x in cols["x"]]
    return [SqueezeEvent(int(v), int(t), float(r)) for v, t, r in zip(verts, cols["t"], cols["r"])]


def write_layout(path, events, graph):
    rows = []
    for e in events:
        x = graph.coords[e.vertex, 0] if graph.coords is not None else e.vertex
        rows.append((int(x), e.t, e.r))
    return io.write_csv(path, ["x", "t", "r"], rows)


def build_events(config: dict, graph, rng=None) -> list:
    sq = config.get("squeezers")
    if sq is None:
        return [SqueezeEvent(graph.center(), 0, float(config["params"].get("r", 5.0)))]
    (form, body), = sq.items()
    if form == "single":
        return [SqueezeEvent(_vertex(graph, body), int(body.get("t", 0)), float(body["r"]))]
    if form == "list":
        return [SqueezeEvent(_vertex(graph, ev), int(ev.get("t", 0)), float(ev["r"])) for ev in body]
    if form == "file":
        return read_layout(_resolve(config, body), graph)
    if form == "poisson":
        rng = rng or np.random.default_rng(config["seed"])
        lay = multi.poisson_disk_spacetime(graph.n_vertices, (0, int(body["t_max"])), float(body["d"]), rng,
                                           tuple(body.get("r_range", (1.0, 3.0))),
                                           float(body.get("anisotropy", 1.0)))
        return list(lay.events)
    raise ConfigError([Diagnostic("squeezers", f"unknown form {form!r}")])


def _x_of_cuts(graph, n_cuts):
    """Coordinate of the last vertex in each prefix cut (1-D graphs)."""
    if graph.coords is not None:
        return graph.coords[:n_cuts, 0]
    return np.arange(n_cuts)


def _mean_rows(times, x, mean, var, se, n):
    for i, t in enumerate(times):
        for j, xx in enumerate(x):
            yield (int(t), int(xx), mean[i, j], var[i, j], se[i, j], n)


def _summary_rows(times, stats, n):
    for i, t in enumerate(times):
        for j in range(stats.mean.shape[1]):
            yield (int(t), j, stats.mean[i, j], stats.var[i, j], stats.stderr[i, j], n)


# --------------------------------------------------------------------------
# experiments


@register("simulate")
def exp_simulate(ctx: Context):
    """Ensemble run on prefix cuts; table ``t, subsystem_id, mean, var, stderr, n``."""
    graph, col = build_graph(ctx.config)
    events = build_events(ctx.config, graph)
    horizon = ctx.config["horizon"] or 100
    times = np.asarray(ctx.params.get("times", np.linspace(0, horizon, 11).astype(int)))
    cuts = walk.prefix_cuts(graph.n_vertices)
    run = CircuitRun(graph, col, events, horizon, cuts, times, ctx.kind)
    res = ensemble(run, ctx.config["ensemble"], ctx.seed, ctx.params.get("engine", "auto"), ctx.threads)
    ctx.manifest.seeds = res.seeds
    ctx.csv("entropy.csv", ["t", "subsystem_id", "mean", "var", "stderr", "n"],
            _summary_rows(times, res.stats, res.stats.n))
    x = _x_of_cuts(graph, len(cuts))
    ctx.dat("entropy.dat", [(f"t={int(t)}", ["x", "mean", "stderr"],
                             zip(x, res.mean[i], res.stderr[i])) for i, t in enumerate(times)])


@register("theory")
def exp_theory(ctx: Context):
    """Walk-theory curves ``x_tilde, t, S_bits`` for the configured squeezers."""
    graph, col = build_graph(ctx.config)
    events = build_events(ctx.config, graph)
    horizon = ctx.config["horizon"] or 1000
    times = np.asarray(ctx.params.get("times", np.linspace(0, horizon, 11).astype(int)))
    cuts = walk.prefix_cuts(graph.n_vertices)
    S = multi.superposition_theory(col, events, times, cuts, ctx.kind)
    x = _x_of_cuts(graph, len(cuts)) / graph.n_vertices
    ctx.csv("theory.csv", ["x_tilde", "t", "S_bits"],
            ((x[j], int(t), S[i, j]) for i, t in enumerate(times) for j in range(len(x))))
    ctx.dat("theory.dat", [(f"t={int(t)}", ["x_tilde", "S_bits"], zip(x, S[i]))
                           for i, t in enumerate(times)])


@register("page")
def exp_page(ctx: Context):
    """Equilibrium Page curves from circuits run for several mixing times."""
    p = ctx.params
    graph, col = build_graph(ctx.config)
    n = graph.n_vertices
    r_values = np.atleast_1d(p.get("r", [2.0, 5.0, 8.0])).astype(float)
    t_mix = walk.numeric_mixing_time(col, p.get("epsilon", walk.DEFAULT_EPSILON))
    t_eq = int(p.get("t_factor", 5) * t_mix)
    cuts = walk.prefix_cuts(n)
    sizes = cuts.sum(axis=1)
    rows, blocks = [], []
    for r in r_values:
        run = CircuitRun(graph, col, [SqueezeEvent(graph.center(), 0, float(r))], t_eq, cuts, [t_eq], ctx.kind)
        res = ensemble(run, ctx.config["ensemble"], ctx.seed, p.get("engine", "auto"), ctx.threads)
        theory = walk.page_curve(sizes, n, r, ctx.kind)
        approx = walk.page_curve_approx(sizes, n, r)
        for j, s in enumerate(sizes):
            rows.append((r, int(s), res.mean[0, j], res.var[0, j], res.stderr[0, j], res.stats.n,
                         theory[j], approx[j]))
        blocks.append((f"r={r}", ["size", "mean", "stderr", "theory"],
                       zip(sizes, res.mean[0], res.stderr[0], theory)))
    ctx.manifest.seeds = seeds_for(ctx.seed, ctx.config["ensemble"])
    ctx.csv("page.csv", ["r", "size", "mean", "var", "stderr", "n", "theory", "approx"], rows)
    ctx.dat("page.dat", blocks, f"equilibrium at t={t_eq} (5 x numeric mixing time {t_mix})")
    layer = p.get("layer_r")
    if layer:
        rng = np.random.default_rng(ctx.seed)
        samples = multi.page_equilibrium_samples(layer, cuts, int(p.get("layer_samples", 20)), rng, ctx.kind)
        curve = multi.multi_page_curve(layer, sizes, n, ctx.kind)
        ctx.csv("page_multi.csv", ["size", "mean", "stderr", "superposition", "approx"],
                zip(sizes, samples.mean(0), samples.std(0, ddof=1) / np.sqrt(len(samples)),
                    curve.exact, curve.approx))


@register("variance")
def exp_variance(ctx: Context):
    """Equilibrium variance of the entropy against the first-order prediction."""
    p = ctx.params
    graph, col = build_graph(ctx.config)
    n = graph.n_vertices
    r = float(p.get("r", 8.0))
    t_eq = int(p.get("t_factor", 5) * walk.numeric_mixing_time(col))
    cuts = walk.prefix_cuts(n)
    sizes = cuts.sum(axis=1)
    run = CircuitRun(graph, col, [SqueezeEvent(graph.center(), 0, r)], t_eq, cuts, [t_eq], ctx.kind)
    res = ensemble(run, ctx.config["ensemble"], ctx.seed, p.get("engine", "auto"), ctx.threads,
                   keep_samples=True)
    var, var_se = sample_variance_with_error(res.samples[:, 0, :])
    theory = walk.page_variance(sizes, n, r, ctx.kind)
    ctx.manifest.seeds = res.seeds
    ctx.csv("variance.csv", ["size", "var", "var_stderr", "theory", "n"],
            ((int(s), var[j], var_se[j], theory[j], res.stats.n) for j, s in enumerate(sizes)))
    ctx.dat("variance.dat", [("variance", ["size", "var", "var_stderr", "theory"],
                              zip(sizes, var, var_se, theory))])


def sample_variance_with_error(x: np.ndarray):
    """Unbiased variance along axis 0 and its standard error from the fourth moment."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    d = x - x.mean(axis=0)
    m2 = (d**2).mean(axis=0)
    m4 = (d**4).mean(axis=0)
    var = m2 * n / (n - 1)
    se = np.sqrt(np.maximum(m4 - (n - 3) / (n - 1) * m2**2, 0.0) / n)
    return var, se


@register("autocorr")
def exp_autocorr(ctx: Context):
    p = ctx.params
    graph, col = build_graph(ctx.config)
    r = float(p.get("r", 5.0))
    lo, hi = p.get("interval", [-30, -10])
    mask = np.zeros(graph.n_vertices, dtype=bool)
    xs = graph.coords[:, 0] if graph.coords is not None else np.arange(graph.n_vertices)
    mask[(xs >= lo) & (xs <= hi)] = True
    if not mask.any() or mask.all():
        raise ValueError(f"interval [{lo}, {hi}] must select a proper nonempty subset of the graph")
    t_mix = walk.numeric_mixing_time(col)
    burn = int(p.get("burn_in", 2 * t_mix))
    lags = np.asarray(p.get("lags", np.linspace(0, 2 * t_mix, 21).astype(int)))
    window = int(p.get("window", t_mix))
    run = CircuitRun(graph, col, [SqueezeEvent(graph.center(), 0, r)], 0, mask[None], [0], ctx.kind)
    ac = autocorrelation(run, 0, lags, burn, window, ctx.config["ensemble"], ctx.seed,
                         p.get("engine", "auto"))
    ctx.manifest.seeds = seeds_for(ctx.seed, ctx.config["ensemble"])
    ctx.csv("autocorr.csv", ["dt", "G_normalized", "G"], zip(ac.lags, ac.normalized, ac.G))
    ctx.dat("autocorr.dat", [("autocorrelation", ["dt", "G_normalized"], zip(ac.lags, ac.normalized))],
            f"numeric mixing time {t_mix}")


@register("mixing")
def exp_mixing(ctx: Context):
    """Four mixing-time estimates over a list of side lengths."""
    p = ctx.params
    D = int(p.get("D", (ctx.config.get("graph") or {}).get("D", 1)))
    Ms = [int(m) for m in p.get("M", [21, 41, 81, 161])]
    eps = float(p.get("epsilon", walk.DEFAULT_EPSILON))
    methods = p.get("methods", ["numeric", "spectral", "hitting", "conductance"])
    rows = []
    rng = np.random.default_rng(ctx.seed)
    for M in Ms:
        graph, col = cartesian_lattice(D, M)
        phi = None
        if "conductance" in methods:
            if D == 1:
                phi = M**2 / ((M - 1) * (M // 2) * (M - M // 2))  # half cut is optimal on a path
            else:
                phi = conductance(graph, rng=rng).value
        for m in methods:
            mt = walk.mixing_time(graph, col, eps, m, conductance_value=phi)
            rows.append((M, m, eps, mt.steps))
    ctx.csv("mixing.csv", ["M", "method", "epsilon", "steps"], rows)
    ctx.dat("mixing.dat", [(m, ["M", "steps"], [(r[0], r[3]) for r in rows if r[1] == m])
                           for m in methods])


@register("theory-vs-engine")
def exp_theory_vs_engine(ctx: Context):
    p = ctx.params
    graph, col = build_graph(ctx.config)
    events = build_events(ctx.config, graph)
    times = np.asarray(p.get("times", [50, 100, 500, 1000]))
    horizon = int(max(times.max(), ctx.config["horizon"] or 0))
    cuts = walk.prefix_cuts(graph.n_vertices)
    run = CircuitRun(graph, col, events, horizon, cuts, times, ctx.kind)
    res = ensemble(run, ctx.config["ensemble"], ctx.seed, p.get("engine", "auto"), ctx.threads)
    theory = multi.superposition_theory(col, events, times, cuts, ctx.kind)
    dev = walk.relative_one_norm(res.mean, theory)
    x = _x_of_cuts(graph, len(cuts))
    ctx.manifest.seeds = res.seeds
    ctx.csv("curves.csv", ["t", "x", "engine_mean", "engine_stderr", "theory"],
            ((int(t), int(x[j]), res.mean[i, j], res.stderr[i, j], theory[i, j])
             for i, t in enumerate(times) for j in range(len(x))))
    ctx.csv("deviation.csv", ["t", "relative_one_norm"], zip(times, dev))
    ctx.dat("curves.dat", [(f"t={int(t)}", ["x", "engine", "stderr", "theory"],
                            zip(x, res.mean[i], res.stderr[i], theory[i])) for i, t in enumerate(times)])
    sizes = p.get("continuum_M")
    if sizes:
        r = events[0].r
        t_tilde = np.asarray(p.get("t_tilde", np.geomspace(1e-4, 1e-1, 13)))
        rows = []
        for M in sizes:
            g2, c2 = cartesian_lattice(1, int(M))
            cuts2 = walk.prefix_cuts(int(M))
            ts = np.maximum(np.rint(t_tilde * M**2).astype(int), 1)
            S = walk.theory_curves(c2, g2.center(), r, ts, cuts2, ctx.kind)
            Sinf = walk.page_curve(cuts2.sum(1), int(M), r, ctx.kind)
            for tt, d in zip(t_tilde, walk.continuum_deviation(S, Sinf)):
                rows.append((int(M), tt, d))
        ctx.csv("continuum.csv", ["M", "t_tilde", "delta_dy"], rows)


def light_cone_probe(graph, col, r, probes, kind, source="theory", n=100, seed=0,
                     eps1=0.01, eps2=0.70, threads=1, horizon=None):
    """Light-cone times for left-part cuts ending at the probed vertices.

    The engine source samples every step up to ``horizon``.
    """
    n_v = graph.n_vertices
    cuts = walk.prefix_cuts(n_v)[np.asarray(probes) - 1]
    S_inf = walk.page_curve(cuts.sum(1), n_v, r, kind)
    if source == "theory":
        return walk.theory_light_cone(col, graph.center(), r, cuts, S_inf, eps1, eps2, kind)
    times = np.arange(int(horizon) + 1)
    run = CircuitRun(graph, col, [SqueezeEvent(graph.center(), 0, r)], int(horizon), cuts, times, kind)
    S = ensemble(run, n, seed, threads=threads).mean
    return walk.light_cone(S, times, S_inf, eps1, eps2)


def cone_offsets(M: int) -> np.ndarray:
    """Probe distances spanning 0.1 M to 0.45 M: past the ballistic onset near
    the source (where T1 is pinned to the distance) and short of the boundary."""
    lo, hi = max(2, round(0.1 * M)), max(3, round(0.45 * M))
    return np.unique(np.linspace(lo, hi, 8).round().astype(int))


@register("cone-fit")
def exp_cone_fit(ctx: Context):
    p = ctx.params
    graph, col = build_graph(ctx.config)
    M = graph.n_vertices
    r = float(p.get("r", 6.0))
    c = graph.center()
    offsets = np.asarray(p.get("offsets", cone_offsets(M)))
    probes = c + 1 - offsets  # left part ends offsets-1 sites left of the squeezer
    horizon = int(p.get("horizon", (0.5 * M) ** 2 // 4))
    lc = light_cone_probe(graph, col, r, probes, ctx.kind, p.get("source", "theory"),
                          ctx.config["ensemble"], ctx.seed, p.get("eps1", 0.01), p.get("eps2", 0.70),
                          ctx.threads, horizon)
    dx = offsets / M
    s1 = walk.power_law_exponent(dx, lc.T1)
    s12 = walk.power_law_exponent(dx, lc.T12)
    ctx.csv("cone.csv", ["dx_tilde", "T1", "T2", "T1_plus_T2"], zip(dx, lc.T1, lc.T2, lc.T12))
    ctx.csv("cone_fit.csv", ["quantity", "slope"], [("T1", s1), ("T1_plus_T2", s12)])
    ctx.dat("cone.dat", [("cone", ["dx_tilde", "T1", "T1_plus_T2"], zip(dx, lc.T1, lc.T12))],
            f"fitted slopes: T1 {s1:.3f}, T1+T2 {s12:.3f}")


@register("lightcone")
def exp_lightcone(ctx: Context):
    """Heat map of the mean entropy of left-part cuts over space and time."""
    p = ctx.params
    graph, col = build_graph(ctx.config)
    events = build_events(ctx.config, graph)
    horizon = ctx.config["horizon"] or 1000
    times = np.asarray(p.get("times", np.linspace(0, horizon, 51).astype(int)))
    cuts = walk.prefix_cuts(graph.n_vertices)
    if p.get("source", "engine") == "engine":
        run = CircuitRun(graph, col, events, horizon, cuts, times, ctx.kind)
        res = ensemble(run, ctx.config["ensemble"], ctx.seed, threads=ctx.threads)
        S = res.mean
        ctx.manifest.seeds = res.seeds
    else:
        S = multi.superposition_theory(col, events, times, cuts, ctx.kind)
    x = _x_of_cuts(graph, len(cuts))
    ctx.csv("lightcone.csv", ["t", "x", "S_bits"],
            ((int(t), int(x[j]), S[i, j]) for i, t in enumerate(times) for j in range(len(x))))
    blocks = [("heatmap", ["x", "t", "S_bits"],
               [(int(x[j]), int(t), S[i, j]) for i, t in enumerate(times) for j in range(len(x))])]
    ctx.dat("lightcone.dat", blocks, "gnuplot: splot with pm3d; rows ordered by t then x")


def superposition_deviation(graph, col, events, times, n, seed, kind, threads=1, engine="auto"):
    cuts = walk.prefix_cuts(graph.n_vertices)
    run = CircuitRun(graph, col, events, int(max(times)), cuts, times, kind)
    res = ensemble(run, n, seed, engine, threads)
    spp = multi.superposition_theory(col, events, times, cuts, kind)
    inf = multi.equilibrium_curve(events, cuts, kind)
    return multi.deviation(res.mean, spp, inf, graph.n_vertices), res


@register("superposition")
def exp_superposition(ctx: Context):
    p = ctx.params
    graph, col = build_graph(ctx.config)
    times = np.asarray(p.get("times", np.arange(0, 1001, 50)))
    n = ctx.config["ensemble"]
    sweep = p.get("d_values")
    if not sweep:
        events = build_events(ctx.config, graph)
        dev, res = superposition_deviation(graph, col, events, times, n, ctx.seed, ctx.kind, ctx.threads)
        ctx.manifest.seeds = res.seeds
        write_layout(ctx.out / "layout.csv", events, graph)
        ctx.outputs.append("layout.csv")
        ctx.csv("superposition.csv", ["t", "Delta_S", "delta_spp"], zip(times, dev.absolute, dev.relative))
        ctx.dat("superposition.dat", [("delta_spp", ["t", "delta_spp"], zip(times, dev.relative))])
        return
    n_layouts = int(p.get("layouts", 20))
    t_max = int(p.get("t_max", 500))
    r_range = tuple(p.get("r_range", (1.0, 3.0)))
    rows = []
    for d in sweep:
        rel = []
        for k in range(n_layouts):
            rng = np.random.default_rng([ctx.seed, int(round(float(d) * 1000)), k])
            lay = multi.poisson_disk_spacetime(graph.n_vertices, (0, t_max), float(d), rng, r_range,
                                               float(p.get("anisotropy", 1.0)))
            # base ^ i seed sets overlap for nearby bases, so each layout gets a hashed base
            base = int(np.random.SeedSequence([ctx.seed, int(round(float(d) * 1000)), k]).generate_state(1)[0])
            dev, _ = superposition_deviation(graph, col, lay.events, times, n, base, ctx.kind, ctx.threads)
            rel.append(dev.relative)
        rel = np.array(rel)
        for i, t in enumerate(times):
            rows.append((float(d), int(t), rel[:, i].mean(), rel[:, i].std(ddof=1) / np.sqrt(n_layouts)))
    ctx.csv("deviation.csv", ["d", "t", "delta_spp", "stderr"], rows)
    ctx.dat("deviation.dat", [(f"t={int(t)}", ["d", "delta_spp", "stderr"],
                               [(r[0], r[2], r[3]) for r in rows if r[1] == t]) for t in times])


@register("witness")
def exp_witness(ctx: Context):
    p = ctx.params
    graph, col = build_graph(ctx.config)
    r = float(p.get("r", 5.0))
    n_s = float(p.get("N_S", 1.0))
    times = np.asarray(p.get("times", [50, 100, 200, 300, 400, 500]))
    run = CircuitRun(graph, col, [SqueezeEvent(graph.center(), 0, r)], int(times.max()),
                     walk.prefix_cuts(graph.n_vertices)[[graph.center()]], times, ctx.kind)
    n = ctx.config["ensemble"]
    m_eff, bounds = witness_ensemble(run, n, ctx.seed, n_s)
    closed = sensing.witness_closed_form(graph.dim or 1, times)
    ctx.manifest.seeds = seeds_for(ctx.seed, n)
    ctx.csv("witness.csv", ["t", "effective_modes", "witness_bound_bits"], zip(times, m_eff, bounds))
    ctx.dat("witness.dat", [("witness", ["t", "bound", "closed_form"], zip(times, bounds, closed))])


def witness_ensemble(run: CircuitRun, n: int, seed: int, n_s: float, chunk: int = 25):
    """Realization means of the effective mode number and of the witness bound.

    The bound is evaluated per realization and then averaged.
    """
    m_eff = np.zeros(run.sample_times.size)
    total = np.zeros(run.sample_times.size)
    for s in range(0, n, chunk):
        res = simulate(run, seeds_for(seed, min(chunk, n - s), s), "lowrank", track=True)
        m_eff += sensing.effective_modes(res.weights).sum(axis=0)
        total += sensing.witness_bound(res.weights, n_s).sum(axis=0)
    return m_eff / n, total / n


@register("pde")
def exp_pde(ctx: Context):
    p = ctx.params
    graph, col = build_graph(ctx.config)
    M = graph.n_vertices
    r = float(p.get("r", 5.0))
    times = np.asarray(p.get("times", [50, 100, 200, 500, 1000, 2000, 5000, 10000]), dtype=float)
    sizes = np.arange(1, M)
    c = walk.page_curve(sizes, M, r, ctx.kind) if p.get("c", "page") == "page" else walk.max_entropy(r, ctx.kind)
    prm = pde.EpidemiologyParams(A=float(p.get("A", 2.3)), D=float(p.get("D", 2.0)), f=float(p.get("f", -0.7)))
    res = pde.epidemiology_solve(c, M - 1, M // 2, times, prm)
    x = _x_of_cuts(graph, M - 1)
    ctx.csv("pde.csv", ["x", "t", "S_T", "G"],
            ((int(x[j]), t, res.S[i, j], res.G[i, j]) for i, t in enumerate(times) for j in range(M - 1)))
    ctx.dat("pde.dat", [(f"t={t:g}", ["x", "S_T"], zip(x, res.S[i])) for i, t in enumerate(times)])


@register("2d-snapshots")
def exp_2d(ctx: Context):
    """Theory snapshots on a square lattice for corner and centred boxes."""
    p = ctx.params
    g = ctx.config.get("graph") or {}
    M = int(g.get("M", 21))
    graph, col = cartesian_lattice(2, M)
    r = float(p.get("r", 5.0))
    times = np.asarray(p.get("times", [4, 12, 20]))
    N = M // 2
    xs = np.arange(-N, N + 1)
    X1, X2 = np.meshgrid(xs, xs, indexing="ij")
    coords = graph.coords
    corner = np.array([(coords[:, 0] <= a) & (coords[:, 1] <= b) for a, b in zip(X1.ravel(), X2.ravel())])
    centred = np.array([(np.abs(coords[:, 0]) <= abs(a)) & (np.abs(coords[:, 1]) <= abs(b))
                        for a, b in zip(X1.ravel(), X2.ravel())])
    blocks = []
    rows = []
    for name, masks in (("corner", corner), ("centred", centred)):
        S = walk.theory_curves(col, graph.center(), r, times, masks, ctx.kind)
        S_inf = walk.entropy_from_eta(masks.sum(1) / graph.n_vertices, r, ctx.kind)
        for i, t in enumerate(list(times) + ["inf"]):
            vals = S[i] if t != "inf" else S_inf
            for k, (a, b) in enumerate(zip(X1.ravel(), X2.ravel())):
                rows.append((name, t, int(a), int(b), vals[k]))
            blocks.append((f"{name} t={t}", ["x1", "x2", "S_bits"],
                           [(int(a), int(b), vals[k]) for k, (a, b) in enumerate(zip(X1.ravel(), X2.ravel()))]))
    ctx.csv("snapshots.csv", ["region", "t", "x1", "x2", "S_bits"], rows)
    ctx.dat("snapshots.dat", blocks)


# --------------------------------------------------------------------------
# dispatch


def run_experiment(config: dict, out=None, threads: int = 1) -> Path:
    """Validate, write the manifest, dispatch, then finalise the manifest.

    Raises:
        ConfigError: listing every invalid field.
    """
    diags = validate_config(config, REGISTRY)
    if diags:
        raise ConfigError(diags)
    cfg = with_defaults(config)
    name = cfg["experiment"]
    out = Path(out or cfg.get("out") or Path("results") / name)
    out.mkdir(parents=True, exist_ok=True)
    public = {k: v for k, v in cfg.items() if not k.startswith("_")}
    manifest = io.RunManifest(name, public, int(cfg["seed"]))
    manifest.write(out / "manifest.json")
    ctx = Context(cfg, out, threads, manifest)
    t0 = time.time()
    log.info("running %s into %s", name, out)
    REGISTRY[name](ctx)
    manifest.wall_clock = time.time() - t0
    manifest.outputs = ctx.outputs
    manifest.write(out / "manifest.json")
    return out
