"""One test per acceptance criterion, run at the stated sizes and tolerances.

Where a criterion leaves the ensemble size open the default of 100
realizations is used.
"""

import os
import time

import numpy as np
import pytest
from scipy import stats

from cvnet import io, multi, pde, walk
from cvnet.circuit import CircuitRun, SqueezeEvent, ensemble, gate_average_check
from cvnet.experiments import run_experiment, witness_ensemble
from cvnet.gaussian import (
    apply_gate,
    beamsplitter_unitary,
    reduced_covariance,
    squeezer_symplectic,
    symplectic_eigenvalues,
    thermal_entropy,
    unitary_to_symplectic,
    vacuum,
)
from cvnet.graph import cartesian_lattice

THREADS = os.cpu_count() or 1
N_DEFAULT = 100


def central_run(M, r, times, cuts=None):
    g, c = cartesian_lattice(1, M)
    cuts = walk.prefix_cuts(M) if cuts is None else cuts
    return CircuitRun(g, c, [SqueezeEvent(g.center(), 0, r)], int(max(times)), cuts, times)


def test_c01_nu_law(accept):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    err = 0.0
    for eta, r in zip(rng.random(200), rng.uniform(0, 8, 200)):
        V = apply_gate(vacuum(2), squeezer_symplectic(r), [0])
        th = np.arccos(np.sqrt(eta))
        V = apply_gate(V, unitary_to_symplectic(beamsplitter_unitary(th)), [0, 1])
        nu = symplectic_eigenvalues(reduced_covariance(V, [0]))[0]
        err = max(err, abs(nu - np.sqrt(1 + 4 * eta * (1 - eta) * np.sinh(r) ** 2)))
    dt = time.perf_counter() - t0
    assert accept(1, err < 1e-8 and dt < 1.0, f"max |nu error| {err:.2e} (limit 1e-8), {dt:.2f} s")


def test_c02_theory_engine(accept):
    times = [50, 100, 500, 1000]
    run = central_run(101, 5.0, times)
    res = ensemble(run, N_DEFAULT, 0, threads=THREADS)
    theory = walk.theory_curves(run.coloring, run.graph.center(), 5.0, times, run.subsystems)
    dev = walk.relative_one_norm(res.mean, theory)
    detail = ", ".join(f"t={t}: {d:.4f}" for t, d in zip(times, dev)) + " (limit 0.05)"
    assert accept(2, np.all(dev < 0.05), detail)


def test_c03_page_curve(accept, tmp_path):
    cfg = {"schema": 1, "experiment": "page", "graph": {"D": 1, "M": 21}, "ensemble": 200,
           "params": {"r": [2.0, 5.0, 8.0]}}
    cols = io.read_csv(run_experiment(cfg, tmp_path, THREADS) / "page.csv")
    ok, parts = True, []
    for r in (2.0, 5.0, 8.0):
        sel = cols["r"] == r
        z = np.abs(cols["mean"][sel] - cols["theory"][sel]) / cols["stderr"][sel]
        k = np.argmax(cols["mean"][sel])
        S0 = float(thermal_entropy(np.sinh(r / 2) ** 2))
        zp = abs(cols["mean"][sel][k] - S0) / cols["stderr"][sel][k]
        ok &= bool(z.max() < 3 and zp < 2)
        parts.append(f"r={r:g}: max {z.max():.1f} SE, peak {zp:.1f} SE")
    assert accept(3, ok, "; ".join(parts) + " (limits 3 and 2 SE)")


def test_c04_variance(accept, tmp_path):
    cfg = {"schema": 1, "experiment": "variance", "graph": {"D": 1, "M": 41}, "ensemble": N_DEFAULT,
           "params": {"r": 8.0}}
    cols = io.read_csv(run_experiment(cfg, tmp_path, THREADS) / "variance.csv")
    inside = np.abs(cols["var"] - cols["theory"]) < 2 * cols["var_stderr"]
    frac = inside.mean()
    assert accept(4, frac >= 0.9, f"{inside.sum()}/{inside.size} cuts within 2 sigma (need 90%)")


def test_c05_transmissivity_law(accept):
    eta = multi.haar_eta_samples(8, 3, 10_000, np.random.default_rng(5))
    ks = stats.kstest(eta, stats.beta(3, 5).cdf).statistic
    assert accept(5, ks < 0.02, f"KS distance {ks:.4f} (limit 0.02)")


def test_c06_mixing_scaling(accept, tmp_path):
    Ms = [21, 41, 81, 161]
    cfg = {"schema": 1, "experiment": "mixing", "params": {"D": 1, "M": Ms, "epsilon": 1e-7}}
    cols = io.read_csv(run_experiment(cfg, tmp_path, THREADS) / "mixing.csv")
    steps = {m: cols["steps"][cols["method"] == m] for m in ("numeric", "spectral", "hitting", "conductance")}
    slope = walk.power_law_exponent(Ms, steps["numeric"])
    est = np.stack([steps["spectral"], steps["hitting"], steps["conductance"]])
    spread = est.max(axis=0) / est.min(axis=0)
    ok = abs(slope - 2.0) <= 0.1 and np.all(spread <= 3.0)
    detail = (f"numeric slope {slope:.3f} (2 +/- 0.1); estimator spread per M "
              + ", ".join(f"{s:.2f}" for s in spread) + " (limit 3)")
    assert accept(6, ok, detail)


def test_c07_light_cone(accept, tmp_path):
    cfg = {"schema": 1, "experiment": "cone-fit", "graph": {"D": 1, "M": 201},
           "params": {"r": 6.0, "eps1": 0.01, "eps2": 0.70}}
    cols = io.read_csv(run_experiment(cfg, tmp_path, THREADS) / "cone_fit.csv")
    s1, s12 = cols["slope"]
    ok = 1.8 <= s1 <= 2.2 and 1.8 <= s12 <= 2.2
    assert accept(7, ok, f"exponents T1 {s1:.3f}, T1+T2 {s12:.3f} (range [1.8, 2.2])")


def test_c08_superposition(accept, tmp_path):
    M = 201
    g, c = cartesian_lattice(1, M)
    lay = multi.layout_from_fractions(M, [(0.0, 0, 5.0), (-0.35, 200, 3.0), (0.2, 500, 7.0)])
    times = np.arange(0, 1001, 10)
    cuts = walk.prefix_cuts(M)
    run = CircuitRun(g, c, lay.events, 1000, cuts, times)
    res = ensemble(run, N_DEFAULT, 0, threads=THREADS)
    spp = multi.superposition_theory(c, lay.events, times, cuts)
    dev = multi.deviation(res.mean, spp, multi.equilibrium_curve(lay.events, cuts), M).relative
    part1 = bool(dev.max() < 0.02)

    cfg = {"schema": 1, "experiment": "superposition", "graph": {"D": 1, "M": 200, "allow_even": True},
           "ensemble": N_DEFAULT, "params": {"d_values": [20, 60, 200], "layouts": 20, "times": [1000],
                                              "t_max": 500, "r_range": [1.0, 3.0]}}
    cols = io.read_csv(run_experiment(cfg, tmp_path, THREADS) / "deviation.csv")
    delta = cols["delta_spp"]
    part2 = bool(np.all(np.diff(delta) < 0) and np.all(delta < 0.1))
    detail = (f"three-squeezer max delta {dev.max():.4f} (limit 0.02); d=20,60,200 delta at t=1000 "
              + ", ".join(f"{d:.4f}+/-{s:.4f}" for d, s in zip(delta, cols["stderr"]))
              + " (decreasing, < 0.1)")
    assert accept(8, part1 and part2, detail)


def test_c09_gate_average(accept):
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(10):
        w = rng.dirichlet([1, 1, 1])[:2]
        res = gate_average_check(w[0], w[1], 1_000_000, rng)
        worst = max(worst, float(np.max(np.abs(res.mean - w.sum() / 2) / res.stderr)))
    assert accept(9, worst < 3, f"worst deviation {worst:.2f} sigma over 10 pairs (limit 3)")


def test_c10_pde(accept):
    M, r = 101, 5.0
    times = [50, 100, 500, 1000, 5000, 10000]
    c = walk.page_curve(np.arange(1, M), M, r)
    prm = pde.EpidemiologyParams(A=2.3, D=2.0, f=-0.7)
    dt = 0.5 * pde.stable_dt(1.0, prm.D)
    steady = pde.epidemiology_solve(c, M - 1, M // 2, [0, 100 * dt], prm, S0=c)
    drift = np.max(np.abs(steady.S[-1] - c)) / 100
    sol = pde.epidemiology_solve(c, M - 1, M // 2, times, prm)
    res = ensemble(central_run(M, r, times), N_DEFAULT, 0, threads=THREADS)
    lo, hi = int(0.2 * (M - 1)), int(0.8 * (M - 1))
    dev = walk.relative_one_norm(sol.S[:, lo:hi], res.mean[:, lo:hi])
    ok = drift < 1e-10 and np.all(dev < 0.15)
    detail = (f"steady drift {drift:.1e}/step; bulk deviation "
              + ", ".join(f"t={t}: {d:.3f}" for t, d in zip(times, dev)) + " (limit 0.15)")
    assert accept(10, ok, detail)


def test_c11_witness(accept):
    times = np.array([50, 100, 200, 300, 400, 500])
    M = 801
    g, c = cartesian_lattice(1, M)
    run = CircuitRun(g, c, [SqueezeEvent(g.center(), 0, 5.0)], 500,
                     walk.prefix_cuts(M)[[g.center()]], times)
    _, bound = witness_ensemble(run, N_DEFAULT, 0, 1.0)
    ref = 0.5 * np.log2(8 * np.pi * times)
    gap = bound - ref
    detail = ", ".join(f"t={t}: {e:+.3f}" for t, e in zip(times, gap)) + " bits (limit 0.5)"
    assert accept(11, np.all(np.abs(gap) < 0.5), detail)
