"""Several squeezers: superposition of single-squeezer theory, deviations,
space-time Poisson-disk layouts and multi-squeezer Page curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import DenseState, LowRankState, SqueezeEvent
from .gaussian import VON_NEUMANN, EntropyKind, haar_passive, unitary_to_symplectic
from .graph import EdgeColoring
from .walk import entropy_from_eta, entropy_from_eta_large_r, theory_curves


@dataclass(frozen=True)
class SqueezerLayout:
    """Squeezers in space-time with the spacing they were generated at.

    Attributes:
        events: squeeze events, sorted by time then vertex.
        d: minimum pairwise space-time distance (0 when not enforced).
        anisotropy: length of one time step in lattice spacings.
    """

    events: tuple
    d: float = 0.0
    anisotropy: float = 1.0

    def __post_init__(self):
        if not self.events:
            raise ValueError("a layout needs at least one squeezer")
        object.__setattr__(self, "events", tuple(sorted(self.events, key=lambda e: (e.t, e.vertex))))

    @property
    def n_q(self) -> int:
        return len(self.events)

    @property
    def r_bar(self) -> float:
        return float(np.mean([e.r for e in self.events]))

    def density(self, n_modes: int) -> float:
        return self.n_q / n_modes

    def points(self) -> np.ndarray:
        """``(n_q, 2)`` array of ``(vertex, t)``."""
        return np.array([(e.vertex, e.t) for e in self.events], dtype=float)

    def min_distance(self) -> float:
        p = self.points()
        if len(p) < 2:
            return np.inf
        p[:, 1] *= self.anisotropy
        diff = p[:, None, :] - p[None, :, :]
        dist = np.sqrt((diff**2).sum(-1))
        return float(dist[np.triu_indices(len(p), 1)].min())


# --------------------------------------------------------------------------
# superposition


def superpose(curves) -> np.ndarray:
    """Pointwise sum of per-squeezer curves sharing one ``(time, subsystem)`` grid."""
    curves = [np.asarray(c, dtype=float) for c in curves]
    if not curves:
        raise ValueError("nothing to superpose")
    shape = curves[0].shape
    for c in curves[1:]:
        if c.shape != shape:
            raise ValueError(f"grid mismatch: {c.shape} vs {shape}")
    return np.sum(curves, axis=0)


def single_curves(coloring: EdgeColoring, events, times, cuts,
                  kind: EntropyKind = VON_NEUMANN) -> np.ndarray:
    """Walk-theory curve of each squeezer alone, shape ``(n_q, n_times, n_cuts)``."""
    return np.stack([theory_curves(coloring, e.vertex, e.r, times, cuts, kind, t_star=e.t)
                     for e in events])


def superposition_theory(coloring: EdgeColoring, events, times, cuts,
                         kind: EntropyKind = VON_NEUMANN) -> np.ndarray:
    return superpose(single_curves(coloring, events, times, cuts, kind))


def equilibrium_curve(events, cuts, kind: EntropyKind = VON_NEUMANN) -> np.ndarray:
    """Superposed Page profile ``sum_k S(|L|/|G|; r_k)`` over the given cut masks."""
    cuts = np.asarray(cuts, dtype=bool)
    frac = cuts.sum(axis=1) / cuts.shape[1]
    return np.sum([entropy_from_eta(frac, e.r, kind) for e in events], axis=0)


@dataclass(frozen=True)
class Deviation:
    absolute: np.ndarray  # Delta S per mode
    relative: np.ndarray  # delta, relative to the equilibrium norm per mode


def deviation(S: np.ndarray, S_spp: np.ndarray, S_inf: np.ndarray, n_modes: int | None = None) -> Deviation:
    """``Delta S = ||S - S_spp||_1 / |G|`` and ``delta = Delta S / (||S_inf||_1 / |G|)``.

    Norms run over the last axis (subsystems). ``n_modes`` defaults to the
    number of subsystems plus one, which is ``|G|`` for prefix cuts.
    """
    S = np.asarray(S, dtype=float)
    S_spp = np.asarray(S_spp, dtype=float)
    S_inf = np.asarray(S_inf, dtype=float)
    if S.shape != S_spp.shape or S.shape[-1] != S_inf.shape[-1]:
        raise ValueError("deviation needs curves on matching grids")
    n = n_modes if n_modes is not None else S.shape[-1] + 1
    dS = np.abs(S - S_spp).sum(axis=-1) / n
    return Deviation(dS, dS / (np.abs(S_inf).sum(axis=-1) / n))


# --------------------------------------------------------------------------
# space-time Poisson-disk sampling


def poisson_disk_spacetime(n_sites: int, t_range, d: float, rng: np.random.Generator,
                           r_range=(1.0, 3.0), anisotropy: float = 1.0,
                           attempts: int = 30) -> SqueezerLayout:
    """Dart throwing with an active list and background grid on integer ``(x, t)``.

    Sites are ``0 .. n_sites-1`` and times ``t_range[0] .. t_range[1]-1``.
    The distance between ``(x, t)`` and ``(x', t')`` is
    ``sqrt((x-x')^2 + (anisotropy (t-t'))^2)``. Candidates are snapped to the
    lattice before the distance test, so the spacing guarantee is exact.
    Strengths are uniform on ``r_range``.
    """
    if d <= 0:
        raise ValueError("minimum distance must be positive")
    t0, t1 = int(t_range[0]), int(t_range[1])
    if n_sites < 1 or t1 <= t0:
        raise ValueError("empty space-time region")
    lo = np.array([0.0, t0 * anisotropy])
    hi = np.array([n_sites - 1.0, (t1 - 1) * anisotropy])
    cell = d / np.sqrt(2.0)
    shape = tuple(int(s) for s in np.floor((hi - lo) / cell) + 1)
    grid = -np.ones(shape, dtype=int)
    pts: list[np.ndarray] = []

    def snap(p):
        return np.array([np.rint(p[0]), np.rint(p[1] / anisotropy) * anisotropy])

    def fits(p):
        if np.any(p < lo - 1e-9) or np.any(p > hi + 1e-9):
            return False
        g = ((p - lo) // cell).astype(int)
        sl = tuple(slice(max(g[i] - 2, 0), min(g[i] + 3, shape[i])) for i in range(2))
        for j in grid[sl].ravel():
            if j >= 0 and np.hypot(*(pts[j] - p)) < d:
                return False
        return True

    def add(p):
        g = tuple(((p - lo) // cell).astype(int))
        grid[g] = len(pts)
        pts.append(p)

    add(snap(lo + rng.random(2) * (hi - lo)))
    active = [0]
    while active:
        i = active[rng.integers(len(active))]
        for _ in range(attempts):
            ang = 2.0 * np.pi * rng.random()
            rad = d * (1.0 + rng.random())
            p = snap(pts[i] + rad * np.array([np.cos(ang), np.sin(ang)]))
            if fits(p):
                add(p)
                active.append(len(pts) - 1)
                break
        else:
            active.remove(i)
    rs = rng.uniform(r_range[0], r_range[1], size=len(pts))
    events = tuple(SqueezeEvent(int(p[0]), int(round(p[1] / anisotropy)), float(r))
                   for p, r in zip(pts, rs))
    return SqueezerLayout(events, d, anisotropy)


def layout_from_fractions(M: int, triples, center: int | None = None) -> SqueezerLayout:
    """Layout from ``(x_tilde, t, r)`` triples with ``x = round(x_tilde * M)`` from the centre."""
    c = M // 2 if center is None else center
    return SqueezerLayout(tuple(SqueezeEvent(int(c + round(xt * M)), int(t), float(r))
                                for xt, t, r in triples))


# --------------------------------------------------------------------------
# Page curves with several squeezers


@dataclass(frozen=True)
class MultiPageCurve:
    sizes: np.ndarray
    exact: np.ndarray
    approx: np.ndarray


def multi_page_curve(r_values, sizes, n_total: int, kind: EntropyKind = VON_NEUMANN) -> MultiPageCurve:
    """Superposed equilibrium curve and its large-squeezing form in ``(r_bar, n_q)``."""
    r_values = np.atleast_1d(np.asarray(r_values, dtype=float))
    sizes = np.asarray(sizes, dtype=float)
    frac = sizes / n_total
    exact = np.sum([entropy_from_eta(frac, r, kind) for r in r_values], axis=0)
    approx = r_values.size * entropy_from_eta_large_r(frac, r_values.mean())
    return MultiPageCurve(sizes, exact, approx)


def haar_layer_state(r_values, n_modes: int, rng: np.random.Generator, engine: str = "auto"):
    """A layer of squeezers on modes ``0..n_q-1`` followed by a global Haar passive unitary."""
    r_values = np.atleast_1d(np.asarray(r_values, dtype=float))
    nq = r_values.size
    if nq > n_modes:
        raise ValueError("more squeezers than modes")
    U = haar_passive(n_modes, rng)
    if engine == "auto":
        engine = "lowrank" if 4 * nq <= n_modes else "dense"
    if engine == "lowrank":
        st = LowRankState(1, n_modes)
        Z = np.empty((1, n_modes, 2 * nq), dtype=complex)
        Z[0, :, 0::2] = U[:, :nq]
        Z[0, :, 1::2] = 1j * U[:, :nq]
        st.Z = Z
        st.C = np.stack([np.expm1(-2.0 * r_values), np.expm1(2.0 * r_values)], axis=1).ravel()
        return st
    st = DenseState(1, n_modes)
    d = np.ones(2 * n_modes)
    d[0:2 * nq:2] = np.exp(-2.0 * r_values)
    d[1:2 * nq:2] = np.exp(2.0 * r_values)
    S = unitary_to_symplectic(U, check=False)
    st.F = (S * np.sqrt(d))[None]
    return st


def page_equilibrium_samples(r_values, cuts, samples: int, rng: np.random.Generator,
                             kind: EntropyKind = VON_NEUMANN, engine: str = "auto") -> np.ndarray:
    """Equilibrium entropies from global Haar circuits, shape ``(samples, n_cuts)``."""
    cuts = np.asarray(cuts, dtype=bool)
    return np.concatenate([haar_layer_state(r_values, cuts.shape[1], rng, engine).entropies(cuts, kind)
                           for _ in range(samples)])


def haar_eta_samples(n_total: int, size_l: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Transmissivity ``sum_{x in L} |U_{x,0}|^2`` into the first ``size_l`` modes under global Haar ``U``."""
    out = np.empty(samples)
    for i in range(samples):
        u = haar_passive(n_total, rng)[:, 0]
        out[i] = np.sum(np.abs(u[:size_l]) ** 2)
    return out
