"""Monte Carlo simulation of random Gaussian circuits on a network.

Two exact backends share one gate stream:

* ``dense`` keeps the full covariance matrices, shape ``(B, 2M, 2M)``.
* ``lowrank`` stores ``V = I + Y C Y^T`` where ``Y`` has two columns per
  squeezer. Columns are kept as complex amplitudes ``z = x + i p`` per mode, so
  a passive gate acts as ``z -> U z`` on the pair of modes it touches. Cost
  scales with the number of squeezers rather than with ``M^2``.

Per-realization randomness comes from ``np.random.default_rng(seed)`` with
``seed = base ^ i``. Gate uniforms are drawn in fixed blocks of steps so a
realization's circuit does not depend on how realizations are batched.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .gaussian import (
    VON_NEUMANN,
    EntropyKind,
    entropy_from_nu,
    gate_unitaries_from_uniforms,
    quadrature_indices,
    symplectic_eigenvalues_factor,
    thermal_entropy,
    unitary_to_symplectic,
)
from .graph import EdgeColoring, NetworkGraph

log = logging.getLogger(__name__)

GATE_BLOCK = 64
GRAM_RTOL = 1e-12
DEFAULT_CHUNK = 25


@dataclass(frozen=True)
class SqueezeEvent:
    """Single-mode squeezer of strength ``r`` on ``vertex`` at step ``t``."""

    vertex: int
    t: int
    r: float

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("squeeze time must be nonnegative")
        if not (np.isfinite(self.r) and self.r > 0):
            raise ValueError("squeezing strength must be positive and finite")


@dataclass
class CircuitRun:
    """A circuit and its measurement plan.

    Attributes:
        graph, coloring: network and its gate rounds.
        events: squeezers; at most one per ``(vertex, t)``.
        horizon: number of steps ``T``; samples may be taken at ``0 .. T``.
        subsystems: boolean masks ``(n_sub, M)``.
        sample_times: times at which entropies are recorded.
        kind: entropy kind.
    """

    graph: NetworkGraph
    coloring: EdgeColoring
    events: tuple
    horizon: int
    subsystems: np.ndarray
    sample_times: np.ndarray
    kind: EntropyKind = VON_NEUMANN

    def __post_init__(self):
        self.events = tuple(sorted(self.events, key=lambda e: (e.t, e.vertex)))
        n = self.graph.n_vertices
        if self.coloring.n_vertices != n:
            raise ValueError("colouring and graph disagree on the vertex count")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        keys = [(e.vertex, e.t) for e in self.events]
        if len(set(keys)) != len(keys):
            raise ValueError("at most one squeeze event per (vertex, time)")
        for e in self.events:
            if not 0 <= e.vertex < n:
                raise IndexError(f"squeeze vertex {e.vertex} out of range")
            if e.t > self.horizon:
                raise ValueError(f"squeeze event at t={e.t} beyond horizon {self.horizon}")
        self.subsystems = np.atleast_2d(np.asarray(self.subsystems, dtype=bool))
        if self.subsystems.shape[1] != n:
            raise ValueError("subsystem masks must have one column per vertex")
        self.sample_times = np.asarray(self.sample_times, dtype=int).ravel()
        if self.sample_times.size and (self.sample_times.min() < 0
                                       or self.sample_times.max() > self.horizon):
            raise ValueError("sample times must lie in [0, horizon]")

    @property
    def n_modes(self) -> int:
        return self.graph.n_vertices


def seeds_for(base_seed: int, n: int, start: int = 0) -> list[int]:
    """Per-realization seeds ``base ^ i``."""
    return [int(base_seed) ^ i for i in range(start, start + n)]


# --------------------------------------------------------------------------
# gate stream


class GateStream:
    """Haar two-mode unitaries for a batch of realizations, step by step.

    Each realization owns a generator; every ``GATE_BLOCK`` steps it draws a
    ``(GATE_BLOCK, P_max, 5)`` block of uniforms, of which step ``s`` uses the
    first ``|E_k|`` rows.
    """

    def __init__(self, seeds, coloring: EdgeColoring):
        self.rngs = [np.random.default_rng(s) for s in seeds]
        self.coloring = coloring
        self.pmax = max(1, coloring.max_round_size)
        self._block = None
        self._block_start = None

    def __call__(self, step: int) -> np.ndarray:
        start = step - step % GATE_BLOCK
        if self._block_start != start:
            if self._block_start is not None and start != self._block_start + GATE_BLOCK:
                raise ValueError("gate stream must be consumed in step order")
            if self._block_start is None and start != 0:
                raise ValueError("gate stream must start at step 0")
            u = np.stack([rng.random((GATE_BLOCK, self.pmax, 5)) for rng in self.rngs])
            self._block = gate_unitaries_from_uniforms(u)
            self._block_start = start
        p = len(self.coloring.rounds[step % self.coloring.K])
        return self._block[:, step % GATE_BLOCK, :p]


# --------------------------------------------------------------------------
# backends


class DenseState:
    """Batch of full Gaussian states stored as symplectic factors ``V = F F^T``.

    Gates act on the rows of ``F`` only, and entropies come from a QR of the
    subsystem rows, which stays accurate when ``V`` is badly conditioned.
    """

    name = "dense"

    def __init__(self, batch: int, n_modes: int):
        self.n_modes = n_modes
        self.F = np.broadcast_to(np.eye(2 * n_modes), (batch, 2 * n_modes, 2 * n_modes)).copy()

    @property
    def V(self) -> np.ndarray:
        return self.F @ np.swapaxes(self.F, -1, -2)

    def squeeze(self, vertex: int, r: float):
        s = np.array([np.exp(-r), np.exp(r)])
        self.F[:, 2 * vertex:2 * vertex + 2, :] *= s[None, :, None]

    def passive(self, pairs: np.ndarray, U: np.ndarray):
        if not len(pairs):
            return
        S = unitary_to_symplectic(U, check=False)  # (B, P, 4, 4)
        idx = quadrature_indices(pairs).reshape(len(pairs), 4)
        self.F[:, idx, :] = S @ self.F[:, idx, :]

    def entropies(self, masks: np.ndarray, kind: EntropyKind) -> np.ndarray:
        out = np.empty((self.F.shape[0], len(masks)))
        for j, mask in enumerate(masks):
            # pure global state: use the smaller side of the cut
            side = mask if mask.sum() <= self.n_modes - mask.sum() else ~mask
            modes = np.flatnonzero(side)
            if modes.size == 0:
                out[:, j] = 0.0
                continue
            rows = self.F[:, quadrature_indices(modes), :]
            out[:, j] = entropy_from_nu(symplectic_eigenvalues_factor(rows), kind)
        return out

    def covariance(self) -> np.ndarray:
        return self.V


class LowRankState:
    """Batch of states ``V = I + Y C Y^T`` with complex mode amplitudes for ``Y``."""

    name = "lowrank"

    def __init__(self, batch: int, n_modes: int):
        self.n_modes = n_modes
        self.Z = np.zeros((batch, n_modes, 0), dtype=complex)
        self.C = np.zeros(0)

    @property
    def rank(self) -> int:
        return self.C.size

    def squeeze(self, vertex: int, r: float):
        z = self.Z[:, vertex, :]
        self.Z[:, vertex, :] = np.cosh(r) * z - np.sinh(r) * np.conj(z)
        new = np.zeros(self.Z.shape[:2] + (2,), dtype=complex)
        new[:, vertex, 0] = 1.0
        new[:, vertex, 1] = 1.0j
        self.Z = np.concatenate([self.Z, new], axis=2)
        self.C = np.concatenate([self.C, [np.expm1(-2.0 * r), np.expm1(2.0 * r)]])

    def passive(self, pairs: np.ndarray, U: np.ndarray):
        if not len(pairs) or not self.rank:
            return
        a, b = pairs[:, 0], pairs[:, 1]
        za = self.Z[:, a, :]
        zb = self.Z[:, b, :]
        self.Z[:, a, :] = U[..., 0, 0, None] * za + U[..., 0, 1, None] * zb
        self.Z[:, b, :] = U[..., 1, 0, None] * za + U[..., 1, 1, None] * zb

    def _subsystem_grams(self, masks: np.ndarray) -> np.ndarray:
        """``H_L = sum_{m in L} conj(z_m) z_m^T``, shape ``(B, n_sub, k, k)``."""
        Hm = np.conj(self.Z)[..., :, None] * self.Z[..., None, :]
        sizes = masks.sum(axis=1)
        prefix = np.all(masks == (np.arange(self.n_modes)[None, :] < sizes[:, None]))
        if prefix:
            cum = np.cumsum(Hm, axis=1)
            H = np.zeros((Hm.shape[0], len(masks)) + Hm.shape[2:], dtype=complex)
            nz = sizes > 0
            H[:, nz] = cum[:, sizes[nz] - 1]
            return H
        return np.einsum("sm,bmij->bsij", masks.astype(float), Hm)

    def entropies(self, masks: np.ndarray, kind: EntropyKind) -> np.ndarray:
        batch = self.Z.shape[0]
        if not self.rank:
            return np.zeros((batch, len(masks)))
        H = self._subsystem_grams(masks)
        return _lowrank_entropy(H.real, H.imag, self.C, kind)

    def covariance(self) -> np.ndarray:
        n = self.n_modes
        Y = np.empty((self.Z.shape[0], 2 * n, self.rank))
        Y[:, 0::2] = self.Z.real
        Y[:, 1::2] = self.Z.imag
        return np.eye(2 * n) + np.einsum("bik,k,bjk->bij", Y, self.C, Y)


def _lowrank_entropy(A1: np.ndarray, A2: np.ndarray, C: np.ndarray, kind: EntropyKind) -> np.ndarray:
    """Entropy of ``V_L = I + Y_L C Y_L^T`` from ``A1 = Y_L^T Y_L``, ``A2 = Y_L^T Omega Y_L``.

    ``Omega V_L`` maps ``X = [Y_L, Omega Y_L]`` onto itself as ``X T`` with
    ``T = [[0, -I], [I + C A1, C A2]]``. On an orthonormal basis of ``span X``
    (from the Gram matrix ``[[A1, A2], [-A2, A1]]``) its eigenvalues are
    ``+-i nu`` for the nontrivial symplectic eigenvalues; directions of
    numerically zero Gram weight are projected out.
    """
    k = C.size
    shape = A1.shape[:-2]
    eye = np.eye(k)
    T = np.zeros(shape + (2 * k, 2 * k))
    T[..., :k, k:] = -eye
    T[..., k:, :k] = eye + C[:, None] * A1
    T[..., k:, k:] = C[:, None] * A2
    G = np.empty_like(T)
    G[..., :k, :k] = A1
    G[..., :k, k:] = A2
    G[..., k:, :k] = -A2
    G[..., k:, k:] = A1
    lam, W = np.linalg.eigh(G)
    keep = lam > GRAM_RTOL * np.maximum(lam[..., -1:], np.finfo(float).tiny)
    R = np.swapaxes(W, -1, -2) @ T @ W
    R = R * (keep[..., :, None] & keep[..., None, :])
    ev = np.abs(np.linalg.eigvals(R))
    nu = np.where(ev > 0.5, np.maximum(ev, 1.0), 1.0)
    return 0.5 * np.sum(thermal_entropy((nu - 1.0) / 2.0, kind), axis=-1)


def make_state(engine: str, batch: int, n_modes: int, n_events: int):
    if engine == "auto":
        engine = "lowrank" if 4 * n_events <= n_modes else "dense"
    if engine == "dense":
        return DenseState(batch, n_modes)
    if engine == "lowrank":
        return LowRankState(batch, n_modes)
    raise ValueError(f"unknown engine {engine!r}")


# --------------------------------------------------------------------------
# stepping


def step(V: np.ndarray, coloring: EdgeColoring, k: int, rng: np.random.Generator) -> np.ndarray:
    """Apply one round of independent Haar gates to covariance matrix ``V``.

    A convenience for single states or stacks of them; ensembles go through
    :func:`simulate`.
    """
    pairs = coloring.rounds[k % coloring.K]
    V = np.array(V, dtype=float)
    if not len(pairs):
        return V
    batch = V.shape[:-2]
    S = unitary_to_symplectic(
        gate_unitaries_from_uniforms(rng.random(batch + (len(pairs), 5))), check=False)
    for p, (a, b) in enumerate(pairs):
        idx = quadrature_indices([a, b])
        Sp = S[..., p, :, :]
        V[..., idx, :] = Sp @ V[..., idx, :]
        V[..., :, idx] = V[..., :, idx] @ np.swapaxes(Sp, -1, -2)
    return V


@dataclass
class BatchResult:
    """Raw per-realization output of :func:`simulate`."""

    seeds: list
    times: np.ndarray
    entropy: np.ndarray  # (B, n_times, n_sub)
    weights: np.ndarray | None = None  # (B, n_times, M)
    final_state: object = None


def simulate(run: CircuitRun, seeds, engine: str = "auto", track: bool = False,
             keep_state: bool = False, observer=None) -> BatchResult:
    """Run one realization per seed, vectorised over the batch.

    At step ``t`` the squeezers scheduled at ``t`` act first, then round
    ``t mod K``. Entropies are recorded before step ``t`` for every sample
    time ``t``. With ``track=True`` the column of the accumulated passive
    unitary fed by the single squeezer is followed and ``|U_{x,x0}|^2`` stored.

    ``observer(t, state)`` is called at each sample time if given.
    """
    seeds = list(seeds)
    batch = len(seeds)
    n = run.n_modes
    if track:
        if len(run.events) != 1 or run.events[0].t != 0:
            raise ValueError("weight tracking needs exactly one squeezer at t=0")
        col = np.zeros((batch, n), dtype=complex)
        col[:, run.events[0].vertex] = 1.0
    state = make_state(engine, batch, n, len(run.events))
    stream = GateStream(seeds, run.coloring)
    events = {}
    for e in run.events:
        events.setdefault(e.t, []).append(e)
    order = np.argsort(run.sample_times, kind="stable")
    times_sorted = run.sample_times[order]
    ent = np.zeros((batch, run.sample_times.size, len(run.subsystems)))
    wts = np.zeros((batch, run.sample_times.size, n)) if track else None
    pos = 0
    last = int(times_sorted[-1]) if times_sorted.size else 0
    for t in range(last + 1):
        while pos < times_sorted.size and times_sorted[pos] == t:
            slot = order[pos]
            try:
                ent[:, slot] = state.entropies(run.subsystems, run.kind)
            except np.linalg.LinAlgError as exc:
                raise np.linalg.LinAlgError(f"entropy evaluation failed at t={t}: {exc}") from exc
            if track:
                wts[:, slot] = np.abs(col) ** 2
            if observer is not None:
                observer(t, state)
            pos += 1
        if t == last:
            break
        for e in events.get(t, ()):
            state.squeeze(e.vertex, e.r)
        pairs = run.coloring.rounds[t % run.coloring.K]
        U = stream(t)
        state.passive(pairs, U)
        if track and len(pairs):
            a, b = pairs[:, 0], pairs[:, 1]
            ca, cb = col[:, a], col[:, b]
            col[:, a] = U[..., 0, 0] * ca + U[..., 0, 1] * cb
            col[:, b] = U[..., 1, 0] * ca + U[..., 1, 1] * cb
    return BatchResult(seeds, run.sample_times.copy(), ent, wts,
                       state if keep_state else None)


def run_circuit(run: CircuitRun, seed: int, engine: str = "auto") -> np.ndarray:
    """Entropy series of one realization, shape ``(n_times, n_sub)``."""
    return simulate(run, [seed], engine).entropy[0]


def track_weights(run: CircuitRun, seed: int) -> np.ndarray:
    """Weight fields ``|U_{x,x0}|^2`` of one realization at the sample times."""
    return simulate(run, [seed], track=True).weights[0]


# --------------------------------------------------------------------------
# ensemble statistics


@dataclass
class EnsembleStats:
    """Streaming mean and variance (Welford, merged with Chan's formula)."""

    n: int = 0
    mean: np.ndarray | float = 0.0
    m2: np.ndarray | float = 0.0

    def update(self, samples: np.ndarray) -> "EnsembleStats":
        """Fold in a batch of samples stacked along axis 0."""
        samples = np.asarray(samples, dtype=float)
        nb = samples.shape[0]
        if nb == 0:
            return self
        mb = samples.mean(axis=0)
        m2b = ((samples - mb) ** 2).sum(axis=0)
        return self.merge(EnsembleStats(nb, mb, m2b))

    def merge(self, other: "EnsembleStats") -> "EnsembleStats":
        if other.n == 0:
            return self
        if self.n == 0:
            self.n, self.mean, self.m2 = other.n, np.array(other.mean, copy=True), np.array(other.m2, copy=True)
            return self
        n = self.n + other.n
        d = other.mean - self.mean
        self.mean = self.mean + d * other.n / n
        self.m2 = self.m2 + other.m2 + d**2 * self.n * other.n / n
        self.n = n
        return self

    @property
    def var(self):
        if self.n < 2:
            return np.zeros_like(np.asarray(self.mean, dtype=float))
        return np.maximum(self.m2 / (self.n - 1), 0.0)

    @property
    def stderr(self):
        return np.sqrt(self.var / max(self.n, 1))


@dataclass
class EnsembleResult:
    run: CircuitRun
    base_seed: int
    seeds: list
    stats: EnsembleStats
    engine: str
    samples: np.ndarray | None = None  # (N, n_times, n_sub) when kept
    weight_stats: EnsembleStats | None = None

    @property
    def mean(self) -> np.ndarray:
        return self.stats.mean

    @property
    def var(self) -> np.ndarray:
        return self.stats.var

    @property
    def stderr(self) -> np.ndarray:
        return self.stats.stderr


def _chunk_task(args):
    run, seeds, engine, track = args
    res = simulate(run, seeds, engine, track=track)
    return res.entropy, res.weights


def ensemble(run: CircuitRun, n: int, base_seed: int = 0, engine: str = "auto",
             threads: int = 1, keep_samples: bool = False, track: bool = False,
             chunk: int = DEFAULT_CHUNK) -> EnsembleResult:
    """Ensemble average over ``n`` realizations with seeds ``base_seed ^ i``.

    Realizations are processed in fixed chunks merged in index order, so the
    result does not depend on ``threads``.
    """
    if n < 2:
        raise ValueError("an ensemble needs at least two realizations")
    seeds = seeds_for(base_seed, n)
    tasks = [(run, seeds[i:i + chunk], engine, track) for i in range(0, n, chunk)]
    stats = EnsembleStats()
    wstats = EnsembleStats() if track else None
    kept = []
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_chunk_task, tasks))
    else:
        results = map(_chunk_task, tasks)
    for ent, w in results:
        stats.merge(EnsembleStats().update(ent))
        if track:
            wstats.merge(EnsembleStats().update(w))
        if keep_samples:
            kept.append(ent)
    used = engine if engine != "auto" else make_state("auto", 1, run.n_modes, len(run.events)).name
    return EnsembleResult(run, base_seed, seeds, stats, used,
                          np.concatenate(kept) if keep_samples else None, wstats)


# --------------------------------------------------------------------------
# equilibrium autocorrelation


@dataclass(frozen=True)
class Autocorrelation:
    lags: np.ndarray
    G: np.ndarray  # unnormalised covariance per lag
    n_series: int

    @property
    def normalized(self) -> np.ndarray:
        return self.G / self.G[0]


def autocorrelation(run: CircuitRun, subsystem: int, lags, burn_in: int, window: int,
                    n: int, base_seed: int = 0, engine: str = "auto") -> Autocorrelation:
    """Time-averaged equilibrium autocovariance of ``S(L, t)``.

    Each realization records ``S`` every step on ``[burn_in, burn_in + window
    + max(lags)]``; products at lag ``dt`` are averaged over realizations and
    window start times, around the grand mean.
    """
    lags = np.asarray(lags, dtype=int)
    if lags.min() < 0:
        raise ValueError("lags must be nonnegative")
    if window < 1:
        raise ValueError("insufficient samples: window must be positive")
    span = window + int(lags.max())
    times = burn_in + np.arange(span)
    sub = CircuitRun(run.graph, run.coloring, run.events, burn_in + span,
                     run.subsystems[[subsystem]], times, run.kind)
    S = ensemble(sub, n, base_seed, engine, keep_samples=True).samples[..., 0]
    S = S - S.mean()
    G = np.array([np.mean(S[:, :window] * S[:, dt:dt + window]) for dt in lags])
    return Autocorrelation(lags, G, n)


# --------------------------------------------------------------------------
# gate-average oracle


@dataclass(frozen=True)
class GateAverage:
    mean: np.ndarray  # (2,)
    stderr: np.ndarray  # (2,)
    samples: int


def gate_average_check(w_x: float, w_xp: float, samples: int,
                       rng: np.random.Generator) -> GateAverage:
    """Monte Carlo average of the two-mode weight update over the gate ensemble.

    ``tau`` is uniform on ``[0, 1)`` and the relative phase uniform on
    ``[0, 2pi)``; both averages should equal ``(w_x + w_xp) / 2``.
    """
    if w_x < 0 or w_xp < 0:
        raise ValueError("weights must be nonnegative")
    tau = rng.random(samples)
    theta = 2.0 * np.pi * rng.random(samples)
    cross = 2.0 * np.sqrt(tau * (1.0 - tau) * w_x * w_xp) * np.cos(theta)
    a = tau * w_x + (1.0 - tau) * w_xp + cross
    b = (1.0 - tau) * w_x + tau * w_xp - cross
    vals = np.stack([a, b], axis=1)
    return GateAverage(vals.mean(axis=0), vals.std(axis=0, ddof=1) / np.sqrt(samples), samples)
