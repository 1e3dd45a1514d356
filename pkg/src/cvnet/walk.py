"""Random-walk theory of the ensemble-averaged entanglement dynamics.

A single squeezer at vertex ``x0`` feeds a weight field ``w`` that evolves,
on average, by pairwise averaging across the edges of each gate round. The
entropy of a subsystem ``L`` depends on ``w`` only through the total
transmissivity ``eta_L = sum_{x in L} w_x``.

Time convention shared with :mod:`cvnet.circuit`: the state "at time t" is the
state after steps ``0 .. t-1``; step ``s`` applies round ``s mod K``. A squeezer
acting at step ``t*`` is seen from time ``t* + 1`` on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .gaussian import VON_NEUMANN, EntropyKind, thermal_entropy, thermal_entropy_derivative
from .graph import EdgeColoring, NetworkGraph, conductance

DEFAULT_EPSILON = 1e-7


# --------------------------------------------------------------------------
# weights dynamics


def apply_round(w: np.ndarray, coloring: EdgeColoring, k: int) -> np.ndarray:
    """Average the weights across every edge of round ``k`` (last axis = vertices)."""
    e = coloring.rounds[k % coloring.K]
    out = np.array(w, dtype=float, copy=True)
    if len(e):
        avg = 0.5 * (out[..., e[:, 0]] + out[..., e[:, 1]])
        out[..., e[:, 0]] = avg
        out[..., e[:, 1]] = avg
    return out


def round_matrix(coloring: EdgeColoring, k: int) -> np.ndarray:
    """``(I + A_k)/2`` with idle vertices carrying a loop."""
    return 0.5 * (np.eye(coloring.n_vertices) + coloring.round_adjacency(k))


def transition_matrix(graph: NetworkGraph, coloring: EdgeColoring) -> np.ndarray:
    """One full period ``prod_k (I + A_k)/2``, acting on row vectors from the right."""
    if coloring.n_vertices != graph.n_vertices:
        raise ValueError("colouring and graph disagree on the vertex count")
    coloring.validate_against(graph)
    E = np.eye(graph.n_vertices)
    for k in range(coloring.K):
        E = E @ round_matrix(coloring, k)
    return E


def delta(n: int, x0: int) -> np.ndarray:
    w = np.zeros(n)
    w[x0] = 1.0
    return w


def evolve_weights(w0: np.ndarray, coloring: EdgeColoring, t: int, start_step: int = 0) -> np.ndarray:
    """Apply ``t`` single-round steps, the first one being round ``start_step mod K``.

    Whole periods reproduce ``w0 @ E**(t // K)``; partial periods apply the
    individual round factors so theory and engine share a per-step clock.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    w = np.array(w0, dtype=float, copy=True)
    for s in range(start_step, start_step + t):
        w = apply_round(w, coloring, s)
    return w


def weight_history(w0: np.ndarray, coloring: EdgeColoring, times, start_step: int = 0) -> np.ndarray:
    """Weights after ``tau`` steps for each ``tau`` in ``times`` (sorted or not).

    Returns an array of shape ``(len(times), ..., n)``.
    """
    times = np.asarray(times, dtype=int)
    if times.size and times.min() < 0:
        raise ValueError("times must be nonnegative")
    order = np.argsort(times, kind="stable")
    out = np.empty((times.size,) + np.shape(w0))
    w = np.array(w0, dtype=float, copy=True)
    cur = 0
    for i in order:
        while cur < times[i]:
            w = apply_round(w, coloring, start_step + cur)
            cur += 1
        out[i] = w
    return out


def eta(w: np.ndarray, L) -> np.ndarray:
    """Total transmissivity ``sum_{x in L} w_x``; ``L`` is an index array or mask.

    A 2-D ``L`` is read as a stack of subsystem masks and returns one value per row.
    """
    w = np.asarray(w, dtype=float)
    L = np.asarray(L)
    if L.ndim == 2:
        return w @ L.astype(float).T
    if L.dtype == bool:
        return w[..., L].sum(axis=-1)
    return w[..., L.astype(int)].sum(axis=-1)


def boundary_flow_step(w: np.ndarray, L, coloring: EdgeColoring, k: int) -> float:
    """Predicted change of ``eta_L`` over round ``k``: half the net boundary flow.

    Only edges of round ``k`` that cross the cut contribute; the value equals
    ``eta(apply_round(w, k), L) - eta(w, L)`` exactly.
    """
    w = np.asarray(w, dtype=float)
    mask = np.zeros(coloring.n_vertices, dtype=bool)
    mask[np.asarray(L)] = True
    e = coloring.rounds[k % coloring.K]
    if not len(e):
        return 0.0
    a, b = e[:, 0], e[:, 1]
    cross = mask[a] != mask[b]
    inner = np.where(mask[a], a, b)[cross]
    outer = np.where(mask[a], b, a)[cross]
    return 0.5 * (w[..., outer].sum(axis=-1) - w[..., inner].sum(axis=-1))


# --------------------------------------------------------------------------
# entropy as a function of the transmissivity


def nu_from_eta(eta_L, r) -> np.ndarray:
    """Symplectic eigenvalue of a squeezed vacuum after a loss ``eta_L``."""
    eta_L = np.clip(np.asarray(eta_L, dtype=float), 0.0, 1.0)
    return np.sqrt(1.0 + 4.0 * eta_L * (1.0 - eta_L) * np.sinh(r) ** 2)


def entropy_from_eta(eta_L, r, kind: EntropyKind = VON_NEUMANN) -> np.ndarray:
    """Entropy (bits) of a subsystem holding a fraction ``eta_L`` of one squeezed vacuum."""
    return thermal_entropy((nu_from_eta(eta_L, r) - 1.0) / 2.0, kind)


def entropy_from_eta_large_r(eta_L, r) -> np.ndarray:
    """Leading large-squeezing form ``0.5 log2[eta(1-eta)] + (r+1)/ln 2 - 1`` (von Neumann)."""
    eta_L = np.asarray(eta_L, dtype=float)
    with np.errstate(divide="ignore"):
        return 0.5 * np.log2(eta_L * (1.0 - eta_L)) + (r + 1.0) / np.log(2.0) - 1.0


def max_entropy(r, kind: EntropyKind = VON_NEUMANN):
    """``g(sinh^2(r/2))``, reached at ``eta = 1/2``."""
    return thermal_entropy(np.sinh(np.asarray(r, dtype=float) / 2.0) ** 2, kind)


def entropy_eta_derivative(eta_L, r, kind: EntropyKind = VON_NEUMANN) -> np.ndarray:
    """Analytic ``dS/d eta``; zero at ``eta = 1/2`` and undefined at the endpoints."""
    eta_L = np.asarray(eta_L, dtype=float)
    s2 = np.sinh(r) ** 2
    nu = nu_from_eta(eta_L, r)
    x = (nu - 1.0) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        d = thermal_entropy_derivative(x, kind) * (1.0 - 2.0 * eta_L) * s2 / nu
    return np.where((eta_L <= 0) | (eta_L >= 1), np.nan, d)


# --------------------------------------------------------------------------
# equilibrium: Page curves and fluctuations


def page_curve(sizes, n_total: int, r, kind: EntropyKind = VON_NEUMANN) -> np.ndarray:
    """Equilibrium entropy ``S(|L|/|G|)`` for each subsystem size."""
    sizes = np.asarray(sizes, dtype=float)
    if np.any(sizes < 0) or np.any(sizes > n_total):
        raise ValueError("subsystem sizes must lie in [0, |G|]")
    return entropy_from_eta(sizes / n_total, r, kind)


def page_curve_approx(sizes, n_total: int, r) -> np.ndarray:
    """Large-squeezing approximation of :func:`page_curve` (von Neumann)."""
    return entropy_from_eta_large_r(np.asarray(sizes, dtype=float) / n_total, r)


@dataclass(frozen=True)
class EtaLaw:
    """Beta law of the equilibrium transmissivity of a subsystem."""

    size_l: int
    size_r: int

    @property
    def dist(self):
        return stats.beta(self.size_l, self.size_r)

    def pdf(self, x):
        return self.dist.pdf(x)

    @property
    def mean(self) -> float:
        return self.size_l / (self.size_l + self.size_r)

    @property
    def variance(self) -> float:
        n = self.size_l + self.size_r
        return self.size_l * self.size_r / (n**2 * (n + 1.0))


def eta_equilibrium_law(size_l: int, size_r: int) -> EtaLaw:
    if size_l < 1 or size_r < 1:
        raise ValueError("both sides of the cut need at least one vertex")
    return EtaLaw(int(size_l), int(size_r))


def page_variance(sizes, n_total: int, r, kind: EntropyKind = VON_NEUMANN) -> np.ndarray:
    """First-order equilibrium variance of the entropy, ``(dS/deta)^2 var(eta)``."""
    sizes = np.asarray(sizes, dtype=float)
    eta0 = sizes / n_total
    var_eta = sizes * (n_total - sizes) / (n_total**2 * (n_total + 1.0))
    d = entropy_eta_derivative(eta0, r, kind)
    out = np.where(np.isnan(d), 0.0, d) ** 2 * var_eta
    return np.where((sizes <= 0) | (sizes >= n_total), 0.0, out)


# --------------------------------------------------------------------------
# mixing time


@dataclass(frozen=True)
class MixingTime:
    method: str
    epsilon: float
    steps: float


def second_eigenvalue(E: np.ndarray) -> float:
    ev = np.sort(np.abs(np.linalg.eigvals(E)))[::-1]
    return float(ev[1]) if ev.size > 1 else 0.0


def numeric_mixing_time(coloring: EdgeColoring, epsilon: float = DEFAULT_EPSILON,
                        max_steps: int = 10**7) -> int:
    """First time at which every delta start is within ``epsilon`` of uniform everywhere."""
    n = coloring.n_vertices
    W = np.eye(n)
    target = 1.0 / n
    for t in range(max_steps + 1):
        if np.max(np.abs(W - target)) <= epsilon:
            return t
        W = apply_round(W, coloring, t)
    raise RuntimeError(f"weights did not mix within {max_steps} steps")


def mixing_time(graph: NetworkGraph, coloring: EdgeColoring, epsilon: float = DEFAULT_EPSILON,
                method: str = "numeric", rng: np.random.Generator | None = None,
                conductance_value: float | None = None) -> MixingTime:
    """Mixing-time estimate in circuit steps.

    Methods:
        ``spectral``: ``K ln(1/eps) / ln(1/lambda_2)`` from the period matrix;
        ``hitting``: ``ln(1/eps) D M^2 / ln 6`` (Cartesian graphs only);
        ``conductance``: ``ln(1/eps) / -ln(1 - Phi^2/8)``;
        ``numeric``: direct evolution from the worst delta start.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    graph.require_connected()
    if method == "numeric":
        return MixingTime(method, epsilon, float(numeric_mixing_time(coloring, epsilon)))
    if method == "spectral":
        lam = second_eigenvalue(transition_matrix(graph, coloring))
        if lam <= 0:
            steps = float(coloring.K)
        else:
            steps = coloring.K * np.log(1.0 / epsilon) / np.log(1.0 / lam)
        return MixingTime(method, epsilon, float(steps))
    if method == "hitting":
        if not graph.is_cartesian:
            raise ValueError("the hitting-time estimate is defined for Cartesian graphs only")
        steps = np.log(1.0 / epsilon) * graph.dim * graph.side**2 / np.log(6.0)
        return MixingTime(method, epsilon, float(steps))
    if method == "conductance":
        phi = conductance_value
        if phi is None:
            phi = conductance(graph, rng=rng).value
        steps = np.log(1.0 / epsilon) / -np.log1p(-(phi**2) / 8.0)
        return MixingTime(method, epsilon, float(steps))
    raise ValueError(f"unknown mixing-time method {method!r}")


# --------------------------------------------------------------------------
# closed forms on Cartesian lattices


def _check_pre_boundary(D: int, t: int, N: int, allow_boundary: bool):
    if not allow_boundary and 5.0 * np.sqrt(max(t, 1) / D) > N:
        raise ValueError(
            f"t={t} is past the boundary regime for half-width N={N}; "
            "pass allow_boundary=True to evaluate anyway"
        )


def _binomial_axis_weights(D: int, t: int, N: int) -> np.ndarray:
    """Per-axis factor ``C(n_t, n_{x,t}) / 2^((t+D)/D)`` on ``x = -N..N`` (log-space)."""
    n_t = t // D
    x = np.arange(-N, N + 1)
    k = np.floor_divide(x, 2) + t // (2 * D)
    valid = (k >= 0) & (k <= n_t)
    logc = np.full(x.shape, -np.inf)
    kv = k[valid]
    logc[valid] = special.gammaln(n_t + 1) - special.gammaln(kv + 1) - special.gammaln(n_t - kv + 1)
    return np.exp(logc - (t + D) / D * np.log(2.0))


def binomial_weights(D: int, t: int, N: int, allow_boundary: bool = False) -> np.ndarray:
    """Product-of-binomials approximation of the weights on ``[-N, N]^D``.

    Uses floor semantics for the bracketed indices; the result is normalised
    only up to integer rounding. Returned flattened in row-major vertex order.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        w = np.zeros((2 * N + 1,) * D)
        w[(N,) * D] = 1.0
        return w.ravel()
    _check_pre_boundary(D, t, N, allow_boundary)
    f = _binomial_axis_weights(D, t, N)
    w = f
    for _ in range(D - 1):
        w = np.multiply.outer(w, f)
    return np.asarray(w).ravel()


def binomial_eta(D: int, t: int, cut, N: int, allow_boundary: bool = False) -> float:
    """Binomial ``eta`` of the corner region ``{x' : x'_d < x_d for all d}``.

    Evaluated as partial sums of the per-axis binomial factors.
    """
    cut = np.atleast_1d(np.asarray(cut, dtype=int))
    if cut.size != D:
        raise ValueError("one cut coordinate per axis")
    if t == 0:
        return float(np.all(cut > 0))
    _check_pre_boundary(D, t, N, allow_boundary)
    f = _binomial_axis_weights(D, t, N)
    prefix = np.concatenate([[0.0], np.cumsum(f)])
    out = 1.0
    for c in cut:
        out *= prefix[int(np.clip(c + N, 0, 2 * N + 1))]
    return float(out)


def gaussian_weights(D: int, t: float, x) -> np.ndarray:
    """Continuum weights: isotropic Gaussian with variance ``t/D`` per axis.

    ``x`` has shape ``(..., D)`` (or ``(...)`` when ``D == 1``).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    if D == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    var = t / D
    r2 = np.sum(x**2, axis=-1)
    return np.exp(-r2 / (2.0 * var)) / (2.0 * np.pi * var) ** (D / 2.0)


def gaussian_eta(D: int, t: float, cut) -> np.ndarray:
    """Continuum ``eta`` of the corner region below ``cut``: product of error functions."""
    if t <= 0:
        raise ValueError("t must be positive")
    cut = np.asarray(cut, dtype=float)
    if D == 1 and (cut.ndim == 0 or cut.shape[-1] != 1):
        cut = cut[..., None]
    return np.prod(0.5 * (1.0 + special.erf(cut / np.sqrt(2.0 * t / D))), axis=-1)


# --------------------------------------------------------------------------
# theory curves and derived analyses


def prefix_cuts(n: int) -> np.ndarray:
    """Masks of the left parts ``{0..j-1}`` for ``j = 1 .. n-1``, shape ``(n-1, n)``."""
    j = np.arange(1, n)[:, None]
    return np.arange(n)[None, :] < j


def subsystem_masks(subsystems, n: int) -> np.ndarray:
    """Stack index lists or masks into a boolean ``(n_sub, n)`` array."""
    if isinstance(subsystems, np.ndarray) and subsystems.dtype == bool and subsystems.ndim == 2:
        return subsystems
    out = np.zeros((len(subsystems), n), dtype=bool)
    for i, s in enumerate(subsystems):
        s = np.asarray(s)
        if s.dtype == bool:
            out[i] = s
        else:
            out[i, s.astype(int)] = True
    return out


def theory_curves(coloring: EdgeColoring, vertex: int, r: float, times, cuts,
                  kind: EntropyKind = VON_NEUMANN, t_star: int = 0) -> np.ndarray:
    """``S(<eta_L>)`` for one squeezer at ``(vertex, t_star)``.

    Returns ``(len(times), n_cuts)``; entries with ``t <= t_star`` are zero.
    """
    times = np.asarray(times, dtype=int)
    masks = np.asarray(cuts, dtype=bool)
    out = np.zeros((times.size, masks.shape[0]))
    after = times > t_star
    if after.any():
        w = weight_history(delta(coloring.n_vertices, vertex), coloring,
                           times[after] - t_star, start_step=t_star)
        out[after] = entropy_from_eta(eta(w, masks), r, kind)
    return out


def relative_one_norm(a: np.ndarray, b: np.ndarray, axis=-1) -> np.ndarray:
    """``||a - b||_1 / ||b||_1`` along ``axis``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.abs(a - b).sum(axis=axis) / np.abs(b).sum(axis=axis)


def rescale_curve(x: np.ndarray, values: np.ndarray, M: int, grid: np.ndarray) -> np.ndarray:
    """Interpolate ``values(x)`` onto a rescaled grid ``x~ = x / M``."""
    return np.interp(grid, np.asarray(x, dtype=float) / M, values)


def continuum_deviation(S_t: np.ndarray, S_inf: np.ndarray, x=None, M=None, grid=None) -> np.ndarray:
    """Relative 1-norm distance of dynamical curves from the equilibrium curve.

    ``S_t`` has shape ``(n_times, n_x)``. When ``grid`` is given the curves are
    first interpolated linearly onto ``grid`` in rescaled units ``x/M``.
    """
    S_t = np.atleast_2d(np.asarray(S_t, dtype=float))
    S_inf = np.asarray(S_inf, dtype=float)
    if grid is not None:
        if x is None or M is None:
            raise ValueError("interpolation onto a grid needs x and M")
        S_t = np.stack([rescale_curve(x, row, M, grid) for row in S_t])
        S_inf = rescale_curve(x, S_inf, M, grid)
    elif S_t.shape[-1] != S_inf.shape[-1]:
        raise ValueError("curves live on different grids; pass x, M and grid to interpolate")
    return relative_one_norm(S_t, S_inf[None, :])


@dataclass(frozen=True)
class LightConeTimes:
    """Onset ``T1`` and rise duration ``T2`` per probed vertex (NaN where unreached)."""

    T1: np.ndarray
    T2: np.ndarray
    eps1: float
    eps2: float

    @property
    def reached(self) -> np.ndarray:
        return np.isfinite(self.T1) & np.isfinite(self.T2)

    @property
    def T12(self) -> np.ndarray:
        return self.T1 + self.T2


def light_cone(S: np.ndarray, times, S_inf, eps1: float = 0.01, eps2: float = 0.70) -> LightConeTimes:
    """Threshold crossing times from entropy series ``S`` of shape ``(n_times, n_probe)``.

    ``T1`` is the first sampled time with ``S >= eps1 * S_inf`` and ``T1 + T2``
    the first with ``S >= eps2 * S_inf``.
    """
    S = np.asarray(S, dtype=float)
    times = np.asarray(times, dtype=float)
    S_inf = np.asarray(S_inf, dtype=float)

    def first_crossing(level):
        hit = S >= level[None, :]
        idx = np.argmax(hit, axis=0)
        t = times[idx].astype(float)
        t[~hit.any(axis=0)] = np.nan
        return t

    t1 = first_crossing(eps1 * S_inf)
    t12 = first_crossing(eps2 * S_inf)
    return LightConeTimes(t1, t12 - t1, eps1, eps2)


def theory_light_cone(coloring: EdgeColoring, vertex: int, r: float, cuts, S_inf=None,
                      eps1: float = 0.01, eps2: float = 0.70, kind: EntropyKind = VON_NEUMANN,
                      max_steps: int = 10**7) -> LightConeTimes:
    """Light-cone times of walk-theory curves, evolved one step at a time.

    Stops as soon as every cut has crossed ``eps2``; avoids storing the weight
    history on large graphs. ``S_inf`` defaults to the Page value of each cut.
    """
    masks = np.asarray(cuts, dtype=bool)
    n = coloring.n_vertices
    if S_inf is None:
        S_inf = page_curve(masks.sum(axis=1), n, r, kind)
    lo, hi = eps1 * np.asarray(S_inf), eps2 * np.asarray(S_inf)
    t1 = np.full(len(masks), np.nan)
    t12 = np.full(len(masks), np.nan)
    w = delta(n, vertex)
    mf = masks.astype(float).T
    for t in range(max_steps + 1):
        S = entropy_from_eta(w @ mf, r, kind)
        t1[np.isnan(t1) & (S >= lo)] = t
        t12[np.isnan(t12) & (S >= hi)] = t
        if not np.isnan(t12).any():
            break
        w = apply_round(w, coloring, t)
    return LightConeTimes(t1, t12 - t1, eps1, eps2)


def power_law_exponent(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x`` over positive finite pairs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if ok.sum() < 2:
        raise ValueError("need at least two positive points to fit an exponent")
    slope, _ = np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)
    return float(slope)
