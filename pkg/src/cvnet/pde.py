"""Continuum models: weight diffusion and the diffusion-epidemiology model.

Both use explicit Euler in time and second-order central differences in
space on a cell-centred grid. Reflecting (Neumann) boundaries are imposed by
mirror ghost cells, which makes the diffusion stencil exactly conservative.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class Field1D:
    """Values on a uniform grid (1-D, or 2-D with equal spacing on both axes)."""

    values: np.ndarray
    dx: float = 1.0
    t: float = 0.0
    dt: float = 0.5

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)
        if self.dx <= 0 or self.dt <= 0:
            raise ValueError("grid spacing and time step must be positive")

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.dx**self.values.ndim)

    @classmethod
    def delta(cls, n, center=None, dx: float = 1.0, dt: float = 0.5) -> "Field1D":
        """Unit-mass delta on one cell; ``n`` is an int (1-D) or a shape tuple."""
        shape = (n,) if np.isscalar(n) else tuple(n)
        center = tuple(s // 2 for s in shape) if center is None else np.atleast_1d(center)
        v = np.zeros(shape)
        v[tuple(center)] = 1.0 / dx ** len(shape)
        return cls(v, dx, 0.0, dt)


def laplacian(u: np.ndarray, dx: float) -> np.ndarray:
    """Five/three-point Laplacian with mirror ghosts (zero normal flux)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    for ax in range(u.ndim):
        p = np.pad(u, [(1, 1) if a == ax else (0, 0) for a in range(u.ndim)], mode="edge")
        n = u.shape[ax]
        out += (np.take(p, np.arange(2, n + 2), axis=ax) - 2.0 * u
                + np.take(p, np.arange(0, n), axis=ax))
    return out / dx**2


def stable_dt(dx: float, diffusivity: float, ndim: int = 1) -> float:
    """Largest stable explicit step ``dx^2 / (2 ndim kappa)``."""
    return dx**2 / (2.0 * ndim * diffusivity)


def _check_stability(dt, dx, diffusivity, ndim):
    limit = stable_dt(dx, diffusivity, ndim)
    if dt > limit * (1.0 + 1e-12):
        raise ValueError(f"unstable explicit step: dt={dt} exceeds dx^2/(2 ndim kappa)={limit}")


def diffuse_weights(field: Field1D, steps: int, D_dim: int) -> Field1D:
    """Advance ``w_t = (1 / 2D) lap w`` by ``steps`` explicit steps.

    ``D_dim`` is the lattice dimension that sets the diffusivity; the field may
    be 1-D or 2-D.
    """
    kappa = 1.0 / (2.0 * D_dim)
    _check_stability(field.dt, field.dx, kappa, field.values.ndim)
    w = field.values.copy()
    a = kappa * field.dt
    for _ in range(int(steps)):
        w += a * laplacian(w, field.dx)
    return replace(field, values=w, t=field.t + steps * field.dt)


def diffuse_to(field: Field1D, t: float, D_dim: int) -> Field1D:
    """Diffuse until time ``t`` (must be a whole number of steps away)."""
    steps = (t - field.t) / field.dt
    n = int(round(steps))
    if abs(steps - n) > 1e-9 or n < 0:
        raise ValueError("target time is not reachable with the field's dt")
    return diffuse_weights(field, n, D_dim)


def _face_gradient(w: np.ndarray, i: int, dx: float) -> float:
    """Four-point estimate of ``w'`` at the face between cells ``i-1`` and ``i``."""
    n = w.size
    if 2 <= i <= n - 2:
        return (w[i - 2] - 27.0 * w[i - 1] + 27.0 * w[i] - w[i + 1]) / (24.0 * dx)
    if 1 <= i <= n - 1:
        return (w[i] - w[i - 1]) / dx
    return 0.0  # domain end: reflecting wall


def boundary_flux_check(field: Field1D, region, D_dim: int):
    """Compare ``d eta / dt`` over a region with the flux through its boundary.

    ``region`` is ``(i0, i1)`` (cells ``i0 .. i1-1``) for 1-D fields or
    ``((i0, i1), (j0, j1))`` for a box in 2-D. The rate uses the solver's own
    Laplacian; the boundary integral uses a fourth-order face gradient, so the
    two agree up to the discretisation error.

    Returns:
        tuple: ``(rate, loop)``.
    """
    w = field.values
    dx = field.dx
    kappa = 1.0 / (2.0 * D_dim)
    if w.ndim == 1:
        i0, i1 = region
        rate = kappa * laplacian(w, dx)[i0:i1].sum() * dx
        loop = kappa * (_face_gradient(w, i1, dx) - _face_gradient(w, i0, dx))
        return float(rate), float(loop)
    if w.ndim == 2:
        (i0, i1), (j0, j1) = region
        rate = kappa * laplacian(w, dx)[i0:i1, j0:j1].sum() * dx**2
        loop = 0.0
        for j in range(j0, j1):
            col = w[:, j]
            loop += _face_gradient(col, i1, dx) - _face_gradient(col, i0, dx)
        for i in range(i0, i1):
            row = w[i, :]
            loop += _face_gradient(row, j1, dx) - _face_gradient(row, j0, dx)
        return float(rate), float(kappa * loop * dx)
    raise ValueError("only 1-D and 2-D fields are supported")


# --------------------------------------------------------------------------
# diffusion-epidemiology model


class BlowUpError(RuntimeError):
    """The source field diverged."""


@dataclass(frozen=True)
class EpidemiologyParams:
    A: float = 2.3
    D: float = 2.0
    f: float = -0.7
    dx: float = 1.0
    dt: float | None = None  # defaults to half the stability limit
    blowup: float = 1e8


@dataclass(frozen=True)
class EpidemiologyResult:
    times: np.ndarray
    S: np.ndarray  # (n_times, n)
    G: np.ndarray  # (n_times, n)
    dt: float


def epidemiology_solve(c, n: int, source: int, sample_times, params: EpidemiologyParams = EpidemiologyParams(),
                       S0=None, G0=None) -> EpidemiologyResult:
    """Co-evolve ``S_t = A G (c - S)`` and ``G_t = D G'' + f G^2``.

    ``c`` is a scalar or a profile over the ``n`` grid points. ``G`` starts as a
    unit-mass delta on cell ``source`` (unless ``G0`` is given) with reflecting
    ends; ``S`` starts at zero (unless ``S0`` is given).

    Raises:
        BlowUpError: when ``G`` becomes non-finite or exceeds ``params.blowup``.
    """
    p = params
    dt = p.dt if p.dt is not None else 0.5 * stable_dt(p.dx, p.D)
    _check_stability(dt, p.dx, p.D, 1)
    c = np.broadcast_to(np.asarray(c, dtype=float), (n,))
    S = np.zeros(n) if S0 is None else np.array(S0, dtype=float)
    if G0 is None:
        G = np.zeros(n)
        G[source] = 1.0 / p.dx
    else:
        G = np.array(G0, dtype=float)
    times = np.asarray(sample_times, dtype=float)
    steps = np.rint(times / dt).astype(int)
    if np.any(np.abs(steps * dt - times) > 1e-9 * np.maximum(times, 1.0)):
        raise ValueError("sample times must be multiples of dt")
    order = np.argsort(steps, kind="stable")
    outS = np.empty((times.size, n))
    outG = np.empty((times.size, n))
    pos = 0
    for k in range(int(steps.max()) + 1 if steps.size else 0):
        while pos < steps.size and steps[order[pos]] == k:
            outS[order[pos]] = S
            outG[order[pos]] = G
            pos += 1
        if pos == steps.size:
            break
        dS = p.A * G * (c - S)
        G = G + dt * (p.D * laplacian(G, p.dx) + p.f * G**2)
        S = S + dt * dS
        gmax = np.max(np.abs(G))
        if not np.isfinite(gmax) or gmax > p.blowup:
            raise BlowUpError(
                f"source field diverged at t={(k + 1) * dt:g} (max |G| = {gmax:.3g}); "
                f"f={p.f}, D={p.D}, dt={dt}"
            )
    return EpidemiologyResult(times, outS, outG, dt)
