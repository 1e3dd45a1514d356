"""Symplectic linear algebra and Gaussian-state entropies.

Conventions used throughout the package:

* quadratures are interleaved, ``(x_1, p_1, x_2, p_2, ...)``;
* the symplectic form is ``Omega = diag([[0, 1], [-1, 0]], ...)``;
* the vacuum covariance matrix is the identity, i.e. ``V_ij = <{X_i, X_j}>``
  with shot noise normalised to one;
* entropies are measured in bits.

All functions accept a leading batch dimension where it makes sense, so an
ensemble of covariance matrices of shape ``(B, 2M, 2M)`` can be processed in
one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMPLECTIC_TOL = 1e-10
UNITARY_TOL = 1e-8
NU_CLAMP_TOL = 1e-8


@dataclass(frozen=True)
class EntropyKind:
    """Which entropy to evaluate.

    ``alpha=None`` selects the von Neumann entropy; any other positive value
    different from one selects the Renyi entropy of that order.
    """

    alpha: float | None = None

    def __post_init__(self):
        if self.alpha is not None:
            a = float(self.alpha)
            if not np.isfinite(a) or a <= 0 or a == 1.0:
                raise ValueError(f"Renyi order must be positive and != 1, got {self.alpha}")

    @classmethod
    def von_neumann(cls) -> "EntropyKind":
        return cls(None)

    @classmethod
    def renyi(cls, alpha: float = 2.0) -> "EntropyKind":
        return cls(float(alpha))

    @property
    def is_von_neumann(self) -> bool:
        return self.alpha is None

    @property
    def label(self) -> str:
        return "vonneumann" if self.alpha is None else f"renyi{self.alpha:g}"

    @classmethod
    def parse(cls, text: str | None) -> "EntropyKind":
        """Parse ``"vonneumann"``, ``"vn"``, ``"renyi"`` or ``"renyi:<alpha>"``."""
        if text is None:
            return cls(None)
        t = str(text).strip().lower()
        if t in ("vonneumann", "von_neumann", "vn", "von-neumann"):
            return cls(None)
        if t.startswith("renyi"):
            rest = t[len("renyi"):].lstrip(":=")
            return cls(float(rest) if rest else 2.0)
        raise ValueError(f"unknown entropy kind {text!r}")


VON_NEUMANN = EntropyKind()


def symplectic_form(m: int) -> np.ndarray:
    """The ``2m x 2m`` symplectic metric for interleaved quadratures."""
    if m < 1:
        raise ValueError("need at least one mode")
    return np.kron(np.eye(m), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def vacuum(m: int) -> np.ndarray:
    return np.eye(2 * m)


def is_symplectic(S: np.ndarray, tol: float = SYMPLECTIC_TOL) -> bool:
    S = np.asarray(S)
    om = symplectic_form(S.shape[-1] // 2)
    return bool(np.max(np.abs(S @ om @ np.swapaxes(S, -1, -2) - om)) < tol)


def is_passive(S: np.ndarray, tol: float = SYMPLECTIC_TOL) -> bool:
    S = np.asarray(S)
    eye = np.eye(S.shape[-1])
    return is_symplectic(S, tol) and bool(np.max(np.abs(np.swapaxes(S, -1, -2) @ S - eye)) < tol)


def squeezer_symplectic(r: float) -> np.ndarray:
    """Single-mode squeezer ``diag(e^-r, e^r)``; it squeezes the x quadrature."""
    r = float(r)
    if not np.isfinite(r):
        raise ValueError("squeezing strength must be finite")
    return np.diag([np.exp(-r), np.exp(r)])


def beamsplitter_unitary(theta, phi1=0.0, phi2=0.0, phi3=0.0, phi4=0.0) -> np.ndarray:
    """Two-mode passive unitary: phases ``phi1, phi2`` in, beamsplitter, ``phi3, phi4`` out.

    ``cos(theta)**2`` is the transmissivity. Broadcasts over array arguments,
    returning ``(..., 2, 2)``.
    """
    theta, phi1, phi2, phi3, phi4 = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (theta, phi1, phi2, phi3, phi4))
    )
    c, s = np.cos(theta), np.sin(theta)
    U = np.empty(theta.shape + (2, 2), dtype=complex)
    U[..., 0, 0] = np.exp(1j * (phi1 + phi3)) * c
    U[..., 0, 1] = -np.exp(1j * (phi2 + phi3)) * s
    U[..., 1, 0] = np.exp(1j * (phi1 + phi4)) * s
    U[..., 1, 1] = np.exp(1j * (phi2 + phi4)) * c
    return U


def gate_unitaries_from_uniforms(u: np.ndarray) -> np.ndarray:
    """Map uniforms of shape ``(..., 5)`` to Haar two-mode unitaries ``(..., 2, 2)``.

    The first four columns become phases uniform on ``[0, 2pi)``; the last is
    the transmissivity ``cos^2(theta)``, uniform on ``[0, 1]``.
    """
    u = np.asarray(u, dtype=float)
    phases = 2.0 * np.pi * u[..., :4]
    tau = u[..., 4]
    c = np.sqrt(tau)
    s = np.sqrt(1.0 - tau)
    e = np.exp(1j * phases)
    U = np.empty(u.shape[:-1] + (2, 2), dtype=complex)
    U[..., 0, 0] = e[..., 0] * e[..., 2] * c
    U[..., 0, 1] = -e[..., 1] * e[..., 2] * s
    U[..., 1, 0] = e[..., 0] * e[..., 3] * s
    U[..., 1, 1] = e[..., 1] * e[..., 3] * c
    return U


def unitary_to_symplectic(U: np.ndarray, check: bool = True) -> np.ndarray:
    """Real orthogonal-symplectic image of a passive unitary.

    With ``a_j = (x_j + i p_j)/sqrt(2)`` the block acting on mode pair
    ``(i, j)`` is ``[[Re U_ij, -Im U_ij], [Im U_ij, Re U_ij]]``. Works on
    stacks ``(..., m, m)``.

    Raises:
        ValueError: if ``U`` deviates from unitarity by more than 1e-8.
    """
    U = np.asarray(U, dtype=complex)
    m = U.shape[-1]
    if U.shape[-2] != m:
        raise ValueError("unitary must be square")
    if check:
        dev = np.max(np.abs(np.conj(np.swapaxes(U, -1, -2)) @ U - np.eye(m)))
        if dev > UNITARY_TOL:
            raise ValueError(f"matrix is not unitary (deviation {dev:.2e})")
    S = np.empty(U.shape[:-2] + (2 * m, 2 * m))
    S[..., 0::2, 0::2] = U.real
    S[..., 0::2, 1::2] = -U.imag
    S[..., 1::2, 0::2] = U.imag
    S[..., 1::2, 1::2] = U.real
    return S


def haar_two_mode_passive(rng: np.random.Generator):
    """Sample a Haar-random two-mode passive gate.

    Returns:
        tuple: ``(U, S)`` with the 2x2 unitary and its 4x4 symplectic image.
    """
    U = gate_unitaries_from_uniforms(rng.random(5))
    return U, unitary_to_symplectic(U, check=False)


def haar_passive(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random ``m x m`` unitary via QR of a Ginibre matrix with phase fix."""
    if m < 1:
        raise ValueError("need at least one mode")
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def embed(S: np.ndarray, modes, n_modes: int) -> np.ndarray:
    """Embed a symplectic acting on ``modes`` into the full ``2n x 2n`` space."""
    idx = quadrature_indices(modes)
    full = np.eye(2 * n_modes)
    full[np.ix_(idx, idx)] = S
    return full


def quadrature_indices(modes) -> np.ndarray:
    modes = np.asarray(modes, dtype=int).ravel()
    return np.stack([2 * modes, 2 * modes + 1], axis=-1).ravel()


def _check_modes(modes, n_modes: int) -> np.ndarray:
    modes = np.asarray(modes, dtype=int).ravel()
    if modes.size == 0:
        raise ValueError("empty mode list")
    if len(set(modes.tolist())) != modes.size:
        raise ValueError(f"mode indices must be distinct: {modes.tolist()}")
    if modes.min() < 0 or modes.max() >= n_modes:
        raise IndexError(f"mode index out of range for {n_modes} modes: {modes.tolist()}")
    return modes


def apply_gate(V: np.ndarray, S: np.ndarray, modes) -> np.ndarray:
    """Conjugate ``V`` by ``S`` acting on the listed modes (identity elsewhere).

    Only the affected rows and columns are touched, so the cost is linear in
    the total number of modes. ``V`` may carry leading batch dimensions.
    """
    V = np.asarray(V, dtype=float)
    S = np.asarray(S, dtype=float)
    n_modes = V.shape[-1] // 2
    modes = _check_modes(modes, n_modes)
    if S.shape[-1] != 2 * modes.size or S.shape[-2] != 2 * modes.size:
        raise ValueError(
            f"gate acts on {S.shape[-1] // 2} modes but {modes.size} mode indices given"
        )
    idx = quadrature_indices(modes)
    out = V.copy()
    out[..., idx, :] = S @ out[..., idx, :]
    out[..., :, idx] = out[..., :, idx] @ np.swapaxes(S, -1, -2)
    return out


def reduced_covariance(V: np.ndarray, modes) -> np.ndarray:
    """Principal submatrix of ``V`` on the quadratures of ``modes``."""
    V = np.asarray(V)
    modes = _check_modes(modes, V.shape[-1] // 2)
    idx = quadrature_indices(modes)
    return V[..., idx[:, None], idx[None, :]]


def symplectic_eigenvalues(V: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues, sorted ascending, clamped at one.

    These are the moduli of the eigenvalues of ``i Omega V``. For a positive
    definite ``V = L L^T`` the spectrum of ``Omega V`` equals that of the real
    antisymmetric ``L^T Omega L``, so a Hermitian eigensolver can be used.
    Falls back to a general eigensolver when the Cholesky factorisation fails.
    Values within 1e-8 below one are clamped up to one.
    """
    V = np.asarray(V, dtype=float)
    n = V.shape[-1]
    if n % 2 or V.shape[-2] != n:
        raise ValueError(f"covariance matrix must be 2M x 2M, got {V.shape}")
    m = n // 2
    om = symplectic_form(m)
    try:
        L = np.linalg.cholesky(V)
        K = np.swapaxes(L, -1, -2) @ om @ L
        ev = np.linalg.eigvalsh(1j * K)
        nu = np.abs(ev[..., m:])
    except np.linalg.LinAlgError:
        ev = np.linalg.eigvals(om @ V)
        nu = np.sort(np.abs(ev), axis=-1)
        nu = 0.5 * (nu[..., 0::2] + nu[..., 1::2])
    nu = np.sort(nu, axis=-1)
    if np.any(nu < 1.0 - NU_CLAMP_TOL):
        raise np.linalg.LinAlgError(
            f"unphysical covariance matrix: symplectic eigenvalue {nu.min():.12g} < 1"
        )
    return np.maximum(nu, 1.0)


def symplectic_eigenvalues_factor(F: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of ``V = F F^T`` without forming ``V``.

    ``F`` has shape ``(..., 2m, n)`` with ``n >= 2m``. A QR factorisation of
    ``F^T`` gives ``V = R^T R`` and the spectrum follows from ``R Omega R^T``,
    which keeps the error at ``eps * ||V||`` instead of ``eps * cond(V)``.
    The clamping tolerance widens to ``64 eps ||V||`` for strongly squeezed
    states where the default 1e-8 is below floating-point resolution.
    """
    F = np.asarray(F, dtype=float)
    two_m = F.shape[-2]
    if two_m % 2:
        raise ValueError("factor must have an even number of rows")
    m = two_m // 2
    R = np.linalg.qr(np.swapaxes(F, -1, -2), mode="r")[..., :two_m, :]
    K = R @ symplectic_form(m) @ np.swapaxes(R, -1, -2)
    nu = np.sort(np.abs(np.linalg.eigvalsh(1j * K)[..., m:]), axis=-1)
    scale = np.max(np.sum(F**2, axis=-1))
    tol = max(NU_CLAMP_TOL, 64.0 * np.finfo(float).eps * scale)
    if np.any(nu < 1.0 - tol):
        raise np.linalg.LinAlgError(
            f"unphysical covariance matrix: symplectic eigenvalue {nu.min():.12g} < 1"
        )
    return np.maximum(nu, 1.0)


def thermal_entropy(x, kind: EntropyKind = VON_NEUMANN):
    """Entropy in bits of a thermal state with mean photon number ``x``.

    von Neumann: ``(x+1) log2(x+1) - x log2(x)``; Renyi-alpha:
    ``log2((x+1)^alpha - x^alpha) / (alpha - 1)``. Zero at ``x = 0``.
    """
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    if kind.is_von_neumann:
        # log2(x+1) + x log2(1 + 1/x) avoids cancelling two large terms
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = np.where(x > 0, x * np.log1p(1.0 / np.where(x > 0, x, 1.0)), 0.0)
        return np.log2(x + 1.0) + tail / np.log(2.0)
    a = kind.alpha
    # log((x+1)^a - x^a) = a log(x+1) + log1p(-(x/(x+1))^a), stable for large x
    ratio = x / (x + 1.0)
    return (a * np.log2(x + 1.0) + np.log1p(-(ratio**a)) / np.log(2.0)) / (a - 1.0)


def thermal_entropy_derivative(x, kind: EntropyKind = VON_NEUMANN):
    """Derivative of :func:`thermal_entropy` with respect to ``x`` (for ``x > 0``)."""
    x = np.asarray(x, dtype=float)
    if kind.is_von_neumann:
        return np.log2((x + 1.0) / x)
    a = kind.alpha
    num = a * ((x + 1.0) ** (a - 1.0) - x ** (a - 1.0))
    den = ((x + 1.0) ** a - x**a) * np.log(2.0) * (a - 1.0)
    return num / den


def entropy_from_nu(nu, kind: EntropyKind = VON_NEUMANN):
    """Sum of thermal entropies over the last axis of symplectic eigenvalues."""
    return np.sum(thermal_entropy((np.asarray(nu) - 1.0) / 2.0, kind), axis=-1)


def entropy(V_sub: np.ndarray, kind: EntropyKind = VON_NEUMANN):
    """Entropy in bits of the Gaussian state with covariance ``V_sub``."""
    return entropy_from_nu(symplectic_eigenvalues(V_sub), kind)


def log_volume(V_sub: np.ndarray) -> np.ndarray:
    """``log2 sqrt(det V)``, the large-squeezing limit of every entropy."""
    sign, logdet = np.linalg.slogdet(np.asarray(V_sub, dtype=float))
    return 0.5 * logdet / np.log(2.0)


def purity_defect(V: np.ndarray) -> np.ndarray:
    """``|det V - 1|``; zero for pure states in this normalisation."""
    return np.abs(np.exp(2.0 * np.log(2.0) * log_volume(V)) - 1.0)


def mean_photon_number(V: np.ndarray) -> np.ndarray:
    """Total mean photon number ``tr(V - I)/4`` of a zero-mean state."""
    V = np.asarray(V)
    return (np.trace(V, axis1=-2, axis2=-1) - V.shape[-1]) / 4.0
