"""Generic Gaussian-state machinery in the (x1, p1, x2, p2, ...) ordering.

Shot-noise units: x = a + a^dagger, so the vacuum covariance is the identity
and the symplectic form has entries +-1.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, PhysicalityError

SIGMA_Z = np.diag([1.0, -1.0])


def symplectic_form(n_modes: int) -> np.ndarray:
    omega = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(n_modes), omega)


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic spectrum (descending) from the moduli of eig(i Omega cov)."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    if cov.shape != (2 * n, 2 * n):
        raise DomainError(f"covariance must be square of even size, got {cov.shape}")
    ev = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ cov))
    # eigenvalues come in +-nu pairs
    return np.sort(ev)[::-1][::2].copy()


def entropy_g(x: float) -> float:
    """Von Neumann entropy (bits) of a thermal mode with symplectic eigenvalue x.

    g(x) = (x+1)/2 log2((x+1)/2) - (x-1)/2 log2((x-1)/2)
    """
    if not math.isfinite(x):
        raise DomainError(f"g(x) needs finite x, got {x!r}")
    if x < 1 - 1e-6:
        raise DomainError(f"symplectic eigenvalue {x} < 1 is unphysical")
    x = max(x, 1.0)
    hi = (x + 1) / 2
    out = hi * math.log2(hi)
    if x - 1 >= 1e-12:
        lo = (x - 1) / 2
        out -= lo * math.log2(lo)
    return out


def two_mode_squeezed(v: float) -> np.ndarray:
    """EPR state with local variance ``v``: [[v I, c Z], [c Z, v I]]."""
    if v < 1:
        raise DomainError(f"EPR variance must be >= 1, got {v}")
    c = math.sqrt(v * v - 1)
    eye = np.eye(2)
    return np.block([[v * eye, c * SIGMA_Z], [c * SIGMA_Z, v * eye]])


def beam_splitter(transmission: float, n_modes: int, i: int, j: int) -> np.ndarray:
    """Symplectic matrix mixing modes i (signal) and j (ancilla).

    Output i' = sqrt(t) i + sqrt(1-t) j,  j' = -sqrt(1-t) i + sqrt(t) j.
    """
    t = float(transmission)
    if not 0 <= t <= 1:
        raise DomainError(f"transmission must lie in [0, 1], got {t}")
    s = np.eye(2 * n_modes)
    ct, st = math.sqrt(t), math.sqrt(1 - t)
    ii, jj = slice(2 * i, 2 * i + 2), slice(2 * j, 2 * j + 2)
    eye = np.eye(2)
    s[ii, ii] = ct * eye
    s[ii, jj] = st * eye
    s[jj, ii] = -st * eye
    s[jj, jj] = ct * eye
    return s


def mode_indices(modes) -> list[int]:
    return [q for m in modes for q in (2 * m, 2 * m + 1)]


def heterodyne_condition(cov: np.ndarray, measured: int) -> np.ndarray:
    """Covariance of the remaining modes after heterodyning mode ``measured``.

    gamma_rest - sigma (gamma_m + I)^-1 sigma^T; independent of the outcome.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    rest = mode_indices([m for m in range(n) if m != measured])
    meas = mode_indices([measured])
    g_r = cov[np.ix_(rest, rest)]
    g_m = cov[np.ix_(meas, meas)]
    sig = cov[np.ix_(rest, meas)]
    return g_r - sig @ np.linalg.solve(g_m + np.eye(2), sig.T)


def check_physical(cov: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Raise :class:`PhysicalityError` unless every symplectic eigenvalue >= 1."""
    nu = symplectic_eigenvalues(cov)
    if nu[-1] < 1 - tol:
        raise PhysicalityError(f"smallest symplectic eigenvalue {nu[-1]:.12g} < 1")
    return nu
