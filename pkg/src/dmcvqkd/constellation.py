"""Four-state (QPSK) coherent constellation quantities.

The constellation sends one of ``alpha * exp(i(2k+1)pi/4)``, k = 0..3.  In the
entanglement-based picture Alice's mode is spanned by four states |phi_m>
whose squared normalisation factors are the weights ``xi_m``; these set the
A-B correlation ``Z`` of the equivalent two-mode covariance matrix.

The ``xi_m`` closed form is often printed with negative arguments inside
cosh/sinh/cos/sin.  That variant makes xi_1 and xi_3 negative; the weights
are probabilities, so the positive-argument form is used here and checked
against direct summation of the Fock series (:func:`xi_series_oracle`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Below this alpha^2 every xi_m comes from its lacunary series.
SMALL_ALPHA_SQ = 1e-4
# Below this alpha^2 sinh(x) - sin(x) loses more than ~1e-13 relative.
_XI3_SERIES_BELOW = 0.1


@dataclass(frozen=True)
class Constellation:
    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError(f"alpha must be finite and > 0, got {self.alpha}")

    @classmethod
    def from_variance(cls, v_a: float) -> "Constellation":
        return cls(math.sqrt(v_a / 2))

    @property
    def v_a(self) -> float:
        return 2 * self.alpha**2

    @property
    def amplitudes(self) -> np.ndarray:
        k = np.arange(4)
        return self.alpha * np.exp(1j * (2 * k + 1) * np.pi / 4)


@dataclass(frozen=True)
class XiCoefficients:
    xi: tuple[float, float, float, float]

    def __getitem__(self, m: int) -> float:
        return self.xi[m]

    def __iter__(self):
        return iter(self.xi)

    def as_array(self) -> np.ndarray:
        return np.array(self.xi)

    @property
    def total(self) -> float:
        return math.fsum(self.xi)


def _check_alpha_sq(alpha_sq: float) -> float:
    x = float(alpha_sq)
    if not (math.isfinite(x) and x > 0):
        raise DomainError(f"alpha_sq must be finite and > 0, got {alpha_sq!r}")
    return x


def _lacunary_ratio(x: float, m: int) -> float:
    """sum_n x^(4n) m! / (4n+m)!, i.e. the lacunary series over its first term."""
    term = total = 1.0
    k = m
    while True:
        term *= x**4 / ((k + 1) * (k + 2) * (k + 3) * (k + 4))
        k += 4
        if term <= 1e-17 * total:
            return total
        total += term


def _lacunary(x: float, m: int) -> float:
    """sum_n x^(4n+m) / (4n+m)!  for small x (no exp prefactor)."""
    return x**m / math.factorial(m) * _lacunary_ratio(x, m)


def xi_closed_form(alpha_sq: float) -> XiCoefficients:
    """Weights xi_0..xi_3 of the four-state constellation.

    Evaluated in a cancellation-free form: e^-x cosh x and e^-x sinh x are
    written through ``exp(-2x)``, and cosh x - cos x as
    2 (sinh^2(x/2) + sin^2(x/2)).
    """
    x = _check_alpha_sq(alpha_sq)
    if x < SMALL_ALPHA_SQ:
        e = math.exp(-x)
        return XiCoefficients(tuple(e * _lacunary(x, m) for m in range(4)))

    e = math.exp(-x)
    even = 0.25 * (1 + math.exp(-2 * x))  # e^-x cosh(x) / 2
    odd = -0.25 * math.expm1(-2 * x)  # e^-x sinh(x) / 2
    xi0 = even + 0.5 * e * math.cos(x)
    if x < 1:
        xi2 = e * (math.sinh(x / 2) ** 2 + math.sin(x / 2) ** 2)
    else:
        xi2 = even - 0.5 * e * math.cos(x)
    xi1 = odd + 0.5 * e * math.sin(x)
    if x < _XI3_SERIES_BELOW:
        xi3 = e * _lacunary(x, 3)
    else:
        xi3 = odd - 0.5 * e * math.sin(x)
    return XiCoefficients((xi0, xi1, xi2, xi3))


def xi_series_oracle(alpha_sq: float, n_max: int = 40) -> XiCoefficients:
    """Brute-force xi_m = e^-x sum_{4n+m <= 4 n_max} x^(4n+m) / (4n+m)!.

    Terms are generated by successive ratios so no factorial is formed.  A
    ``RuntimeWarning`` is emitted when the last retained term is not
    negligible, i.e. the truncation is too short for this ``alpha_sq``.
    """
    x = _check_alpha_sq(alpha_sq)
    if n_max < 10:
        raise DomainError(f"n_max must be >= 10, got {n_max}")
    # x^j / j! * e^-x, built incrementally from j = 0
    term = math.exp(-x)
    parts: list[list[float]] = [[], [], [], []]
    for j in range(4 * n_max + 1):
        if j > 0:
            term *= x / j
        parts[j % 4].append(term)
    sums = [math.fsum(p) for p in parts]
    tail = max(p[-1] for p in parts)
    if tail > 1e-16 * min(sums):
        warnings.warn(
            f"xi series truncated at n_max={n_max} has not converged for "
            f"alpha_sq={x} (last term {tail:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    return XiCoefficients(tuple(sums))


def _log_xi(x: float) -> list[float]:
    if x < SMALL_ALPHA_SQ:
        return [
            -x + m * math.log(x) - math.lgamma(m + 1) + math.log(_lacunary_ratio(x, m))
            for m in range(4)
        ]
    return [math.log(v) for v in xi_closed_form(x)]


def correlation_z(v_a: float) -> float:
    """A-B correlation Z of the four-state covariance matrix.

    Z = 2 alpha^2 sum_m xi_m^{3/2} xi_{m+1}^{-1/2}, evaluated from log-weights
    so that xi_3 ~ alpha^6 / 6 never underflows for tiny alpha.
    """
    if not (math.isfinite(v_a) and v_a > 0):
        raise DomainError(f"v_a must be finite and > 0, got {v_a!r}")
    x = v_a / 2
    lx = _log_xi(x)
    s = math.fsum(math.exp(1.5 * lx[m] - 0.5 * lx[(m + 1) % 4]) for m in range(4))
    return 2 * x * s


def z_epr(v_a: float) -> float:
    """Correlation of the Gaussian-modulated (two-mode squeezed) counterpart."""
    if not math.isfinite(v_a) or v_a < 0:
        raise DomainError(f"v_a must be finite and >= 0, got {v_a!r}")
    return math.sqrt(v_a * v_a + 2 * v_a)
