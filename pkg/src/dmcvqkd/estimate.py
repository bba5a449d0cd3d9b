"""Parameter estimation from prepare-and-measure records.

Bob's outcome per quadrature is modelled as b = g a + r with Var(r) = r^2.
Since Var(b) = (eta T / 2)(V_A + 1 + chi_t), the slope gives g^2 = eta T / 2
and the residual variance gives chi_t = r^2 / g^2 - 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EstimationError
from .simulate import SymbolRecords

MIN_RECORDS = 1000
Z95 = 1.959963984540054


@dataclass(frozen=True)
class QuadratureFit:
    slope: float
    slope_se: float
    residual_var: float
    signal_var: float
    n: int


@dataclass
class EstimationResult:
    gain_sq: float
    chi_t_hat: float
    t_hat: float
    snr_hat: float
    i_ab_hat: float
    n_used: int
    ci: dict = field(default_factory=dict)
    per_quadrature: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _fit(a: np.ndarray, b: np.ndarray) -> QuadratureFit:
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    ac = a - a.mean()
    bc = b - b.mean()
    saa = ac @ ac
    if saa == 0:
        raise EstimationError("channel opaque: Alice's quadratures carry no modulation")
    slope = (ac @ bc) / saa
    resid = bc - slope * ac
    r2 = (resid @ resid) / (a.size - 2)
    return QuadratureFit(slope, math.sqrt(r2 / saa), r2, slope**2 * saa / a.size, a.size)


def _check(records: SymbolRecords) -> None:
    if len(records) < MIN_RECORDS:
        raise EstimationError(f"need at least {MIN_RECORDS} records, got {len(records)}")


def _chi_t(fit_g: float, fit_r2: float) -> float:
    return fit_r2 / fit_g**2 - 1


def estimate_channel(records: SymbolRecords, v_a: float, eta: float) -> EstimationResult:
    """Slope / residual estimates of eta T / 2, chi_t and T, pooled over X and P."""
    _check(records)
    fx = _fit(records.alice_x, records.bob_x)
    fp = _fit(records.alice_p, records.bob_p)
    pooled = _fit(np.concatenate([records.alice_x, records.alice_p]),
                  np.concatenate([records.bob_x, records.bob_p]))
    g, r2, n = pooled.slope, pooled.residual_var, pooled.n
    if abs(g) < 1e-6:
        raise EstimationError(f"channel opaque: fitted slope {g:.3g}")
    gain_sq = g * g
    chi = _chi_t(g, r2)
    t_hat = 2 * gain_sq / eta
    snr = gain_sq * v_a / r2

    # delta-method standard errors; Var(r^2) ~ 2 r^4 / n for Gaussian residuals
    se_g = pooled.slope_se
    se_r2 = r2 * math.sqrt(2 / n)
    se_chi = math.hypot(se_r2 / gain_sq, 2 * r2 * se_g / abs(g) ** 3)
    se_gain_sq = 2 * abs(g) * se_g
    se_snr = snr * math.hypot(2 * se_g / abs(g), se_r2 / r2)
    i_ab, se_i = _information(records)

    def interval(x, se):
        return (x - Z95 * se, x + Z95 * se)

    ci = {
        "gain_sq": interval(gain_sq, se_gain_sq),
        "chi_t_hat": interval(chi, se_chi),
        "t_hat": interval(t_hat, 2 * se_gain_sq / eta),
        "snr_hat": interval(snr, se_snr),
        "i_ab_hat": interval(i_ab, se_i),
    }
    per_q = {
        q: {"slope": f.slope, "residual_var": f.residual_var, "chi_t_hat": _chi_t(f.slope, f.residual_var)}
        for q, f in (("x", fx), ("p", fp))
    }
    return EstimationResult(gain_sq, chi, t_hat, snr, i_ab, len(records), ci, per_q)


def backout_detector_noise(chi_t_hat: float, t: float, eps: float, eta: float) -> float:
    """Electronic noise consistent with a measured total noise.

    Inverts chi_d = 2 (1 + upsilon) / eta - 1 and chi_t = chi_c + chi_d / t.
    """
    chi_c = 1 / t - 1 + eps
    upsilon = eta / 2 * ((chi_t_hat - chi_c) * t + 1) - 1
    if upsilon < -1e-3:
        warnings.warn(f"inconsistent inputs: backed-out electronic noise {upsilon:.4g} < 0",
                      RuntimeWarning, stacklevel=2)
    return upsilon


def _information(records: SymbolRecords) -> tuple[float, float]:
    total, var = 0.0, 0.0
    for a, b in ((records.alice_x, records.bob_x), (records.alice_p, records.bob_p)):
        f = _fit(a, b)
        if not f.residual_var > 0:
            raise EstimationError("non-positive residual variance")
        snr = f.signal_var / f.residual_var
        total += 0.5 * math.log2(1 + snr)
        # d/dsnr of 0.5 log2(1 + snr), with Var(snr) from slope and residual errors
        se_snr = snr * math.hypot(2 * f.slope_se / abs(f.slope), math.sqrt(2 / f.n)) if f.slope else 0.0
        var += (se_snr / (2 * math.log(2) * (1 + snr))) ** 2
    return total, math.sqrt(var)


def empirical_mutual_information(records: SymbolRecords) -> float:
    """Gaussian-channel estimate sum over quadratures of 1/2 log2(1 + SNR), bits/symbol."""
    _check(records)
    return _information(records)[0]


@dataclass(frozen=True)
class RawKey:
    alice_bits: np.ndarray
    bob_bits: np.ndarray
    mismatch_rate: float
    mismatch_x: float
    mismatch_p: float


def raw_key_bits(records: SymbolRecords) -> RawKey:
    """Two bits per symbol from the quadrature signs (bit = 1 for positive)."""
    alice = np.column_stack([records.alice_x > 0, records.alice_p > 0]).astype(np.uint8)
    bob = np.column_stack([records.bob_x > 0, records.bob_p > 0]).astype(np.uint8)
    diff = alice != bob
    if diff.size == 0:
        return RawKey(alice.ravel(), bob.ravel(), math.nan, math.nan, math.nan)
    return RawKey(alice.ravel(), bob.ravel(), float(diff.mean()),
                  float(diff[:, 0].mean()), float(diff[:, 1].mean()))
