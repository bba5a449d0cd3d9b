"""Receiver signal chain: carrier mixing, FIR low-pass, decimation and
band-limited symbol recovery.

The filtered detector output V(t) is sampled every ``tau``.  Each symbol value
is proportional to the integral of V(t) over its period ``T = 5 tau``;
substituting the Whittaker-Shannon series for V(t) turns that integral into a
weighted sum of samples with weights

    S_i = integral_{-i tau}^{(5 - i) tau} sinc(t / tau) dt,

which is symmetric about i = 2.5 and decays away from it.  ``sinc`` is the
normalised sin(pi u)/(pi u); only that form interpolates exactly at t = i tau.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, signal

from .errors import ConfigError

DEFAULT_TRUNCATION = (0, 5)
FIR_TAPS = 129


@dataclass
class Waveform:
    sample_rate: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if not self.sample_rate > 0:
            raise ConfigError(f"sample_rate must be > 0, got {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise ConfigError("waveform contains non-finite samples")

    @property
    def tau(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.sample_rate

    def __len__(self) -> int:
        return self.samples.size

    def save(self, path) -> None:
        """Write little-endian float64 samples plus a ``.json`` sidecar."""
        path = Path(path)
        self.samples.astype("<f8").tofile(path)
        meta = {"sample_rate": self.sample_rate, "t0": self.t0,
                "n_samples": int(self.samples.size), "dtype": "<f8"}
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "Waveform":
        path = Path(path)
        meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        samples = np.fromfile(path, dtype="<f8")
        if samples.size != meta["n_samples"]:
            raise ConfigError(f"{path}: expected {meta['n_samples']} samples, found {samples.size}")
        return cls(meta["sample_rate"], samples, meta["t0"])

    def to_csv(self, path) -> None:
        data = np.column_stack([self.times, self.samples])
        np.savetxt(path, data, delimiter=",", header="t,v", comments="", fmt="%.17g")


@dataclass(frozen=True)
class SincKernel:
    """Recovery weights S_i (in seconds) for i in ``indices``."""

    tau: float
    indices: np.ndarray
    s: np.ndarray
    samples_per_symbol: int = 5

    def __getitem__(self, i: int) -> float:
        j = i - int(self.indices[0])
        if not 0 <= j < self.indices.size:
            raise IndexError(f"S_{i} not computed (window {self.indices[0]}..{self.indices[-1]})")
        return float(self.s[j])

    def window(self, lo: int, hi: int) -> np.ndarray:
        return np.array([self[i] for i in range(lo, hi + 1)])


def sinc_coefficients(
    tau: float,
    index_range: tuple[int, int] = (-20, 25),
    samples_per_symbol: int = 5,
    method: str = "adaptive",
) -> SincKernel:
    """Integrate the normalised sinc over each shifted symbol window.

    Works in the scaled variable u = t / tau.  ``adaptive`` runs Gauss-Kronrod
    per index (absolute error < 1e-12 tau).  ``gauss`` applies one fixed
    48-node Gauss-Legendre rule per unit sub-interval to all indices at once;
    it is meant for very wide windows (10^6 indices).
    """
    i_min, i_max = index_range
    if i_min > i_max:
        raise ConfigError(f"empty index range {index_range}")
    m = samples_per_symbol
    idx = np.arange(i_min, i_max + 1)
    if method == "adaptive":
        out = np.empty(idx.size)
        for j, i in enumerate(idx):
            val, err = integrate.quad(np.sinc, -float(i), float(m - i),
                                      epsabs=1e-14, epsrel=1e-13, limit=200)
            if not err < 1e-12:
                raise ArithmeticError(f"quadrature for S_{i} did not converge (error {err:.2g})")
            out[j] = val
    elif method == "gauss":
        nodes, wts = np.polynomial.legendre.leggauss(48)
        # integral over each unit cell [c, c + 1], then a sliding sum of m cells
        cells = np.arange(-i_max, m - i_min, dtype=float)
        unit = (np.sinc(cells[:, None] + 0.5 * (nodes[None, :] + 1)) @ wts) * 0.5
        csum = np.concatenate([[0.0], np.cumsum(unit)])
        start = -idx - cells[0]
        start = start.astype(int)
        out = csum[start + m] - csum[start]
    else:
        raise ConfigError(f"unknown quadrature method {method!r}")
    return SincKernel(float(tau), idx, out * tau, m)


def reconstruct(w: Waveform, t) -> np.ndarray:
    """Band-limited interpolation sum_i V_i sinc((t - t0)/tau - i)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    u = (t - w.t0) / w.tau
    n = w.samples.size
    if np.any(u < -10) or np.any(u > n - 1 + 10):
        warnings.warn("reconstruction requested more than 10 samples outside the record",
                      RuntimeWarning, stacklevel=2)
    i = np.arange(n)
    return np.sinc(u[:, None] - i[None, :]) @ w.samples


@dataclass
class RecoveredSymbols:
    """Per-symbol weighted sums for one detector arm.

    ``first_symbol`` is the index of values[0]; ``n_dropped`` counts symbols
    whose sample window fell outside the record.
    """

    values: np.ndarray
    first_symbol: int
    n_dropped: int


@dataclass
class SymbolQuadratures:
    x: np.ndarray
    p: np.ndarray
    scale: float = 1.0
    first_symbol: int = 0
    n_dropped: int = 0

    def __post_init__(self):
        if len(self.x) != len(self.p):
            raise ValueError("x and p must have equal length")
        if not self.scale > 0:
            raise ValueError("scale must be > 0")


def recover_symbols(
    w: Waveform,
    symbol_period: float,
    kernel: SincKernel,
    truncation: tuple[int, int] = DEFAULT_TRUNCATION,
    start_index: int = 0,
    n_symbols: int | None = None,
) -> RecoveredSymbols:
    """X_n = sum_{i=lo}^{hi} V[start + m n + i] S_i for every complete symbol.

    ``start_index`` is the sample at the leading edge of symbol 0.  Symbols
    whose window [lo, hi] is not fully inside the record are dropped.
    """
    m = kernel.samples_per_symbol
    if not math.isclose(symbol_period, m * w.tau, rel_tol=1e-9):
        raise ConfigError(f"symbol_period {symbol_period} != {m} x sampling interval {w.tau}")
    if not math.isclose(kernel.tau, w.tau, rel_tol=1e-9):
        raise ConfigError("kernel sampling interval does not match the waveform")
    lo, hi = truncation
    weights = kernel.window(lo, hi)
    n_total = n_symbols if n_symbols is not None else (w.samples.size - start_index) // m
    n = np.arange(n_total)
    first = start_index + m * n + lo
    last = start_index + m * n + hi
    ok = (first >= 0) & (last < w.samples.size)
    n_ok = n[ok]
    if n_ok.size == 0:
        return RecoveredSymbols(np.empty(0), 0, int(n_total))
    # strided gather: rows are symbols, columns are offsets lo..hi
    offs = np.arange(lo, hi + 1)
    gather = w.samples[(start_index + m * n_ok)[:, None] + offs[None, :]]
    return RecoveredSymbols(gather @ weights, int(n_ok[0]), int(n_total - n_ok.size))


def recover_quadratures(
    w_x: Waveform,
    w_p: Waveform,
    symbol_period: float,
    kernel: SincKernel,
    truncation: tuple[int, int] = DEFAULT_TRUNCATION,
    scale: float = 1.0,
    start_index: int = 0,
    n_symbols: int | None = None,
) -> SymbolQuadratures:
    rx = recover_symbols(w_x, symbol_period, kernel, truncation, start_index, n_symbols)
    rp = recover_symbols(w_p, symbol_period, kernel, truncation, start_index, n_symbols)
    if rx.first_symbol != rp.first_symbol or rx.values.size != rp.values.size:
        raise ConfigError("X and P records cover different symbols")
    return SymbolQuadratures(scale * rx.values, scale * rp.values, scale, rx.first_symbol, rx.n_dropped)


def lowpass_taps(sample_rate: float, cutoff_hz: float, numtaps: int = FIR_TAPS) -> np.ndarray:
    """Blackman-windowed sinc low-pass with unit DC gain."""
    if not 0 < cutoff_hz < sample_rate / 2:
        raise ConfigError(f"cutoff {cutoff_hz} Hz must lie below Nyquist ({sample_rate / 2} Hz)")
    if numtaps % 2 == 0:
        raise ConfigError("numtaps must be odd for an integer group delay")
    return signal.firwin(numtaps, cutoff_hz, window="blackman", fs=sample_rate)


def fir_filter(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Zero-phase application of an odd-length linear-phase FIR (delay removed)."""
    return signal.oaconvolve(x, taps, mode="same")


def mix_and_filter(
    w: Waveform,
    carrier_hz: float,
    phase: float = 0.0,
    cutoff_hz: float = 25e6,
    numtaps: int = FIR_TAPS,
) -> Waveform:
    """Multiply by cos(2 pi f_c t + phase) and low-pass filter.

    A tone at the carrier with the same phase leaves a DC level of half its
    amplitude.
    """
    nyq = w.sample_rate / 2
    if not 0 < carrier_hz < nyq:
        raise ConfigError(f"carrier {carrier_hz} Hz must lie below Nyquist ({nyq} Hz)")
    taps = lowpass_taps(w.sample_rate, cutoff_hz, numtaps)
    lo = np.cos(2 * np.pi * carrier_hz * w.times + phase)
    return Waveform(w.sample_rate, fir_filter(w.samples * lo, taps), w.t0)


def downsample(w: Waveform, target_rate: float) -> Waveform:
    """Keep every k-th sample, k = sample_rate / target_rate (integer)."""
    ratio = w.sample_rate / target_rate
    k = int(round(ratio))
    if k < 1 or not math.isclose(ratio, k, rel_tol=1e-9):
        raise ConfigError(f"rate ratio {ratio} is not a positive integer")
    return Waveform(target_rate, w.samples[::k].copy(), w.t0)
