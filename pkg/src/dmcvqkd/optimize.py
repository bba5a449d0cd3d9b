"""Modulation-variance optimisation, parameter sweeps and convention calibration."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, PhysicalityError
from .params import ChannelParams, DetectorParams, ProtocolParams, SourceNoise
from .security import CONVENTIONS, key_rate

INV_PHI = (math.sqrt(5) - 1) / 2
COARSE_POINTS = 64
FINE_POINTS = 10_000
DEFAULT_BOUNDS = (1e-3, 2.0)

# Optimal key rate per symbol with zero electronic noise, T0 = 0.1,
# eta = 0.8, beta = 0.8.
UPSILON0_TARGET = 5.02e-3


@dataclass(frozen=True)
class Optimum:
    v_a_star: float
    key_rate_star: float
    iterations: int
    bracket: tuple[float, float]
    positive: bool = True
    unimodal: bool = True


def golden_section_max(
    f: Callable[[float], float], lo: float, hi: float, tol: float
) -> tuple[float, float, int, tuple[float, float]]:
    """Maximise a unimodal ``f`` on [lo, hi] until the bracket is narrower than tol.

    Returns (x_best, f_best, n_evaluations, final_bracket).
    """
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    n = 2
    while b - a >= tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        n += 1
    x, fx = (c, fc) if fc >= fd else (d, fd)
    return x, fx, n, (a, b)


def _safe_rate(
    v_a: float, ch, src, det, beta: float, convention: str, conditional: str
) -> float:
    try:
        return key_rate(ProtocolParams(v_a, beta), ch, src, det, convention, conditional).key_rate_per_symbol
    except (PhysicalityError, DomainError):
        return -math.inf


def _single_peak(values: np.ndarray) -> bool:
    """True when the discrete slope changes sign at most once, from + to -."""
    if not np.all(np.isfinite(values)):
        return False
    slope = np.sign(np.diff(values))
    slope = slope[slope != 0]
    changes = int(np.count_nonzero(slope[1:] != slope[:-1]))
    return changes == 0 or (changes == 1 and bool(slope[0] > 0))


def optimal_modulation(
    ch: ChannelParams,
    src: SourceNoise,
    det: DetectorParams,
    beta: float,
    bounds: tuple[float, float] = DEFAULT_BOUNDS,
    tol: float = 1e-4,
    convention: str = "single",
    conditional: str = "closed_form",
) -> Optimum:
    """Maximise the key rate over the modulation variance.

    A 64-point scan brackets the peak; golden-section search refines it when
    the scan shows a single rise-then-fall, otherwise a 10^4-point grid is used
    before refinement.
    """
    lo, hi = bounds
    if not 0 < lo < hi:
        raise DomainError(f"bounds must satisfy 0 < lo < hi, got {bounds}")

    def f(v):
        return _safe_rate(v, ch, src, det, beta, convention, conditional)

    grid = np.linspace(lo, hi, COARSE_POINTS)
    values = np.array([f(v) for v in grid])
    evals = grid.size
    unimodal = _single_peak(values)
    if not unimodal:
        grid = np.linspace(lo, hi, FINE_POINTS)
        values = np.array([f(v) for v in grid])
        evals += grid.size
    i = int(np.argmax(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, grid.size - 1)]
    x, fx, n, bracket = golden_section_max(f, a, b, tol)
    evals += n
    if values[i] > fx:
        x, fx = float(grid[i]), float(values[i])
    return Optimum(
        v_a_star=float(x),
        key_rate_star=float(fx),
        iterations=evals,
        bracket=(float(a), float(b)),
        positive=fx > 0,
        unimodal=unimodal,
    )


@dataclass(frozen=True)
class CalibrationReport:
    convention: str
    target: float
    optima: dict
    relative_errors: dict
    reference: dict = field(default_factory=dict)


def calibrate_convention(
    target: float = UPSILON0_TARGET,
    ch: ChannelParams = ChannelParams(0.1),
    det: DetectorParams = DetectorParams(0.8, 0.0),
    beta: float = 0.8,
    src: SourceNoise = SourceNoise(),
) -> CalibrationReport:
    """Pick the information-counting convention closest to a reference optimum."""
    optima, errors = {}, {}
    for conv in CONVENTIONS:
        opt = optimal_modulation(ch, src, det, beta, convention=conv)
        optima[conv] = {"v_a_star": opt.v_a_star, "key_rate_star": opt.key_rate_star}
        errors[conv] = abs(opt.key_rate_star - target) / target
    best = min(errors, key=errors.get)
    reference = {"t0": ch.t0, "eps0": ch.eps0, "delta_eps": src.delta_eps,
                 "eta": det.eta, "upsilon": det.upsilon, "beta": beta}
    return CalibrationReport(best, target, optima, errors, reference)


SWEEP_VARIABLES = ("v_a", "loss_db", "upsilon", "beta")


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional sweep.

    The parameter objects supply every non-swept value.  With ``optimize_v_a`` the
    modulation variance is re-optimised at each grid point (ignored when the
    swept variable is ``v_a`` itself).
    """

    variable: str
    grid: Sequence[float]
    params: ProtocolParams
    channel: ChannelParams
    source: SourceNoise = SourceNoise()
    detector: DetectorParams = DetectorParams()
    convention: str = "single"
    optimize_v_a: bool = False
    bounds: tuple[float, float] = DEFAULT_BOUNDS
    tol: float = 1e-4

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise DomainError(f"unknown sweep variable {self.variable!r}")
        grid = np.asarray(self.grid, dtype=float)
        if grid.size == 0:
            raise DomainError("sweep grid is empty")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("sweep grid must be strictly increasing")


@dataclass(frozen=True)
class SweepRow:
    swept_value: float
    v_a: float
    key_rate_per_symbol: float
    key_rate_per_second: float
    i_ab: float
    holevo: float
    valid: bool
    error: str = ""


def _point(spec: SweepSpec, value: float):
    params, ch, det = spec.params, spec.channel, spec.detector
    if spec.variable == "v_a":
        params = replace(params, v_a=value)
    elif spec.variable == "loss_db":
        ch = ChannelParams.from_loss_db(value, ch.eps0)
    elif spec.variable == "upsilon":
        det = replace(det, upsilon=value)
    else:
        params = replace(params, beta=value)
    return params, ch, det


def _row(spec: SweepSpec, value: float) -> SweepRow:
    nan = math.nan
    try:
        params, ch, det = _point(spec, value)
        if spec.optimize_v_a and spec.variable != "v_a":
            opt = optimal_modulation(ch, spec.source, det, params.beta, spec.bounds, spec.tol,
                                     spec.convention)
            params = replace(params, v_a=opt.v_a_star)
        rep = key_rate(params, ch, spec.source, det, spec.convention)
    except (DomainError, PhysicalityError) as exc:
        return SweepRow(value, nan, nan, nan, nan, nan, False, str(exc))
    return SweepRow(value, params.v_a, rep.key_rate_per_symbol, rep.key_rate_per_second,
                    rep.i_ab, rep.holevo, True)


def sweep(spec: SweepSpec, jobs: int = 1) -> list[SweepRow]:
    """Evaluate one row per grid point, in grid order."""
    grid = [float(v) for v in spec.grid]
    if jobs <= 1 or len(grid) == 1:
        return [_row(spec, v) for v in grid]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_row, [spec] * len(grid), grid))
