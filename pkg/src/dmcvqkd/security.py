"""Collective-attack lower bound on the key rate (reverse reconciliation).

The four-state protocol is mapped onto a Gaussian-modulated protocol with the
same two-mode covariance matrix, through an equivalent channel (T, eps).  The
bound is then

    K = beta I(a:b) - [g(l1) + g(l2)] + [g(l3) + g(l4)]

with l1, l2 the symplectic spectrum of the A-B state and l3, l4 that of the
(A, G, H) modes after Bob's heterodyne measurement, G/H being the
purification of the detector's electronic noise.

Two notes on the commonly printed formulas:

* The four-state Bob block ``T0 (V_A + eps0 + delta_eps)`` lacks the vacuum
  ``+ 1``; the Gaussian form ``T (V_A + eps) + 1`` is used, which the
  equivalent-channel map keeps consistent because
  ``T (V_A + eps) = T0 (V_A + eps0 + delta_eps)``.
* The printed conditional coefficient ``C`` carries ``2 a (a b - c^2) chi_d``
  where the heterodyne conditioning gives ``2 chi_d (a sqrt(B) + b)``.  The
  printed variant yields complex eigenvalues already for a pure lossless
  state, so it is kept only as ``mode="literal"``.  :func:`key_rate` uses the
  corrected form; ``mode="oracle"`` conditions the full (A, B', G, H)
  covariance numerically.  With the corrected ``C`` one has
  ``C - 2 sqrt(D) = ((a - b) chi_d + sqrt(B) - 1)^2 / (b + chi_d)^2``, so the
  eigenvalues follow from their difference and product without cancellation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gaussian
from .constellation import correlation_z, z_epr
from .errors import DetectorModelError, DomainError, PhysicalityError
from .params import ChannelParams, DetectorParams, ProtocolParams, SourceNoise

CONVENTIONS = ("single", "doubled")
CONDITIONAL_MODES = ("oracle", "closed_form", "literal")
_TOL = 1e-9


@dataclass(frozen=True)
class EquivalentChannel:
    t: float
    eps: float


@dataclass(frozen=True)
class NoiseBudget:
    chi_c: float
    chi_d: float
    chi_t: float


@dataclass(frozen=True)
class TwoModeCov:
    """gamma_AB = [[a I, c Z], [c Z, b I]] with Z = diag(1, -1)."""

    a: float
    b: float
    c: float

    def matrix(self) -> np.ndarray:
        eye = np.eye(2)
        return np.block(
            [[self.a * eye, self.c * gaussian.SIGMA_Z], [self.c * gaussian.SIGMA_Z, self.b * eye]]
        )

    @property
    def det_block(self) -> float:
        return self.a * self.b - self.c**2


@dataclass
class SecurityReport:
    v_a: float
    beta: float
    convention: str
    conditional_mode: str
    channel: EquivalentChannel
    budget: NoiseBudget
    i_ab: float
    lambdas: tuple[float, float, float, float]
    s_ab: float
    s_cond: float
    holevo: float
    key_rate_per_symbol: float
    key_rate_per_second: float
    secure: bool = field(init=False)

    def __post_init__(self):
        self.secure = self.key_rate_per_symbol > 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambdas"] = list(self.lambdas)
        return d


def detector_thermal_variance(det: DetectorParams) -> float:
    """Variance N of the thermal mode that models electronic noise.

    Obtained by equating eta/2 V_B + (1-eta)/2 N + 1/2 with
    eta (V_B/2 + 1/2) + (1 - eta) + upsilon.
    """
    if det.eta >= 1:
        raise DetectorModelError("thermal model undefined for eta = 1; use the additive-noise path")
    return 1 + 2 * det.upsilon / (1 - det.eta)


def equivalent_gaussian_channel(
    v_a: float, ch: ChannelParams, src: SourceNoise = SourceNoise()
) -> EquivalentChannel:
    if not (math.isfinite(v_a) and v_a > 0):
        raise DomainError(f"v_a must be > 0, got {v_a!r}")
    ratio = (correlation_z(v_a) / z_epr(v_a)) ** 2
    t = ch.t0 * ratio
    eps = (v_a + ch.eps0 + src.delta_eps) / ratio - v_a
    return EquivalentChannel(t, eps)


def noise_budget(equiv: EquivalentChannel, det: DetectorParams) -> NoiseBudget:
    if equiv.t <= 0:
        raise DomainError(f"transmittance must be > 0, got {equiv.t}")
    chi_c = 1 / equiv.t - 1 + equiv.eps
    chi_d = 2 * (1 + det.upsilon) / det.eta - 1
    return NoiseBudget(chi_c, chi_d, chi_c + chi_d / equiv.t)


def mutual_information(v_a: float, chi_t: float, convention: str = "single") -> float:
    """Alice-Bob Shannon information in bits per symbol, log2((V + chi_t)/(chi_t + 1)).

    ``convention="doubled"`` counts the two heterodyne quadratures a second
    time; it exists for calibration against a reference optimum only.
    """
    if convention not in CONVENTIONS:
        raise DomainError(f"unknown convention {convention!r}")
    if v_a < 0 or chi_t < 0:
        raise DomainError(f"need v_a >= 0 and chi_t >= 0, got {v_a}, {chi_t}")
    i = math.log2((v_a + 1 + chi_t) / (chi_t + 1))
    return 2 * i if convention == "doubled" else i


def covariance_ab(v_a: float, equiv: EquivalentChannel) -> TwoModeCov:
    cov = TwoModeCov(
        a=v_a + 1,
        b=equiv.t * (v_a + equiv.eps) + 1,
        c=math.sqrt(equiv.t) * z_epr(v_a),
    )
    if cov.det_block < 1 - _TOL:
        raise PhysicalityError(f"ab - c^2 = {cov.det_block:.12g} < 1")
    gaussian.check_physical(cov.matrix(), _TOL)
    return cov


def _invariants(cov: TwoModeCov) -> tuple[float, float]:
    big_a = cov.a**2 + cov.b**2 - 2 * cov.c**2
    big_b = cov.det_block**2
    return big_a, big_b


def _pair(s: float, p: float, what: str) -> tuple[float, float]:
    """Solve l1^2 + l2^2 = s, l1^2 l2^2 = p for l1 >= l2."""
    disc = s * s - 4 * p
    if disc < -_TOL * max(1.0, s * s):
        raise PhysicalityError(f"{what}: discriminant {disc:.3g} < 0 (complex eigenvalues)")
    root = math.sqrt(max(disc, 0.0))
    return math.sqrt(0.5 * (s + root)), math.sqrt(max(0.5 * (s - root), 0.0))


def _split(diff: float, prod: float) -> tuple[float, float]:
    """l1 >= l2 from l1 - l2 = diff and l1 l2 = prod.

    Both inputs are free of cancellation, so degenerate spectra stay accurate
    to rounding (the quadratic-root route loses half the digits there).
    """
    total = math.sqrt(diff * diff + 4 * prod)
    return 0.5 * (total + diff), 0.5 * (total - diff)


def channel_symplectic_eigenvalues(cov: TwoModeCov) -> tuple[float, float]:
    # l1^2 + l2^2 = A, l1 l2 = sqrt(B); A - 2 sqrt(B) = (a - b)^2
    return _split(abs(cov.a - cov.b), cov.det_block)


def _conditional_closed_form(cov: TwoModeCov, chi_d: float, literal: bool) -> tuple[float, float]:
    a, b = cov.a, cov.b
    sb = cov.det_block
    if not literal:
        # C - 2 sqrt(D) = ((a - b) chi_d + sqrt(B) - 1)^2 / (b + chi_d)^2
        diff = abs((a - b) * chi_d + sb - 1) / (b + chi_d)
        return _split(diff, (a + sb * chi_d) / (b + chi_d))
    big_a, big_b = _invariants(cov)
    c2 = cov.c**2
    denom = (b + chi_d) ** 2
    big_c = (big_a * chi_d**2 + 2 * a * (a * b - c2) * chi_d + 2 * c2 + big_b + 1) / denom
    big_d = (a + sb * chi_d) ** 2 / denom
    try:
        return _pair(big_c, big_d, "literal C")
    except PhysicalityError as exc:
        raise PhysicalityError(f"literal formula unphysical here: {exc}") from exc


def _conditional_oracle(cov: TwoModeCov, det: DetectorParams) -> tuple[float, float]:
    """Heterodyne-condition the explicit (A, B', G, H) Gaussian state."""
    if det.eta >= 1:
        if det.upsilon > 0:
            # no finite thermal purification exists; use the eta -> 1 limit
            return _conditional_closed_form(cov, 2 * (1 + det.upsilon) / det.eta - 1, False)
        rest = gaussian.heterodyne_condition(cov.matrix(), measured=1)
        nu = gaussian.symplectic_eigenvalues(rest)
        return float(nu[0]), 1.0
    n_th = detector_thermal_variance(det)
    # modes: 0 = A, 1 = B, 2 = G, 3 = H0
    full = np.zeros((8, 8))
    full[:4, :4] = cov.matrix()
    full[4:, 4:] = gaussian.two_mode_squeezed(n_th)
    s = gaussian.beam_splitter(det.eta, 4, 1, 3)
    full = s @ full @ s.T
    rest = gaussian.heterodyne_condition(full, measured=1)
    nu = gaussian.symplectic_eigenvalues(rest)
    # the conditioned (A, G, H) state has one trivial mode
    return float(nu[0]), float(nu[1])


def conditional_symplectic_eigenvalues(
    cov: TwoModeCov, det: DetectorParams, mode: str = "oracle"
) -> tuple[float, float]:
    """Symplectic spectrum (l3, l4) of (A, G, H) after Bob's heterodyne.

    ``oracle`` conditions the explicit covariance matrix, ``closed_form`` is
    the corrected analytic expression, ``literal`` the uncorrected variant
    (raises :class:`PhysicalityError` where it goes complex).
    """
    if mode == "oracle":
        return _conditional_oracle(cov, det)
    chi_d = 2 * (1 + det.upsilon) / det.eta - 1
    if mode == "closed_form":
        return _conditional_closed_form(cov, chi_d, literal=False)
    if mode == "literal":
        return _conditional_closed_form(cov, chi_d, literal=True)
    raise DomainError(f"unknown conditional mode {mode!r}")


def key_rate(
    params: ProtocolParams,
    ch: ChannelParams,
    src: SourceNoise,
    det: DetectorParams,
    convention: str = "single",
    conditional: str = "closed_form",
) -> SecurityReport:
    """Full chain: equivalent channel, noise budget, I(a:b), spectra, bound.

    A negative key rate is returned unchanged with ``secure = False``.
    """
    if convention not in CONVENTIONS:
        raise DomainError(f"unknown convention {convention!r}")
    v_a = params.v_a
    equiv = equivalent_gaussian_channel(v_a, ch, src)
    budget = noise_budget(equiv, det)
    i_ab = mutual_information(v_a, budget.chi_t)
    cov = covariance_ab(v_a, equiv)
    l1, l2 = channel_symplectic_eigenvalues(cov)
    l3, l4 = conditional_symplectic_eigenvalues(cov, det, conditional)
    s_ab = gaussian.entropy_g(l1) + gaussian.entropy_g(l2)
    s_cond = gaussian.entropy_g(l3) + gaussian.entropy_g(l4)
    holevo = s_ab - s_cond
    scale = 2 if convention == "doubled" else 1
    k = scale * (params.beta * i_ab - holevo)
    return SecurityReport(
        v_a=v_a,
        beta=params.beta,
        convention=convention,
        conditional_mode=conditional,
        channel=equiv,
        budget=budget,
        i_ab=scale * i_ab,
        lambdas=(l1, l2, l3, l4),
        s_ab=s_ab,
        s_cond=s_cond,
        holevo=scale * holevo,
        key_rate_per_symbol=k,
        key_rate_per_second=k * params.symbol_rate,
    )
