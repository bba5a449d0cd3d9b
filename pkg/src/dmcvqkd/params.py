"""Parameter containers for the protocol, channel, source and detector.

All variances are in shot-noise units (vacuum quadrature variance = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ProtocolParams:
    """Modulation variance, reconciliation efficiency and encoding rate."""

    v_a: float
    beta: float = 0.8
    symbol_rate: float = 1e7

    def __post_init__(self):
        if _finite("v_a", self.v_a) < 0:
            raise DomainError(f"v_a must be >= 0, got {self.v_a}")
        if not 0 < _finite("beta", self.beta) <= 1:
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")
        if _finite("symbol_rate", self.symbol_rate) <= 0:
            raise DomainError(f"symbol_rate must be > 0, got {self.symbol_rate}")

    @property
    def alpha(self) -> float:
        return math.sqrt(self.v_a / 2)


@dataclass(frozen=True)
class ChannelParams:
    t0: float
    eps0: float = 0.0

    def __post_init__(self):
        if not 0 < _finite("t0", self.t0) <= 1:
            raise DomainError(f"t0 must lie in (0, 1], got {self.t0}")
        if _finite("eps0", self.eps0) < 0:
            raise DomainError(f"eps0 must be >= 0, got {self.eps0}")

    @classmethod
    def from_loss_db(cls, loss_db: float, eps0: float = 0.0) -> "ChannelParams":
        return cls(t0=10 ** (-float(loss_db) / 10), eps0=eps0)

    @property
    def loss_db(self) -> float:
        return -10 * math.log10(self.t0)


@dataclass(frozen=True)
class SourceNoise:
    delta_eps: float = 0.0

    def __post_init__(self):
        if _finite("delta_eps", self.delta_eps) < 0:
            raise DomainError(f"delta_eps must be >= 0, got {self.delta_eps}")


@dataclass(frozen=True)
class DetectorParams:
    """Heterodyne detector: efficiency ``eta`` and electronic noise ``upsilon``."""

    eta: float = 1.0
    upsilon: float = 0.0

    def __post_init__(self):
        if not 0 < _finite("eta", self.eta) <= 1:
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")
        if _finite("upsilon", self.upsilon) < 0:
            raise DomainError(f"upsilon must be >= 0, got {self.upsilon}")
