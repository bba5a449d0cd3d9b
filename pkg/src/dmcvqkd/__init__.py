"""Discrete-modulation (QPSK) continuous-variable QKD: security analysis,
modulation optimisation, receiver DSP, Monte Carlo simulation and
parameter estimation."""

__version__ = "0.1.0"

from .constellation import Constellation, XiCoefficients, correlation_z, xi_closed_form, xi_series_oracle, z_epr
from .errors import (
    ConfigError,
    DetectorModelError,
    DomainError,
    EstimationError,
    LinearizationError,
    PhysicalityError,
)
from .estimate import (
    EstimationResult,
    backout_detector_noise,
    empirical_mutual_information,
    estimate_channel,
    raw_key_bits,
)
from .optimize import Optimum, SweepRow, SweepSpec, calibrate_convention, optimal_modulation, sweep
from .params import ChannelParams, DetectorParams, ProtocolParams, SourceNoise
from .security import SecurityReport, key_rate
from .simulate import RunConfig, SymbolRecords, run

__all__ = [
    "Constellation", "XiCoefficients", "correlation_z", "xi_closed_form", "xi_series_oracle", "z_epr",
    "ConfigError", "DetectorModelError", "DomainError", "EstimationError", "LinearizationError",
    "PhysicalityError",
    "EstimationResult", "backout_detector_noise", "empirical_mutual_information", "estimate_channel",
    "raw_key_bits",
    "Optimum", "SweepRow", "SweepSpec", "calibrate_convention", "optimal_modulation", "sweep",
    "ChannelParams", "DetectorParams", "ProtocolParams", "SourceNoise",
    "SecurityReport", "key_rate",
    "RunConfig", "SymbolRecords", "run",
]
