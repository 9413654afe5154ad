"""Flow-driven magnetic nanoparticle communication: channel model, synthesis,
estimation and detection."""

from .cir import BetaInit, CirModel, cir, cir_limit, cir_numeric_oracle, cir_windowed, h_peak, t_peak, t_start
from .detection import DetectionResult, IncreaseParams, increase_detect, increase_params, viterbi_detect
from .errors import ConfigError, NumericError, SpionError, SyncNotFound
from .estimation import ChannelEstimate, fit_model, fit_samples
from .experiment import ExperimentSpec, emit_report, read_report, run_data_transmission, run_experiment, run_pulse_train
from .params import TestbedConfig
from .physics import regime_report, regime_thresholds
from .signal import (
    RegularSignal,
    SampledSignal,
    SymbolSequence,
    pam_synthesize,
    resample_linear,
    simulate_rx,
    synchronize,
)

__version__ = "0.1.0"

__all__ = [
    "BetaInit",
    "ChannelEstimate",
    "CirModel",
    "ConfigError",
    "DetectionResult",
    "ExperimentSpec",
    "IncreaseParams",
    "NumericError",
    "RegularSignal",
    "SampledSignal",
    "SpionError",
    "SymbolSequence",
    "SyncNotFound",
    "TestbedConfig",
    "cir",
    "cir_limit",
    "cir_numeric_oracle",
    "cir_windowed",
    "emit_report",
    "fit_model",
    "fit_samples",
    "h_peak",
    "increase_detect",
    "increase_params",
    "pam_synthesize",
    "read_report",
    "regime_report",
    "regime_thresholds",
    "resample_linear",
    "run_data_transmission",
    "run_experiment",
    "run_pulse_train",
    "simulate_rx",
    "synchronize",
    "t_peak",
    "t_start",
    "viterbi_detect",
]
