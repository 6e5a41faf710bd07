"""Coincidence, key-rate, QBER and Bell-parameter model for polarization-entangled QKD."""
__version__ = "0.1.0"

from .config import ConfigError, ExperimentConfig, build_config, load_config, preset_names
from .coincidence import CoincidenceRates, total_coincidence_rates
from .correction import CorrectionResult, correct
from .polarization import EntanglementParams, PbsParams, joint_probabilities
from .protocols import ProtocolResult, bb84, ekert_chsh, ekert_wigner, evaluate_all
from .security import SecurityResult, evaluate

__all__ = [
    "ConfigError",
    "CoincidenceRates",
    "CorrectionResult",
    "EntanglementParams",
    "ExperimentConfig",
    "PbsParams",
    "ProtocolResult",
    "SecurityResult",
    "bb84",
    "build_config",
    "correct",
    "ekert_chsh",
    "ekert_wigner",
    "evaluate",
    "evaluate_all",
    "joint_probabilities",
    "load_config",
    "preset_names",
    "total_coincidence_rates",
]
