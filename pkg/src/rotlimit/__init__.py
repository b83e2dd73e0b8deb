"""Numerical lab for the low Rossby/Mach number limit of rotating compressible flow."""
from .thermo import DomainError, DimensionError, ScalingParams, CutoffChi
from .spectral import Grid
from .euler import FlowState, PositivityError, integrate
from .target import TargetState, StabilityError, target_integrate
from .acoustic import AcousticState, acoustic_propagate
from .config import ConfigError, RunConfig, load_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "DomainError", "DimensionError", "ScalingParams", "CutoffChi", "Grid",
    "FlowState", "PositivityError", "integrate", "TargetState", "StabilityError",
    "target_integrate", "AcousticState", "acoustic_propagate", "ConfigError",
    "RunConfig", "load_config", "parse_config",
]
