"""Two squeezed defect oscillators coupled to a finite harmonic ion chain.

Modules
-------
model
    Dimensionless parameters and the quadratic Hamiltonian.
spectral
    Normal modes of the chain, spectral density, memory kernel, isolated frequencies.
states
    Squeezed and thermal initial covariances, frame changes of the squeezing.
dynamics
    Exact covariance evolution, plateau and time-scale analysis.
entanglement
    Logarithmic negativity and the steady-state entanglement phases.
cli
    Command-line front end.
"""
from .dynamics import (
    NormalModeDecomposition,
    com_variance_series,
    measure_plateau,
    simulate_defects,
    thermal_steady_estimate,
)
from .entanglement import Phase, classify_phase, logarithmic_negativity, steady_state_negativity
from .exceptions import ConfigError, NumericalError
from .model import ModelParams, build_full_system
from .spectral import bath_spectrum, find_isolated_frequencies, revival_time
from .states import SqueezeParams, bare_from_shifted, shifted_from_bare

__all__ = [
    "ConfigError",
    "ModelParams",
    "NormalModeDecomposition",
    "NumericalError",
    "Phase",
    "SqueezeParams",
    "bare_from_shifted",
    "bath_spectrum",
    "build_full_system",
    "classify_phase",
    "com_variance_series",
    "find_isolated_frequencies",
    "logarithmic_negativity",
    "measure_plateau",
    "revival_time",
    "shifted_from_bare",
    "simulate_defects",
    "steady_state_negativity",
    "thermal_steady_estimate",
]
__version__ = "0.1.0"
