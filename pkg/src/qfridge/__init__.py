"""Steady-state simulator for few-level self-contained quantum refrigerators."""

from .dynamics import (
    Liouvillian,
    NonUniqueStationaryStateError,
    SteadyStateResult,
    Trajectory,
    build_liouvillian,
    evolve,
    master_rhs,
    steady_state,
)
from .models import (
    FULL_RESET,
    TRANSITION_JUMP,
    BathChannel,
    FridgeModel,
    InteractionTerm,
    MODEL_BUILDERS,
    ParticleSpec,
    ValidityRegimeWarning,
    custom_fridge,
    dissipator,
    qubit_qutrit_fridge,
    single_qutrit_fridge,
    thermal_state,
    two_qubit_fridge,
)
from .observables import (
    TemperatureReading,
    heat_currents,
    particle_temperatures,
    perfect_insulation_limit,
    reduced_state,
    temperature_of,
)
from .tensors import SpaceShape, check_density, embed, kron, partial_trace

__version__ = "0.1.0"

__all__ = [
    "BathChannel",
    "FridgeModel",
    "FULL_RESET",
    "InteractionTerm",
    "Liouvillian",
    "MODEL_BUILDERS",
    "NonUniqueStationaryStateError",
    "ParticleSpec",
    "SpaceShape",
    "SteadyStateResult",
    "TemperatureReading",
    "Trajectory",
    "TRANSITION_JUMP",
    "ValidityRegimeWarning",
    "build_liouvillian",
    "check_density",
    "custom_fridge",
    "dissipator",
    "embed",
    "evolve",
    "heat_currents",
    "kron",
    "master_rhs",
    "partial_trace",
    "particle_temperatures",
    "perfect_insulation_limit",
    "qubit_qutrit_fridge",
    "reduced_state",
    "single_qutrit_fridge",
    "steady_state",
    "temperature_of",
    "thermal_state",
    "two_qubit_fridge",
    "__version__",
]
