"""Theory checks, frequency response, energy accounting and firing rates."""

from .energy import (
    FAMILIES,
    EnergyModel,
    EnergyReport,
    LayerSpec,
    OpCounts,
    estimate_energy,
    firing_rate_stats,
    layer_counts,
    listops_preset,
    listops_ratio,
)
from .theory import (
    EquivalenceCount,
    FrequencyResponse,
    Theorem3Result,
    check_theorem1,
    check_theorem2,
    check_theorem3,
    closed_form_gain,
    discrete_gain,
    frequency_response,
    kernel_gradient_diagnostic,
    theorem3_limits,
    theorem3_steps,
)

__all__ = [
    "FAMILIES",
    "EnergyModel",
    "EnergyReport",
    "EquivalenceCount",
    "FrequencyResponse",
    "LayerSpec",
    "OpCounts",
    "Theorem3Result",
    "check_theorem1",
    "check_theorem2",
    "check_theorem3",
    "closed_form_gain",
    "discrete_gain",
    "estimate_energy",
    "firing_rate_stats",
    "frequency_response",
    "kernel_gradient_diagnostic",
    "layer_counts",
    "listops_preset",
    "listops_ratio",
    "theorem3_limits",
    "theorem3_steps",
]
