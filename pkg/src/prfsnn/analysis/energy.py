"""Operation counting and inference-energy estimates for sequence mixers.

Counts are per layer per timestep, split into multiply-accumulates (MAC),
accumulates (AC) and elementwise multiplies (M). Spike-driven linears cost
``R * D^2`` accumulates, where ``R`` is the firing rate of the spiking input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("s4-legs", "binary-s4d", "gsu", "ours")

PJ_PER_MJ = 1e9


@dataclass(frozen=True)
class EnergyModel:
    """Energy per operation in picojoules (45 nm figures by default)."""

    e_mac: float = 4.6
    e_ac: float = 0.9
    e_m: float = 3.7

    def __post_init__(self):
        if min(self.e_mac, self.e_ac, self.e_m) <= 0:
            raise ValueError("energy constants must be positive")
        if self.e_ac >= self.e_mac:
            raise ValueError("an accumulate must cost less than a multiply-accumulate")


@dataclass(frozen=True)
class LayerSpec:
    """One mixer layer: width ``d``, state size ``h`` (SSM families only)."""

    d: int
    h: int = 64


@dataclass
class OpCounts:
    mac: float = 0.0
    ac: float = 0.0
    m: float = 0.0

    def __post_init__(self):
        self.mac, self.ac, self.m = float(self.mac), float(self.ac), float(self.m)

    def __add__(self, other: "OpCounts") -> "OpCounts":
        return OpCounts(self.mac + other.mac, self.ac + other.ac, self.m + other.m)

    def scaled(self, k: float) -> "OpCounts":
        return OpCounts(self.mac * k, self.ac * k, self.m * k)

    def energy_pj(self, model: EnergyModel) -> float:
        return self.mac * model.e_mac + self.ac * model.e_ac + self.m * model.e_m


@dataclass
class LayerEnergy:
    token: OpCounts
    channel: OpCounts
    rates: tuple[float, ...]
    energy_mj: float


@dataclass
class EnergyReport:
    family: str
    seq_len: int
    model: EnergyModel
    layers: list[LayerEnergy] = field(default_factory=list)

    @property
    def total_mj(self) -> float:
        return float(sum(layer.energy_mj for layer in self.layers))

    @property
    def counts(self) -> OpCounts:
        total = OpCounts()
        for layer in self.layers:
            total = total + layer.token + layer.channel
        return total.scaled(self.seq_len)

    def records(self) -> list[dict]:
        rows = []
        for i, layer in enumerate(self.layers):
            rows.append(
                {
                    "family": self.family,
                    "layer": i,
                    "seq_len": self.seq_len,
                    "token_mac": layer.token.mac,
                    "token_ac": layer.token.ac,
                    "token_m": layer.token.m,
                    "channel_mac": layer.channel.mac,
                    "channel_ac": layer.channel.ac,
                    "channel_m": layer.channel.m,
                    "rates": ";".join(f"{r:.6g}" for r in layer.rates),
                    "energy_mj": layer.energy_mj,
                }
            )
        return rows


def layer_counts(family: str, spec: LayerSpec, rates: tuple[float, ...]) -> tuple[OpCounts, OpCounts]:
    """Per-timestep ``(token mixing, channel mixing)`` counts for one layer.

    ``rates`` holds the firing rates the family needs: none for S4-LegS, one
    for the binary/ternary SSMs, ``(temporal, spatial)`` for ours.
    """
    d, h = spec.d, spec.h
    ssm_token = OpCounts(mac=(h * h + d * h) + (h * d + d * d))
    if family == "s4-legs":
        return ssm_token, OpCounts(mac=d * d + d * d + 2 * d, m=d)
    if family in ("binary-s4d", "gsu"):
        (r,) = rates
        return ssm_token, OpCounts(mac=2 * d, ac=2 * r * d * d, m=d)
    if family == "ours":
        r_tn, r_sn = rates
        # neuron update and membrane shortcut, then spike-driven Linear1 plus residual add
        token = OpCounts(m=5 * d, ac=3 * d + r_tn * d * d + d)
        return token, OpCounts(ac=r_sn * d * d + d)
    raise ValueError(f"unknown model family {family!r}; expected one of {FAMILIES}")


def _rates_for(family: str, firing_rates, n_layers: int) -> list[tuple[float, ...]]:
    need = {"s4-legs": 0, "binary-s4d": 1, "gsu": 1, "ours": 2}.get(family)
    if need is None:
        raise ValueError(f"unknown model family {family!r}; expected one of {FAMILIES}")
    if need == 0:
        return [()] * n_layers
    if firing_rates is None:
        raise ValueError(f"family {family!r} needs firing rates")
    arr = np.asarray(firing_rates, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full((n_layers, need), float(arr))
    elif arr.ndim == 1 and need == 1:
        arr = arr[:, None]
    if arr.shape != (n_layers, need):
        raise ValueError(f"expected firing rates of shape ({n_layers}, {need}), got {arr.shape}")
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("firing rates must lie in [0, 1]")
    return [tuple(float(v) for v in row) for row in arr]


def estimate_energy(
    arch: list[LayerSpec],
    firing_rates,
    seq_len: int,
    model: EnergyModel = EnergyModel(),
    family: str = "ours",
) -> EnergyReport:
    """Inference energy of ``arch`` over ``seq_len`` timesteps.

    ``firing_rates`` is a scalar, a per-layer list, or for ``ours`` a list of
    ``(temporal, spatial)`` pairs. Fractions, not percentages.
    """
    if seq_len < 1:
        raise ValueError("seq_len must be positive")
    rates = _rates_for(family, firing_rates, len(arch))
    report = EnergyReport(family, seq_len, model)
    for spec, r in zip(arch, rates):
        token, channel = layer_counts(family, spec, r)
        pj = (token.energy_pj(model) + channel.energy_pj(model)) * seq_len
        report.layers.append(LayerEnergy(token, channel, r, pj / PJ_PER_MJ))
    return report


# ListOps model: 8 SD-TCM layers of width 128 on length-2000 sequences.
# Per-layer firing rates in percent, temporal (TN) then spatial (SN) neuron.
LISTOPS_TN_RATES = (0.0, 5.17, 2.50, 2.83, 0.80, 1.17, 3.02, 2.22)
LISTOPS_SN_RATES = (9.60, 5.29, 4.51, 2.63, 5.58, 3.57, 9.57, 5.07)
LISTOPS_SEQ_LEN = 2000
LISTOPS_DEPTH = 8
LISTOPS_WIDTH = 128


def listops_preset(h: int = 64) -> tuple[list[LayerSpec], list[tuple[float, float]], int]:
    arch = [LayerSpec(LISTOPS_WIDTH, h) for _ in range(LISTOPS_DEPTH)]
    rates = [(tn / 100.0, sn / 100.0) for tn, sn in zip(LISTOPS_TN_RATES, LISTOPS_SN_RATES)]
    return arch, rates, LISTOPS_SEQ_LEN


def listops_ratio(model: EnergyModel = EnergyModel(), h: int = 64) -> tuple[EnergyReport, EnergyReport]:
    """``(ours, s4-legs)`` reports for the ListOps configuration."""
    arch, rates, L = listops_preset(h)
    ours = estimate_energy(arch, rates, L, model, "ours")
    s4 = estimate_energy(arch, None, L, model, "s4-legs")
    return ours, s4


def firing_rate_stats(spikes_per_layer) -> dict:
    """Fraction of nonzero entries per layer and their unweighted mean.

    Accepts a dict ``name -> array`` or a sequence of arrays.
    """
    if isinstance(spikes_per_layer, dict):
        items = list(spikes_per_layer.items())
    else:
        items = [(str(i), s) for i, s in enumerate(spikes_per_layer)]
    if not items:
        raise ValueError("no spike tensors given")
    per_layer = {}
    for name, s in items:
        arr = np.asarray(s)
        if arr.size == 0:
            raise ValueError(f"layer {name!r} has no entries")
        per_layer[name] = float(np.count_nonzero(arr)) / arr.size
    return {"per_layer": per_layer, "average": float(np.mean(list(per_layer.values())))}
