"""Parallel spiking neurons: decoupled-reset LIF and resonate-and-fire (PRF)."""

__version__ = "0.1.0"
