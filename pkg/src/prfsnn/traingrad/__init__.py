"""Reverse-mode training over the parallel spiking pipeline."""

from .model import (
    FeedForwardSNN,
    LifNeuron,
    Linear,
    PrfNeuron,
    SdTcmBlockParams,
    SdTcmNet,
    SpatialNeuron,
    TrainConfig,
    build_model,
    readout,
    sdtcm_forward,
)
from .ops import SurrogateSpec, surrogate_grad
from .optim import AdamW
from .tape import Param, Tape, Var, backward
from .tasks import impulse_half_task
from .trainer import SequenceDataset, evaluate, load_checkpoint, save_checkpoint, train

__all__ = [
    "AdamW",
    "FeedForwardSNN",
    "LifNeuron",
    "Linear",
    "Param",
    "PrfNeuron",
    "SdTcmBlockParams",
    "SdTcmNet",
    "SequenceDataset",
    "SpatialNeuron",
    "SurrogateSpec",
    "Tape",
    "TrainConfig",
    "Var",
    "backward",
    "build_model",
    "evaluate",
    "impulse_half_task",
    "load_checkpoint",
    "readout",
    "save_checkpoint",
    "sdtcm_forward",
    "surrogate_grad",
    "train",
]
