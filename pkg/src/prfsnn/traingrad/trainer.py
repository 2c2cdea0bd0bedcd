"""Mini-batch training loop, evaluation and checkpoints."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import ops
from .model import Module, TrainConfig, build_model
from .optim import AdamW
from .tape import Tape

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass
class SequenceDataset:
    """Sequences ``x (n, T)`` or ``(n, T, n_in)`` with integer labels ``y (n,)``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("sequence and label counts differ")

    def __len__(self):
        return len(self.y)

    def batch(self, idx: np.ndarray, dtype="float64") -> tuple[np.ndarray, np.ndarray]:
        xb = self.x[idx]
        if xb.ndim == 2:
            xb = xb[:, :, None]
        return np.ascontiguousarray(np.transpose(xb, (1, 0, 2)), dtype=dtype), self.y[idx]


def forward_batch(model: Module, xb: np.ndarray, record: dict | None = None):
    tape = Tape()
    logits = model.forward(tape, tape.constant(xb), record)
    return tape, logits


def evaluate(model: Module, data: SequenceDataset, batch_size: int = 256) -> dict:
    if hasattr(model, "set_training"):
        model.set_training(False)
    losses, correct = [], 0
    dtype = model.cfg.dtype
    for start in range(0, len(data), batch_size):
        idx = np.arange(start, min(start + batch_size, len(data)))
        xb, yb = data.batch(idx, dtype)
        _, logits = forward_batch(model, xb)
        losses.append(float(ops.cross_entropy(logits, yb).value) * len(idx))
        correct += int((logits.value.argmax(axis=1) == yb).sum())
    if hasattr(model, "set_training"):
        model.set_training(True)
    return {"loss": sum(losses) / len(data), "acc": correct / len(data)}


def train(
    model: Module,
    data: SequenceDataset,
    config: TrainConfig,
    test: SequenceDataset | None = None,
    callback=None,
) -> list[dict]:
    """Fit ``model`` and return one metrics record per epoch.

    Raises ``FloatingPointError`` as soon as a batch loss is not finite.
    """
    rng = np.random.default_rng(config.seed)
    opt = AdamW(model.params(), config.lr, config.neuron_lr, config.weight_decay)
    history = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(data))
        loss_sum, correct = 0.0, 0
        for start in range(0, len(data), config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = data.batch(idx, config.dtype)
            opt.zero_grad()
            tape, logits = forward_batch(model, xb)
            loss = ops.cross_entropy(logits, yb)
            value = float(loss.value)
            if not np.isfinite(value):
                raise FloatingPointError(
                    f"non-finite loss {value} at epoch {epoch}, batch starting {start}; "
                    "lower the learning rate or check the input scale"
                )
            tape.backward(loss)
            opt.step()
            model.project()
            loss_sum += value * len(idx)
            correct += int((logits.value.argmax(axis=1) == yb).sum())
        record = {"epoch": epoch, "loss": loss_sum / len(data), "acc": correct / len(data)}
        if test is not None:
            ev = evaluate(model, test)
            record["test_loss"], record["test_acc"] = ev["loss"], ev["acc"]
        log.info("epoch %d %s", epoch, record)
        history.append(record)
        if callback is not None and callback(record) is False:
            break
    return history


def save_checkpoint(model: Module, path) -> None:
    """Write every parameter array to an ``.npz`` archive (bit-exact round trip)."""
    arrays = {name: p.value for name, p in model.named_params().items()}
    arrays["__format_version__"] = np.array(CHECKPOINT_VERSION, dtype=np.int64)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(model: Module, path) -> Module:
    with np.load(path) as archive:
        version = int(archive["__format_version__"]) if "__format_version__" in archive else None
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        params = model.named_params()
        missing = set(params) - set(archive.files)
        if missing:
            raise ValueError(f"checkpoint lacks parameters: {sorted(missing)}")
        for name, p in params.items():
            arr = archive[name]
            if arr.shape != p.value.shape or arr.dtype != p.value.dtype:
                raise ValueError(f"{name}: checkpoint has {arr.dtype}{arr.shape}, model {p.value.dtype}{p.value.shape}")
            p.value = arr.copy()
    return model


def new_model(config: TrainConfig) -> Module:
    return build_model(config)
