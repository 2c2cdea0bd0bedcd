"""Spiking layers, the SD-TCM block and small classification networks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..seqcore import build_lif_kernel
from . import ops
from .tape import Param, Tape, Var


@dataclass
class TrainConfig:
    model: str = "prf"  # prf | lif | sdtcm
    depth: int = 2
    width: int = 64
    n_in: int = 1
    n_classes: int = 10
    lr: float = 5e-3
    neuron_lr: float = 1e-3
    weight_decay: float = 0.05
    batch_size: int = 50
    epochs: int = 10
    delta_range: tuple[float, float] = (0.001, 0.1)
    theta_max: float = math.pi / 4
    tau_init: float = 2.0
    v_th: float = 1.0
    lif_beta: float = 0.5
    surrogate_width: float = 2.0
    bidirectional: bool = False
    norm: bool = False
    train_neurons: bool = True
    hidden_bias: bool = False
    dtype: str = "float64"
    seed: int = 0

    def __post_init__(self):
        self.delta_range = tuple(float(v) for v in self.delta_range)
        if self.model not in ("prf", "lif", "sdtcm"):
            raise ValueError(f"unknown model {self.model!r}")
        lo, hi = self.delta_range
        if not 0 < lo < hi:
            raise ValueError("delta_range must satisfy 0 < delta_min < delta_max")
        for name in ("depth", "width", "batch_size", "n_in", "n_classes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.epochs < 0 or self.lr < 0 or self.neuron_lr < 0 or self.weight_decay < 0:
            raise ValueError("epochs, learning rates and weight decay must be non-negative")
        if self.theta_max < 0 or self.tau_init <= 0 or self.v_th <= 0:
            raise ValueError("theta_max >= 0, tau_init > 0 and v_th > 0 required")
        if not 0 < self.lif_beta < 1:
            raise ValueError("lif_beta must lie in (0, 1)")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")

    @property
    def surrogate(self) -> ops.SurrogateSpec:
        return ops.SurrogateSpec("atan", self.surrogate_width)


class Module:
    def children(self) -> list["Module"]:
        out = []
        for value in vars(self).values():
            if isinstance(value, Module):
                out.append(value)
            elif isinstance(value, (list, tuple)):
                out.extend(item for item in value if isinstance(item, Module))
        return out

    def params(self) -> list[Param]:
        out = [v for v in vars(self).values() if isinstance(v, Param)]
        for child in self.children():
            out.extend(child.params())
        return out

    def named_params(self) -> dict[str, Param]:
        return {p.name: p for p in self.params()}

    def project(self):
        for child in self.children():
            child.project()

    def set_surrogate(self, spec: ops.SurrogateSpec):
        """Swap the spike surrogate everywhere below this module (e.g. smooth mode for gradient checks)."""
        if hasattr(self, "surrogate"):
            self.surrogate = spec
        for child in self.children():
            child.set_surrogate(spec)


class Linear(Module):
    """Affine map; ``bias=False`` keeps a layer event-driven (zero in, zero out)."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, name: str, dtype="float64", bias=True):
        bound = 1.0 / math.sqrt(n_in)
        self.W = Param(rng.uniform(-bound, bound, (n_in, n_out)).astype(dtype), "weight", f"{name}.W")
        self.b = Param(rng.uniform(-bound, bound, n_out).astype(dtype), "weight", f"{name}.b") if bias else None

    def __call__(self, tape: Tape, x: Var) -> Var:
        b = tape.watch(self.b) if self.b is not None else None
        return ops.linear(x, tape.watch(self.W), b)


class PrfNeuron(Module):
    """Trainable PRF layer: log-step, log-time-constant and rotation per channel."""

    def __init__(self, n: int, cfg: TrainConfig, rng: np.random.Generator, name: str):
        lo, hi = cfg.delta_range
        log_delta = rng.uniform(math.log(lo), math.log(hi), n)
        theta = rng.uniform(0.0, cfg.theta_max, n)
        log_tau = np.full(n, math.log(cfg.tau_init))
        group = "neuron" if cfg.train_neurons else "frozen"
        self.log_delta = Param(log_delta.astype(cfg.dtype), group, f"{name}.log_delta")
        self.log_tau = Param(log_tau.astype(cfg.dtype), group, f"{name}.log_tau")
        self.theta = Param(theta.astype(cfg.dtype), group, f"{name}.theta")
        self.v_th = cfg.v_th
        self.surrogate = cfg.surrogate

    def membrane(self, tape: Tape, x: Var) -> Var:
        K = ops.prf_real_kernel(
            tape.watch(self.log_delta), tape.watch(self.log_tau), tape.watch(self.theta), x.shape[0]
        )
        return ops.causal_conv(x, K)

    def __call__(self, tape: Tape, x: Var) -> Var:
        return ops.spike(self.membrane(tape, x), self.v_th, self.surrogate)

    def project(self):
        # keep tau > delta so the kernel decays
        floor = self.log_delta.value + math.log(1.01)
        np.maximum(self.log_tau.value, floor, out=self.log_tau.value)


class LifNeuron(Module):
    """Parallel soft-reset LIF with fixed decay; the reset scan is stop-gradient."""

    def __init__(self, beta: float, cfg: TrainConfig, sequential: bool = False):
        self.beta = beta
        self.v_th = cfg.v_th
        self.surrogate = cfg.surrogate
        self.sequential = sequential
        self.dtype = cfg.dtype

    def __call__(self, tape: Tape, x: Var) -> Var:
        if self.sequential:
            return lif_sequential_graph(x, self.beta, self.v_th, self.surrogate)
        T, _, N = x.shape
        K = build_lif_kernel(np.full(N, self.beta), T).values.astype(x.value.dtype)
        return ops.lif_fire(ops.causal_conv(x, tape.constant(K)), self.v_th, self.beta, self.surrogate)


def lif_sequential_graph(x: Var, beta: float, v_th: float, spec: ops.SurrogateSpec) -> Var:
    """BPTT form: one charge/fire/reset subgraph per timestep.

    The reset term is detached, matching the parallel form where the
    scanned threshold carries no gradient.
    """
    tape = x.tape
    T = x.shape[0]
    u = None
    s_prev = None
    spikes = []
    for t in range(T):
        c = ops.select_time(x, t)
        if u is None:
            h = c
        else:
            h = ops.add(ops.scale(ops.sub(u, tape.constant(v_th * s_prev.value)), beta), c)
        s = ops.spike(h, v_th, spec)
        spikes.append(s)
        u, s_prev = h, s
    return ops.stack_time(spikes)


class SpatialNeuron(Module):
    """Stateless threshold with trainable output amplitude ``alpha`` (init 1)."""

    def __init__(self, n: int, cfg: TrainConfig, name: str):
        self.alpha = Param(np.ones(n, dtype=cfg.dtype), "weight", f"{name}.alpha")
        self.v_th = cfg.v_th
        self.surrogate = cfg.surrogate

    def __call__(self, tape: Tape, x: Var) -> Var:
        return ops.mul(ops.spike(x, self.v_th, self.surrogate), tape.watch(self.alpha))


class BatchNorm(Module):
    """Per-channel normalization over time and batch; running stats for eval."""

    def __init__(self, n: int, cfg: TrainConfig, name: str, momentum: float = 0.1, eps: float = 1e-5):
        self.gamma = Param(np.ones(n, dtype=cfg.dtype), "weight", f"{name}.gamma")
        self.beta = Param(np.zeros(n, dtype=cfg.dtype), "weight", f"{name}.beta")
        self.running_mean = np.zeros(n, dtype=cfg.dtype)
        self.running_var = np.ones(n, dtype=cfg.dtype)
        self.momentum = momentum
        self.eps = eps
        self.training = True

    def __call__(self, tape: Tape, x: Var) -> Var:
        xv = x.value
        if self.training:
            mean = xv.mean(axis=(0, 1))
            var = xv.var(axis=(0, 1))
            self.running_mean += self.momentum * (mean - self.running_mean)
            self.running_var += self.momentum * (var - self.running_var)
        else:
            mean, var = self.running_mean, self.running_var
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (xv - mean) * inv
        training = self.training
        m = xv.shape[0] * xv.shape[1]

        def vjp(g):
            if not training:
                return (g * inv,)
            gsum = g.sum(axis=(0, 1))
            gxsum = (g * xhat).sum(axis=(0, 1))
            return ((g - gsum / m - xhat * gxsum / m) * inv,)

        normed = tape.record(xhat, (x,), vjp)
        return ops.add(ops.mul(normed, tape.watch(self.gamma)), tape.watch(self.beta))


class SdTcmBlockParams(Module):
    """Token mixing (PRF + linear) then channel mixing (spatial neuron + linear),
    both with membrane-shortcut residuals."""

    def __init__(self, d: int, cfg: TrainConfig, rng: np.random.Generator, name: str = "block"):
        self.mode = "bidirectional" if cfg.bidirectional else "causal"
        self.temporal = PrfNeuron(d, cfg, rng, f"{name}.tn")
        self.temporal_rev = PrfNeuron(d, cfg, rng, f"{name}.tn_rev") if cfg.bidirectional else None
        self.linear1 = Linear(2 * d if cfg.bidirectional else d, d, rng, f"{name}.linear1", cfg.dtype, cfg.hidden_bias)
        self.spatial = SpatialNeuron(d, cfg, f"{name}.sn")
        self.linear2 = Linear(d, d, rng, f"{name}.linear2", cfg.dtype, cfg.hidden_bias)
        self.norm = BatchNorm(d, cfg, f"{name}.norm") if cfg.norm else None
        self.width = d


def sdtcm_forward(input: Var, params: SdTcmBlockParams, tape: Tape, record: dict | None = None) -> Var:
    """One SD-TCM block. ``record`` (optional) collects the block's spike tensors."""
    if input.shape[-1] != params.width:
        raise ValueError(f"block expects width {params.width}, got {input.shape[-1]}")
    u = params.norm(tape, input) if params.norm is not None else input
    s = params.temporal(tape, u)
    if params.mode == "bidirectional":
        s_rev = ops.reverse_time(params.temporal_rev(tape, ops.reverse_time(u)))
        s = ops.concat(s, s_rev)
    rpe = ops.add(input, params.linear1(tape, s))
    s2 = params.spatial(tape, rpe)
    if record is not None:
        record.setdefault("tn", []).append(s.value)
        record.setdefault("sn", []).append(s2.value)
    return ops.add(rpe, params.linear2(tape, s2))


def readout(tape: Tape, x: Var, head: Linear) -> Var:
    """Temporal mean pooling followed by an affine map to class logits."""
    return head(tape, ops.mean_time(x))


class FeedForwardSNN(Module):
    """``n_in -> width x depth -> classes``: linear then spiking neuron per hidden layer."""

    def __init__(self, cfg: TrainConfig):
        rng = np.random.default_rng(cfg.seed)
        self.cfg = cfg
        self.linears = []
        self.neurons = []
        n = cfg.n_in
        for i in range(cfg.depth):
            self.linears.append(Linear(n, cfg.width, rng, f"fc{i}", cfg.dtype, cfg.hidden_bias))
            if cfg.model == "prf":
                self.neurons.append(PrfNeuron(cfg.width, cfg, rng, f"prf{i}"))
            else:
                self.neurons.append(LifNeuron(cfg.lif_beta, cfg))
            n = cfg.width
        self.head = Linear(n, cfg.n_classes, rng, "head", cfg.dtype)

    def forward(self, tape: Tape, x: Var, record: dict | None = None) -> Var:
        h = x
        for lin, neuron in zip(self.linears, self.neurons):
            h = neuron(tape, lin(tape, h))
            if record is not None:
                record.setdefault("spikes", []).append(h.value)
        return readout(tape, h, self.head)


class SdTcmNet(Module):
    """Per-timestep embedding, a stack of SD-TCM blocks, mean-pool readout."""

    def __init__(self, cfg: TrainConfig):
        rng = np.random.default_rng(cfg.seed)
        self.cfg = cfg
        self.embed = Linear(cfg.n_in, cfg.width, rng, "embed", cfg.dtype, cfg.hidden_bias)
        self.blocks = [SdTcmBlockParams(cfg.width, cfg, rng, f"block{i}") for i in range(cfg.depth)]
        self.head = Linear(cfg.width, cfg.n_classes, rng, "head", cfg.dtype)

    def forward(self, tape: Tape, x: Var, record: dict | None = None) -> Var:
        h = self.embed(tape, x)
        for block in self.blocks:
            h = sdtcm_forward(h, block, tape, record)
        return readout(tape, h, self.head)

    def set_training(self, flag: bool):
        for block in self.blocks:
            if block.norm is not None:
                block.norm.training = flag


def build_model(cfg: TrainConfig) -> Module:
    return SdTcmNet(cfg) if cfg.model == "sdtcm" else FeedForwardSNN(cfg)
