"""Wall-clock comparison of sequential (per-step graph) and parallel LIF training steps."""

from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass

import numpy as np

from ..traingrad import ops
from ..traingrad.model import lif_sequential_graph
from ..traingrad.tape import Param, Tape
from ..seqcore import build_lif_kernel

MIN_REPEATS = 3
BENCH_HEADER = ("seq_len", "batch", "channels", "mode", "phase", "ms", "repeats")


@dataclass(frozen=True)
class BenchRecord:
    seq_len: int
    batch: int
    channels: int
    mode: str
    phase: str
    ms: float
    repeats: int

    def as_dict(self) -> dict:
        return asdict(self)


def _step(mode: str, x: np.ndarray, gain: Param, readout: np.ndarray, beta: float, v_th: float):
    """One forward and backward pass; returns ``(forward_s, backward_s)``."""
    spec = ops.SurrogateSpec()
    gain.zero_grad()
    t0 = time.perf_counter()
    tape = Tape()
    c = ops.mul(tape.constant(x), tape.watch(gain))
    if mode == "sequential":
        s = lif_sequential_graph(c, beta, v_th, spec)
    else:
        T, _, N = x.shape
        K = build_lif_kernel(np.full(N, beta), T).values.astype(x.dtype)
        s = ops.lif_fire(ops.causal_conv(c, tape.constant(K)), v_th, beta, spec)
    loss = ops.weighted_sum(s, readout)
    t1 = time.perf_counter()
    tape.backward(loss)
    t2 = time.perf_counter()
    return t1 - t0, t2 - t1


def bench(
    seq_lens,
    batch: int = 64,
    channels: int = 128,
    repeats: int = 3,
    modes=("sequential", "parallel"),
    beta: float = 0.9,
    seed: int = 0,
    dtype: str = "float32",
) -> list[BenchRecord]:
    """Median forward, backward and total time per mode and sequence length.

    One warm-up step per configuration is run and discarded.
    """
    if repeats < MIN_REPEATS:
        raise ValueError(f"repeats must be at least {MIN_REPEATS}")
    for mode in modes:
        if mode not in ("sequential", "parallel"):
            raise ValueError(f"unknown bench mode {mode!r}")
    records = []
    for L in seq_lens:
        rng = np.random.default_rng([seed, int(L)])
        x = (rng.standard_normal((L, batch, channels)) + 0.5).astype(dtype)
        readout = rng.standard_normal((L, batch, channels)).astype(dtype)
        for mode in modes:
            gain = Param(np.ones(channels, dtype=dtype))
            _step(mode, x, gain, readout, beta, 1.0)
            fwd, bwd, tot = [], [], []
            for _ in range(repeats):
                f, b = _step(mode, x, gain, readout, beta, 1.0)
                fwd.append(f)
                bwd.append(b)
                tot.append(f + b)
            for phase, vals in (("forward", fwd), ("backward", bwd), ("total", tot)):
                ms = statistics.median(vals) * 1e3
                records.append(BenchRecord(int(L), batch, channels, mode, phase, ms, repeats))
    return records


def speedups(records: list[BenchRecord]) -> dict[int, float]:
    """Sequential over parallel median total time per sequence length."""
    tot = {(r.seq_len, r.mode): r.ms for r in records if r.phase == "total"}
    out = {}
    for L in sorted({r.seq_len for r in records}):
        if (L, "sequential") in tot and (L, "parallel") in tot:
            out[L] = tot[(L, "sequential")] / tot[(L, "parallel")]
    return out
